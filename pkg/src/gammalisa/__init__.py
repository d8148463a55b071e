"""Multivariate LISA/GISA gamma statistics with analytic permutation p-values."""

__version__ = "0.1.0"
