"""Benjamini-Hochberg adjustment, global and neighbourhood-local."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightGraph

DEFAULT_LEVELS = (0.05, 0.01)


def _check(p):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("p-values must be a 1-D vector")
    if not np.all(np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must be finite and lie in [0, 1]")
    return p


def bh_adjust(p) -> np.ndarray:
    """Step-up BH adjusted p-values, ``q_(k) = min_{j >= k} n p_(j) / j``."""
    p = _check(p)
    n = len(p)
    if n == 0:
        return p.copy()
    order = np.argsort(p, kind="stable")
    scaled = p[order] * (n / np.arange(1, n + 1))  # ratio first so q >= p survives rounding
    q = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(n)
    out[order] = np.minimum(q, 1.0)
    return out


def spatial_bh_adjust(p, g: WeightGraph) -> np.ndarray:
    """BH within each closed neighbourhood ``{i} | N(i)``; vertex ``i`` keeps
    its own adjusted value.  Isolated vertices are returned unadjusted.

    Each vertex is corrected only for the tests in its neighbourhood, so
    the result is usually smaller than global BH and need not preserve the
    ordering of the raw p-values across vertices.
    """
    p = _check(p)
    if len(p) != g.n:
        raise ValueError(f"{len(p)} p-values for a graph with {g.n} vertices")
    out = np.empty(g.n)
    for i in range(g.n):
        nb = g.neighbors(i)
        if len(nb) == 0:
            out[i] = p[i]
            continue
        local = np.concatenate([[p[i]], p[nb]])
        out[i] = bh_adjust(local)[0]
    return out


@dataclass
class SignificanceTable:
    p_raw: np.ndarray
    p_adj: np.ndarray
    sign: np.ndarray
    levels: tuple = DEFAULT_LEVELS

    def significant(self, level) -> np.ndarray:
        return self.p_adj < level


def significance_table(p_raw, sign, method="global", g: WeightGraph | None = None,
                       levels=DEFAULT_LEVELS) -> SignificanceTable:
    """Adjust with ``method`` in {``global``, ``spatial``, ``none``}."""
    p_raw = _check(p_raw)
    if method == "global":
        adj = bh_adjust(p_raw)
    elif method == "spatial":
        if g is None:
            raise ValueError("spatial adjustment needs the weight graph")
        adj = spatial_bh_adjust(p_raw, g)
    elif method == "none":
        adj = p_raw.copy()
    else:
        raise ValueError(f"unknown FDR method {method!r}")
    return SignificanceTable(p_raw, adj, np.asarray(sign), tuple(levels))
