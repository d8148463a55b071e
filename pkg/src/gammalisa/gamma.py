"""Multivariate LISA statistics written as local gamma indices.

Every statistic has the form ``gamma_i = sum_j w_ij * lam(y_i, y_j)`` for a
pairwise similarity ``lam``.  Data are a ``T x n`` array ``Y`` whose column
``i`` is region ``i``'s length-``T`` vector.  Normalizing constants are
omitted throughout; permutation p-values do not depend on them.

Four kernels are provided:

``moran``     ``<y_i - ybar, y_j - ybar>_M`` for a symmetric positive-definite ``M``
``geary-l2``  ``||y_i - y_j||_2^2``
``geary-l1``  ``||y_i - y_j||_1``
``binary``    ``<beta_i, beta_j>`` with ``beta`` the +-1 above/below-median signs
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .graph import WeightGraph

KERNEL_NAMES = ("moran", "geary-l2", "geary-l1", "binary")

# rows of the dense similarity matrix materialized at once
_BLOCK = 512


class KernelError(ValueError):
    pass


class MetricNotPositiveDefinite(KernelError):
    pass


@dataclass(frozen=True, eq=False)
class Kernel:
    """Similarity function selector.

    Build with :func:`moran`, :func:`geary`, :func:`binary` or
    :func:`kernel_from_name`.
    """

    name: str
    metric: Optional[np.ndarray] = None
    p: int = 2

    def __repr__(self):
        return f"Kernel({self.name!r})"


def moran(metric=None) -> Kernel:
    """Moran kernel; ``metric`` defaults to the identity.

    A user-supplied matrix must be symmetric and admit a Cholesky
    factorization.
    """
    if metric is None:
        return Kernel("moran")
    m = np.array(metric, dtype=float, ndmin=2)
    if m.shape[0] != m.shape[1]:
        raise KernelError(f"metric matrix must be square, got {m.shape}")
    if not np.all(np.isfinite(m)) or not np.allclose(m, m.T, rtol=1e-12, atol=0):
        raise KernelError("metric matrix must be finite and symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise MetricNotPositiveDefinite("metric matrix is not positive definite") from None
    return Kernel("moran", metric=m)


def geary(p: int = 2) -> Kernel:
    if p not in (1, 2):
        raise KernelError(f"Geary norm order must be 1 or 2, got {p}")
    return Kernel(f"geary-l{p}", p=p)


def binary() -> Kernel:
    return Kernel("binary")


def kernel_from_name(name: str, metric=None) -> Kernel:
    if name == "moran":
        return moran(metric)
    if metric is not None:
        raise KernelError("a metric matrix only applies to the moran kernel")
    if name == "geary-l2":
        return geary(2)
    if name == "geary-l1":
        return geary(1)
    if name == "binary":
        return binary()
    raise KernelError(f"unknown kernel {name!r}; expected one of {KERNEL_NAMES}")


def as_panel(y) -> np.ndarray:
    """Validate ``y`` as a finite ``T x n`` float array (1-D means ``T = 1``)."""
    y = np.array(y, dtype=float, ndmin=2)
    if y.ndim != 2:
        raise ValueError(f"panel must be 2-D (T x n), got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("panel contains non-finite values")
    return y


def _metric(kernel: Kernel, T: int) -> np.ndarray:
    if kernel.metric is None:
        return np.eye(T)
    if kernel.metric.shape != (T, T):
        raise KernelError(f"metric matrix is {kernel.metric.shape}, data have T={T}")
    return kernel.metric


def signs(y: np.ndarray) -> np.ndarray:
    """+-1 matrix: +1 where a value is at or above its time's cross-region median."""
    med = np.median(y, axis=1, keepdims=True)
    return np.where(y >= med, 1.0, -1.0)


def _features(kernel: Kernel, y: np.ndarray):
    """Per-kernel transformed data ``(left, right)`` with ``lam = left_i . right_j``
    for the bilinear kernels; ``None`` for Geary."""
    if kernel.name == "moran":
        z = y - y.mean(axis=1, keepdims=True)
        return _metric(kernel, y.shape[0]) @ z, z
    if kernel.name == "binary":
        b = signs(y)
        return b, b
    return None


def similarity(kernel: Kernel, y, i: int, j: int) -> float:
    """``lam(y_i, y_j)`` for one off-diagonal pair."""
    y = as_panel(y)
    n = y.shape[1]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"vertex pair ({i}, {j}) out of range for n={n}")
    if i == j:
        raise ValueError("similarity is only defined for i != j")
    if kernel.name == "moran":
        ybar = y.mean(axis=1)
        a, b = y[:, i] - ybar, y[:, j] - ybar
        return float(a @ _metric(kernel, y.shape[0]) @ b)
    if kernel.name == "binary":
        b = signs(y)
        return float(b[:, i] @ b[:, j])
    d = np.abs(y[:, i] - y[:, j])
    return float(np.sum(d ** kernel.p))


def similarity_rows(kernel: Kernel, y: np.ndarray, rows) -> np.ndarray:
    """Dense block ``lam(y_i, y_j)`` for ``i`` in ``rows`` and all ``j``.

    Diagonal entries carry whatever the formula gives (zero for Geary);
    callers needing off-diagonal summaries must exclude them.
    """
    rows = np.asarray(rows)
    feats = _features(kernel, y)
    if feats is not None:
        left, right = feats
        return left[:, rows].T @ right
    pts = y.T
    if kernel.p == 2:
        return cdist(pts[rows], pts, "sqeuclidean")
    return cdist(pts[rows], pts, "cityblock")


@dataclass
class LisaVector:
    """Local statistics plus the per-row permutation summaries.

    ``rowmean[i]`` and ``rowvar[i]`` are the mean and ``(n-1)``-denominator
    variance of ``lam(y_i, y_j)`` over ``j != i``; ``center = degrees * rowmean``
    is the permutation mean of ``gamma``.
    """

    kernel: str
    gamma: np.ndarray
    center: np.ndarray
    rowmean: np.ndarray
    rowvar: np.ndarray
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return len(self.gamma)

    @property
    def deviation(self) -> np.ndarray:
        return self.gamma - self.center


def local_gamma(kernel: Kernel, y: np.ndarray, g: WeightGraph) -> np.ndarray:
    """``gamma_i`` for all vertices in ``O(T * nnz(W))`` (plus ``O(T^2 n)`` for Moran)."""
    w = g.adjacency
    feats = _features(kernel, y)
    if feats is not None:
        # diag(left^T right W) without forming the n x n product
        left, right = feats
        return np.einsum("ti,ti->i", left, np.asarray(w.T @ right.T).T)
    if kernel.p == 2:
        # diag{[(d + d^T) - 2 Y^T Y] W}
        d = np.einsum("ti,ti->i", y, y)
        yw = np.asarray(w.T @ y.T).T
        return g.degrees * d + w @ d - 2.0 * np.einsum("ti,ti->i", y, yw)
    # no bilinear form for l1: walk the stored edges
    a = w.tocoo()
    vals = np.abs(y[:, a.row] - y[:, a.col]).sum(axis=0)
    return np.bincount(a.row, weights=vals, minlength=g.n)


def row_summaries(kernel: Kernel, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Off-diagonal row mean and variance of the similarity matrix."""
    n = y.shape[1]
    mean = np.zeros(n)
    var = np.zeros(n)
    if n < 2:
        return mean, var
    for start in range(0, n, _BLOCK):
        rows = np.arange(start, min(start + _BLOCK, n))
        lam = similarity_rows(kernel, y, rows)
        diag = lam[np.arange(len(rows)), rows]
        m = (lam.sum(axis=1) - diag) / (n - 1)
        dev2 = (lam - m[:, None]) ** 2
        v = (dev2.sum(axis=1) - (diag - m) ** 2) / (n - 1)
        mean[rows] = m
        var[rows] = np.maximum(v, 0.0)
    return mean, var


def lisa(kernel: Kernel, y, g: WeightGraph) -> LisaVector:
    """Local gamma statistics and their permutation centering/spread."""
    y = as_panel(y)
    if y.shape[1] != g.n:
        raise ValueError(f"panel has {y.shape[1]} regions but graph has {g.n} vertices")
    gam = local_gamma(kernel, y, g)
    mean, var = row_summaries(kernel, y)
    return LisaVector(
        kernel=kernel.name,
        gamma=gam,
        center=g.degrees * mean,
        rowmean=mean,
        rowvar=var,
        degrees=g.degrees.copy(),
    )


def gisa(lv: LisaVector) -> tuple[float, float]:
    """Global statistic and its permutation center: sums of the local ones."""
    return float(np.sum(lv.gamma)), float(np.sum(lv.center))
