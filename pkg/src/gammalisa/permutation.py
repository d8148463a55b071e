"""Monte Carlo conditional-permutation p-values.

This is the reference the analytic bounds are checked against.  For vertex
``i`` a permutation fixing ``i`` sends ``m_i`` uniformly chosen other regions
into ``i``'s neighbour slots, so ``gamma_i(pi)`` is a without-replacement
sample sum from the off-diagonal similarity row.  Each vertex draws from its
own generator seeded by ``(seed, stream, vertex)``, which makes results
independent of the thread schedule.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .gamma import Kernel, as_panel, row_summaries, local_gamma, similarity_rows
from .graph import WeightGraph

_LOCAL_STREAM = 0
_GLOBAL_STREAM = 1
# relative slack when comparing permuted and observed deviations, so exact
# ties (integer-valued kernels, symmetric rows) count as "at least as extreme"
_TIE_RTOL = 1e-9


def vertex_rng(seed: int, stream: int, vertex: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(vertex)))
    return np.random.Generator(np.random.PCG64(ss))


def offdiag_row(kernel: Kernel, y: np.ndarray, i: int) -> np.ndarray:
    row = similarity_rows(kernel, y, [i])[0]
    return np.delete(row, i)


def sample_sums(values: np.ndarray, m: int, B: int, rng: np.random.Generator) -> np.ndarray:
    """``B`` sums of ``m`` values drawn without replacement from ``values``."""
    N = len(values)
    if m == 0:
        return np.zeros(B)
    if m == N:
        return np.full(B, values.sum())
    # draw the smaller side and complement if needed
    k = min(m, N - m)
    idx = np.tile(np.arange(N), (B, 1))
    rows = np.arange(B)
    for s in range(k):
        j = s + rng.integers(0, N - s, size=B)
        tmp = idx[rows, s].copy()
        idx[rows, s] = idx[rows, j]
        idx[rows, j] = tmp
    part = values[idx[:, :k]].sum(axis=1)
    return part if k == m else values.sum() - part


def exhaustive_sums(values: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """Statistic under every permutation of the ``N`` non-focal regions.

    ``slots`` are the positions (in the off-diagonal ordering) of the focal
    vertex's neighbours.
    """
    N = len(values)
    perms = np.array(list(itertools.permutations(range(N))), dtype=np.int64).reshape(-1, N)
    return values[perms[:, slots]].sum(axis=1)


def _tie_tol(values, m, center):
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)) * max(m, 1), abs(center))
    return _TIE_RTOL * scale


def _prepare(kernel, y, g):
    y = as_panel(y)
    if y.shape[1] != g.n:
        raise ValueError(f"panel has {y.shape[1]} regions but graph has {g.n} vertices")
    gam = local_gamma(kernel, y, g)
    mean, _ = row_summaries(kernel, y)
    return y, gam, g.degrees * mean


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def mc_local_pvalues(kernel: Kernel, y, g: WeightGraph, B: int, seed: int = 0,
                     exhaustive: bool = False, threads: int = 1) -> np.ndarray:
    """Permutation p-value per vertex.

    Sampling mode returns the add-one estimate ``(1 + hits) / (B + 1)``.
    With ``exhaustive=True`` all ``(n-1)!`` permutations are enumerated and
    the exact fraction is returned (``B`` and ``seed`` are ignored; only
    sensible for ``n <= 9``).
    """
    if B < 1 and not exhaustive:
        raise ValueError("B must be >= 1")
    y, gam, center = _prepare(kernel, y, g)
    n = g.n
    if exhaustive and math.factorial(max(n - 1, 0)) > 10_000_000:
        raise ValueError(f"exhaustive enumeration of {n - 1}! permutations is too large")

    def one(i):
        m = int(g.degrees[i])
        if n < 2 or m == 0:
            return 1.0
        vals = offdiag_row(kernel, y, i)
        t = abs(gam[i] - center[i])
        tol = _tie_tol(vals, m, center[i])
        if exhaustive:
            nb = g.neighbors(i)
            slots = nb - (nb > i)
            sums = exhaustive_sums(vals, slots)
            return float(np.mean(np.abs(sums - center[i]) >= t - tol))
        sums = sample_sums(vals, m, B, vertex_rng(seed, _LOCAL_STREAM, i))
        hits = int(np.count_nonzero(np.abs(sums - center[i]) >= t - tol))
        return (1 + hits) / (B + 1)

    return np.array(_map(one, range(n), threads))


def mc_global_pvalue(kernel: Kernel, y, g: WeightGraph, B: int, seed: int = 0,
                     threads: int = 1) -> float:
    """Add-one Monte Carlo p-value for the global statistic.

    Each replicate draws an independent conditional permutation for every
    vertex and sums the permuted local statistics.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    y, gam, center = _prepare(kernel, y, g)
    n = g.n
    c_tot = float(np.sum(center))
    t = abs(float(np.sum(gam)) - c_tot)

    def one(i):
        m = int(g.degrees[i])
        if n < 2 or m == 0:
            return np.zeros(B)
        vals = offdiag_row(kernel, y, i)
        return sample_sums(vals, m, B, vertex_rng(seed, _GLOBAL_STREAM, i))

    total = np.zeros(B)
    scale = 1.0
    # fixed-order reduction keeps the result independent of the thread count
    chunk = 64
    for start in range(0, n, chunk):
        parts = _map(one, range(start, min(start + chunk, n)), threads)
        for s in parts:
            total += s
            scale = max(scale, float(np.max(np.abs(s), initial=0.0)))
    tol = _TIE_RTOL * max(scale * n, abs(c_tot))
    hits = int(np.count_nonzero(np.abs(total - c_tot) >= t - tol))
    return (1 + hits) / (B + 1)
