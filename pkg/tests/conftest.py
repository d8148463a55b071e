import itertools
import os
from collections import deque

import numpy as np
import pytest

from gammalisa.graph import WeightGraph


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("GAMMALISA_SLOW"):
        return
    skip = pytest.mark.skip(reason="full-scale run; set GAMMALISA_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# ---------------------------------------------------------------- generators


def random_graph(rng, n, mean_degree=3.0):
    p = min(1.0, mean_degree / max(n - 1, 1))
    a = np.triu(rng.random((n, n)) < p, 1)
    return WeightGraph.from_sparse((a | a.T).astype(float))


def random_instance(rng, n_max=40, t_max=6, n_min=8):
    n = int(rng.integers(n_min, n_max + 1))
    T = int(rng.integers(1, t_max + 1))
    return random_graph(rng, n), rng.standard_normal((T, n))


# ------------------------------------------------------------------- oracles
# Written without the package's vectorized paths: plain loops over pairs.


def _pair_lambda(name, y, i, j, ybar, med, M):
    T = y.shape[0]
    if name == "moran":
        a = [y[t, i] - ybar[t] for t in range(T)]
        b = [y[t, j] - ybar[t] for t in range(T)]
        return sum(a[s] * M[s][t] * b[t] for s in range(T) for t in range(T))
    if name in ("geary-l2", "geary-l1"):
        p = 2 if name == "geary-l2" else 1
        return sum(abs(y[t, i] - y[t, j]) ** p for t in range(T))
    if name == "binary":
        total = 0
        for t in range(T):
            bi = 1 if y[t, i] >= med[t] else -1
            bj = 1 if y[t, j] >= med[t] else -1
            total += bi * bj
        return float(total)
    raise ValueError(name)


def _panel_constants(y, metric):
    T, n = y.shape
    ybar = [sum(y[t, k] for k in range(n)) / n for t in range(T)]
    med = []
    for t in range(T):
        col = sorted(y[t])
        med.append(col[n // 2] if n % 2 else 0.5 * (col[n // 2 - 1] + col[n // 2]))
    M = np.eye(T) if metric is None else metric
    return ybar, med, M.tolist()


def naive_lambda(name, y, i, j, metric=None):
    return _pair_lambda(name, y, i, j, *_panel_constants(y, metric))


def naive_lambda_matrix(name, y, metric=None):
    y = np.asarray(y, dtype=float)
    consts = _panel_constants(y, metric)
    n = y.shape[1]
    lam = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                lam[i, j] = _pair_lambda(name, y, i, j, *consts)
    return lam


def naive_lisa(name, y, w, metric=None):
    """Double sums for gamma, row mean, row variance and center."""
    n = y.shape[1]
    lam = naive_lambda_matrix(name, y, metric)
    gamma = np.zeros(n)
    mean = np.zeros(n)
    var = np.zeros(n)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        gamma[i] = sum(w[i, j] * lam[i, j] for j in others)
        if n > 1:
            mean[i] = sum(lam[i, j] for j in others) / (n - 1)
            var[i] = sum((lam[i, j] - mean[i]) ** 2 for j in others) / (n - 1)
    deg = w.sum(axis=1)
    return gamma, mean, var, deg * mean


def bfs_distances(g):
    n = g.n
    adj = [list(g.neighbors(i)) for i in range(n)]
    dist = np.full((n, n), -1)
    for s in range(n):
        dist[s, s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1
                    q.append(v)
    return dist


def exact_permutation_pvalue(name, y, w, i):
    """Enumerate every permutation fixing ``i``; fraction at least as extreme."""
    n = y.shape[1]
    lam = naive_lambda_matrix(name, y)
    others = [j for j in range(n) if j != i]
    center = w[i].sum() * sum(lam[i, j] for j in others) / (n - 1)
    obs = abs(sum(w[i, j] * lam[i, j] for j in others) - center)
    hits = total = 0
    for perm in itertools.permutations(others):
        pi = dict(zip(others, perm))
        stat = sum(w[i, j] * lam[i, pi[j]] for j in others)
        hits += abs(stat - center) >= obs - 1e-9 * max(1.0, abs(obs))
        total += 1
    return hits / total
