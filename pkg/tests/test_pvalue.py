import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import exact_permutation_pvalue, random_graph, random_instance
from gammalisa.gamma import KERNEL_NAMES, binary, kernel_from_name, lisa, moran
from gammalisa.graph import GridSpec, WeightGraph, from_edge_list, grid
from gammalisa.permutation import mc_global_pvalue, mc_local_pvalues, sample_sums, vertex_rng
from gammalisa.pvalue import (
    BALANCED,
    DEGENERATE,
    STANDARD,
    balanced_bound,
    balanced_constant_log,
    choose_bounds,
    global_pvalue,
    local_pvalues,
    standard_bound,
)
from gammalisa.simulation import sample_grid_gaussian

PATH3 = from_edge_list([(0, 1), (1, 2)], 3)


def mc_band_ok(p, phat, B):
    return p >= phat - 3 * np.sqrt(phat * (1 - phat) / B)


# ------------------------------------------------------------ analytic bounds


def test_standard_bound_direct_formula():
    # (n-1) t^2 / (2 m (n-m-1) s^2) with n=20, m=3, t=4, s2=2 -> 19*16/(2*3*16*2)
    arg = 19 * 16 / (2 * 3 * 16 * 2)
    assert standard_bound(4.0, 3, 20, 2.0) == pytest.approx(math.erfc(math.sqrt(arg)), rel=1e-13)


def test_balanced_bound_direct_formula():
    n, m, t, s2 = 41, 18, 5.0, 1.5
    lo, hi = 18, 22
    wm, wp = lo / hi ** 2, hi / lo ** 2
    a = (n - 1) * wp
    c0 = mp.sqrt(a) * mp.gamma(a) / mp.gamma(a + mp.mpf(1) / 2)
    x = mp.exp(-t ** 2 * wm / (2 * s2))
    want = float(c0 * mp.betainc(a, 0.5, 0, x, regularized=True))
    assert balanced_bound(t, m, n, s2) == pytest.approx(min(1.0, want), rel=1e-10)


@pytest.mark.parametrize("n", [10, 100, 1000, 10_000])
def test_balanced_constant_finite_at_scale(n):
    for m in (n // 4 + 1, n // 2, (n - 1) // 2, 3 * n // 4 - 2):
        log_c0, a = balanced_constant_log(np.array([m]), n)
        assert np.isfinite(log_c0).all() and np.isfinite(a).all()
        for t in (0.0, 1.0, 10.0, 1e3):
            p = balanced_bound(t, m, n, 1.0)
            assert 0.0 <= p <= 1.0


def test_branch_selection():
    tags = choose_bounds(np.array([0, 1, 5, 10, 19]), 20)
    assert tags.tolist() == [DEGENERATE, STANDARD, STANDARD, BALANCED, DEGENERATE]
    assert choose_bounds(np.array([6]), 20, threshold=0.25)[0] == BALANCED
    assert choose_bounds(np.array([6]), 20, threshold=0.4)[0] == STANDARD


def test_zero_deviation_gives_one():
    assert standard_bound(0.0, 2, 30, 1.0) == 1.0
    assert balanced_bound(0.0, 14, 30, 1.0) == 1.0
    # toy path: vertex 2 has gamma = 0 and row mean 0
    rep = local_pvalues(lisa(moran(), np.array([[1.0, 3.0, 2.0]]), PATH3), PATH3)
    assert rep.deviation[2] == 0.0 and rep.p_raw[2] == 1.0 and rep.sign[2] == 0


def test_isolated_and_full_degree_are_degenerate():
    g = from_edge_list([(0, 1), (0, 2), (0, 3)], 5)  # vertex 4 isolated
    y = np.random.default_rng(0).standard_normal((2, 5))
    rep = local_pvalues(lisa(moran(), y, g), g)
    assert rep.bound_used[4] == DEGENERATE and rep.p_raw[4] == 1.0
    star = from_edge_list([(0, j) for j in range(1, 5)], 5)
    rep = local_pvalues(lisa(moran(), y, star), star)
    assert rep.bound_used[0] == DEGENERATE and rep.p_raw[0] == 1.0


def test_constant_row_is_degenerate():
    y = np.ones((3, 6))
    g = random_graph(np.random.default_rng(1), 6, 2.5)
    rep = local_pvalues(lisa(binary(), y, g), g)
    assert np.all(rep.p_raw == 1.0)


def test_sign_and_deviation():
    lv = lisa(moran(), np.array([[1.0, 3.0, 2.0]]), PATH3)
    rep = local_pvalues(lv, PATH3)
    np.testing.assert_allclose(rep.deviation, np.abs(lv.gamma - lv.center))
    np.testing.assert_array_equal(rep.sign, np.sign(lv.gamma - lv.center))
    assert np.all((rep.sign != 0) | (rep.deviation == 0))


@settings(max_examples=100, deadline=None)
@given(st.integers(5, 5000), st.data(), st.floats(1e-3, 1e3))
def test_monotone_in_deviation(n, data, s2):
    m = data.draw(st.integers(1, n - 2))
    t = np.sort(np.array(data.draw(st.lists(st.floats(0, 1e3), min_size=2, max_size=20))))
    for fn in (standard_bound, balanced_bound):
        p = fn(t, np.full_like(t, m), n, np.full_like(t, s2))
        assert np.all(np.diff(p) <= 1e-15)
        assert np.all((p >= 0) & (p <= 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 30))
def test_pvalues_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    g, y = random_instance(rng, n_max=30)
    for name in ("moran", "geary-l2", "geary-l1"):
        k = kernel_from_name(name)
        a = local_pvalues(lisa(k, y, g), g).p_raw
        b = local_pvalues(lisa(k, c * y, g), g).p_raw
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)
        ga = global_pvalue(lisa(k, y, g), g).p
        gb = global_pvalue(lisa(k, c * y, g), g).p
        assert ga == pytest.approx(gb, rel=1e-10, abs=1e-12)
    f = np.arctan(y) + 2 * y
    np.testing.assert_array_equal(
        local_pvalues(lisa(binary(), y, g), g).p_raw, local_pvalues(lisa(binary(), f, g), g).p_raw
    )


def test_global_zero_and_constant():
    g = grid(GridSpec(3, 3))
    rep = global_pvalue(lisa(moran(), np.ones((2, 9)), g), g)
    assert rep.p == 1.0 and rep.statistic == 0.0 and rep.center == 0.0


def test_global_upsilon():
    rng = np.random.default_rng(4)
    g, y = random_instance(rng)
    lv = lisa(moran(), y, g)
    n, m = g.n, g.degrees
    want = sum(m[i] * (n - m[i] - 1) / (n - 1) * lv.rowvar[i] for i in range(n))
    rep = global_pvalue(lv, g)
    assert rep.upsilon_sq == pytest.approx(want, rel=1e-12)
    assert rep.p == pytest.approx(math.erfc(rep.deviation / (2 * math.sqrt(want))), rel=1e-12)


def test_global_power_on_correlated_grid():
    spec = GridSpec(20, 25)
    g = grid(spec)
    hits = 0
    for r in range(50):
        y = sample_grid_gaussian(spec, 5, 0.1, seed=2024, replicate=r)
        hits += global_pvalue(lisa(moran(), y, g), g).p < 1e-3
    assert hits >= 0.95 * 50


# ------------------------------------------------------------ Monte Carlo oracle


def test_sample_sums_is_without_replacement():
    vals = np.arange(6, dtype=float)
    sums = sample_sums(vals, 6, 10, vertex_rng(0, 0, 0))
    np.testing.assert_array_equal(sums, 15.0)
    # with m = 5 the sum is 15 minus the single excluded value
    s = sample_sums(vals, 5, 2000, vertex_rng(1, 0, 0))
    assert set(np.unique(s)) <= set(15.0 - vals)
    s1 = sample_sums(vals, 2, 50_000, vertex_rng(2, 0, 0))
    # mean m*mu, variance m (N-m)/(N-1) * sigma^2_pop
    assert s1.mean() == pytest.approx(5.0, abs=0.03)
    assert s1.var() == pytest.approx(2 * 4 / 5 * np.var(vals), rel=0.03)


def test_mc_constant_data():
    g = grid(GridSpec(3, 3))
    for name in KERNEL_NAMES:
        p = mc_local_pvalues(kernel_from_name(name), np.ones((2, 9)), g, 200, seed=3)
        np.testing.assert_array_equal(p, 1.0)
        assert mc_global_pvalue(kernel_from_name(name), np.ones((2, 9)), g, 200, seed=3) == 1.0


def test_mc_deterministic_and_thread_independent():
    rng = np.random.default_rng(9)
    g, y = random_instance(rng)
    k = moran()
    a = mc_local_pvalues(k, y, g, 500, seed=42)
    b = mc_local_pvalues(k, y, g, 500, seed=42, threads=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, mc_local_pvalues(k, y, g, 500, seed=43))
    ga = mc_global_pvalue(k, y, g, 500, seed=42)
    assert ga == mc_global_pvalue(k, y, g, 500, seed=42, threads=3)


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_exhaustive_matches_enumeration_path5(name):
    g = from_edge_list([(0, 1), (1, 2), (2, 3), (3, 4)], 5)
    y = np.random.default_rng(KERNEL_NAMES.index(name)).standard_normal((2, 5))
    got = mc_local_pvalues(kernel_from_name(name), y, g, 1, exhaustive=True)
    want = [exact_permutation_pvalue(name, y, g.to_dense(), i) for i in range(5)]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-15)


def test_mc_converges_to_exact():
    g = from_edge_list([(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)], 5)
    y = np.random.default_rng(5).standard_normal((3, 5))
    exact = mc_local_pvalues(moran(), y, g, 1, exhaustive=True)
    B = 40_000
    est = mc_local_pvalues(moran(), y, g, B, seed=1)
    assert np.all(np.abs(est - exact) <= 4 * np.sqrt(exact * (1 - exact) / B) + 2 / B)


def test_global_mc_grid12():
    spec = GridSpec(3, 4)
    g = grid(spec)
    y = sample_grid_gaussian(spec, 3, 0.1, seed=0)
    B = 50_000
    for name in KERNEL_NAMES:
        k = kernel_from_name(name)
        p = global_pvalue(lisa(k, y, g), g).p
        assert mc_band_ok(p, mc_global_pvalue(k, y, g, B, seed=0), B)


def test_local_bound_conservative_random_n30():
    rng = np.random.default_rng(30)
    g = random_graph(rng, 30)
    y = rng.standard_normal((4, 30))
    B = 20_000
    p = local_pvalues(lisa(moran(), y, g), g).p_raw
    phat = mc_local_pvalues(moran(), y, g, B, seed=30)
    bad = np.flatnonzero(~mc_band_ok(p, phat, B))
    assert len(bad) == 0, f"{len(bad)}/30 vertices below the MC band: " + ", ".join(
        f"v{i} p={p[i]:.4f} mc={phat[i]:.4f}" for i in bad[:5])


def test_branch_consistency_dense_degrees():
    """Both bounds on balanced-degree vertices: valid probabilities and
    conservative relative to Monte Carlo."""
    rng = np.random.default_rng(77)
    B = 20_000
    failures = []
    for inst in range(5):
        n = int(rng.integers(16, 33))
        a = np.triu(rng.random((n, n)) < 0.5, 1)
        g = WeightGraph.from_sparse((a | a.T).astype(float))
        y = rng.standard_normal((3, n))
        for name in KERNEL_NAMES:
            k = kernel_from_name(name)
            lv = lisa(k, y, g)
            m = g.degrees
            ok = (m > 0) & (m < n - 1) & (lv.rowvar > 0)
            t = np.abs(lv.gamma - lv.center)[ok]
            ps = standard_bound(t, m[ok], n, lv.rowvar[ok])
            pb = balanced_bound(t, m[ok], n, lv.rowvar[ok])
            assert np.all((ps >= 0) & (ps <= 1) & (pb >= 0) & (pb <= 1))
            phat = mc_local_pvalues(k, y, g, B, seed=inst)[ok]
            failures += [(inst, name, "standard") for _ in np.flatnonzero(~mc_band_ok(ps, phat, B))]
            failures += [(inst, name, "balanced") for _ in np.flatnonzero(~mc_band_ok(pb, phat, B))]
    assert not failures, f"{len(failures)} non-conservative vertex bounds, e.g. {failures[:3]}"
