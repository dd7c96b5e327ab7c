import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from normnet import probes as P
from normnet.errors import DimensionError, RegimeError
from normnet.rng import stream


# ------------------------------------------------------------------ grids and metric

def test_uniform_grid():
    g = P.GridSpec(2, 5, -1, 1)
    X = g.points()
    assert X.shape == (25, 2) and g.size == 25
    assert g.covering_radius() == pytest.approx(0.25)
    assert X.min() == -1 and X.max() == 1


@given(st.integers(1, 4), st.integers(2, 200), st.integers(0, 1000))
def test_lhs_is_stratified(d, n, seed):
    X = P.GridSpec(d, n, kind="lhs", seed=seed).points()
    assert X.shape == (n, d)
    for j in range(d):
        cells = np.floor(X[:, j] * n).astype(int)
        assert sorted(cells) == list(range(n))


def test_lhs_is_seeded():
    a = P.GridSpec(3, 50, kind="lhs", seed=4).points()
    np.testing.assert_array_equal(a, P.GridSpec(3, 50, kind="lhs", seed=4).points())
    assert not np.array_equal(a, P.GridSpec(3, 50, kind="lhs", seed=5).points())


def test_default_grids():
    assert P.GridSpec.default(1).size == 100_000
    assert P.GridSpec.default(2).size == 512 ** 2
    assert P.GridSpec.default(4).kind == "lhs"


def test_rho2():
    assert P.rho2([1, 0, 0, 0], [0, 0, 0, 0]) == 0.5
    with pytest.raises(DimensionError):
        P.rho2([1, 2], [1])


# ------------------------------------------------------------------ packing

def brute_min_hamming(V):
    return min(int((a != b).sum()) for a, b in itertools.combinations(V, 2))


def brute_greedy(m):
    radius, chosen = m // 8, []
    for code in range(1 << m):
        if all(bin(code ^ c).count("1") > radius for c in chosen):
            chosen.append(code)
    return chosen


@given(st.integers(2, 12), st.integers(2, 40), st.integers(0, 2**31))
def test_min_pairwise_hamming_matches_brute_force(m, count, seed):
    V = np.where(stream(seed).random((count, m)) < 0.5, 1, -1).astype(np.int8)
    expected = 0 if len({tuple(v) for v in V}) < count else brute_min_hamming(V)
    assert P.min_pairwise_hamming(V) == expected


def test_min_pairwise_hamming_small_sets():
    assert P.min_pairwise_hamming(np.ones((1, 5), dtype=np.int8)) == 6


@pytest.mark.parametrize("m", [8, 10])
def test_greedy_packing_matches_naive_greedy(m):
    pack = P.greedy_sign_packing(m)
    codes = brute_greedy(m)
    assert len(pack) == len(codes)
    expected = P._codes_to_signs(np.array(codes, dtype=np.int64), m)
    np.testing.assert_array_equal(pack.vectors, expected)


@pytest.mark.parametrize("m", [8, 12, 16])
def test_packing_size_and_separation(m):
    pack = P.greedy_sign_packing(m)
    assert len(pack) >= 2 ** (m / 4)
    assert pack.min_hamming > m // 8
    assert set(np.unique(pack.vectors)) <= {-1, 1}


def test_packing_range():
    for m in (7, 25):
        with pytest.raises(ValueError):
            P.greedy_sign_packing(m)


# ------------------------------------------------------------------ bump class

def test_bump_profile():
    assert P.bump([[0.0, 0.0]])[0] == 1.0
    assert P.bump([[0.25, 0.0]])[0] == 0.0
    assert P.bump([[0.1, 0.3]])[0] == 0.0
    assert 0 < P.bump([[0.1, -0.1]])[0] < 1


@pytest.mark.parametrize("d,alpha", [(1, 1.0), (2, 0.5), (2, 2.0)])
def test_bump_constant_scales_into_unit_ball(d, alpha):
    C = P.bump_holder_constant(d, alpha)
    assert 0 < C <= 1
    # first derivative of g(4t) peaks near 4 * 0.9, so C must absorb it when r >= 1
    if alpha > 1:
        assert C * 4 * 0.9 <= 1


@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**31))
def test_bump_eval_peaks_at_lattice(d, N, seed):
    rng = stream(seed)
    a = np.where(rng.random((N,) * d) < 0.5, 1, -1)
    spec = P.BumpClassSpec.make(d, N, 1.0, a)
    pts = P.bump_grid_points(N, d)
    vals = P.bump_eval(spec, pts)
    np.testing.assert_allclose(vals, a.ravel() * spec.C_psi_alpha * N ** -1.0)
    # between lattice cells every bump vanishes
    assert np.all(P.bump_eval(spec, pts + 0.5 / N) == 0)


def test_bump_spec_validation():
    with pytest.raises(DimensionError):
        P.BumpClassSpec(2, 3, 1.0, 0.1, np.ones((3,)))
    with pytest.raises(ValueError):
        P.BumpClassSpec(1, 2, 1.0, 0.1, np.array([1, 0]))


# ------------------------------------------------------------------ Rademacher

def exact_linear_rademacher(X, K):
    n = X.shape[0]
    Xt = np.hstack([X, np.ones((n, 1))])
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=n)))
    return float((0.5 * K * np.abs(signs @ Xt).max(axis=1) / n).mean())


@given(st.integers(1, 8), st.integers(1, 3), st.floats(0.5, 4), st.integers(0, 2**31))
def test_rademacher_mc_matches_enumeration(n, d, K, seed):
    X = stream(seed).uniform(-1, 1, size=(n, d))
    est = P.rademacher_linear_lb(X, K, trials=4000, seed=seed)
    exact = exact_linear_rademacher(X, K)
    assert abs(est.mc_mean - exact) <= 5 * est.mc_stderr + 1e-12


def test_rademacher_bracket_and_stream_independence():
    X = stream(1).uniform(0, 1, size=(50, 2))
    est = P.rademacher_linear_lb(X, 1.0, trials=2000, seed=3, L=2)
    assert est.bracketed
    lb, ub = P.rademacher_bound_formulas(50, 2, 1.0, 2)
    assert est.paper_lb >= lb - 1e-15 and est.paper_ub == ub
    # one trial at a time gives the same per-trial draws
    single = [P.rademacher_linear_lb(X, 1.0, trials=1, seed=3).mc_mean]
    assert single[0] == pytest.approx(
        0.5 * np.abs((2.0 * stream(3, 0).integers(0, 2, size=50) - 1)
                     @ np.hstack([X, np.ones((50, 1))])).max() / 50)


def test_rademacher_bad_input():
    with pytest.raises(ValueError):
        P.rademacher_linear_lb(np.zeros((0, 2)), 1.0, 10, 0)
    with pytest.raises(ValueError):
        P.rademacher_linear_lb(np.zeros((3, 2)), -1.0, 10, 0)


# ------------------------------------------------------------------ Wasserstein

def exact_w1_1d(xs):
    """``E_Y min_i |x_i - Y|`` for ``Y ~ U[0,1]``, by integrating piecewise."""
    xs = np.sort(np.clip(xs, 0, 1))
    total = xs[0] ** 2 / 2 + (1 - xs[-1]) ** 2 / 2
    gaps = np.diff(xs)
    return float(total + (gaps ** 2 / 4).sum())


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.integers(0, 1000))
def test_w1_probe_1d_matches_exact(xs, seed):
    est = P.w1_nn_probe(np.array(xs)[:, None], 40_000, seed)
    assert abs(est.estimate - exact_w1_1d(np.array(xs))) <= 5 * est.stderr + 1e-12


def test_w1_single_point():
    est = P.w1_nn_probe([[0.5]], 100_000, 0)
    assert abs(est.estimate - 0.25) <= 3 * est.stderr
    assert est.paper_lb == pytest.approx(0.125) and est.estimate >= est.paper_lb


def test_w1_lower_bound_formula():
    assert P.w1_point_lower_bound(1, 1) == pytest.approx(0.125)
    assert P.w1_point_lower_bound(8, 3) == pytest.approx(0.5 * 3 * 4 ** (-4 / 3) / 2)


# ------------------------------------------------------------------ lower bounds

def test_explicit_constant():
    assert P.explicit_constant(3) == pytest.approx(4.0 ** -3 * 4.0 ** -4)
    with pytest.raises(RegimeError):
        P.explicit_constant(2)


def test_approx_lower_bounds():
    lb = P.approx_lower_bound_formulas(3, 1.0, 2.0, 2)
    assert lb.general == pytest.approx((2 * math.sqrt(2)) ** -2)
    assert lb.lipschitz_explicit == pytest.approx(
        P.explicit_constant(3) * (2 * math.sqrt(4 + math.log(4))) ** -2)
    assert P.approx_lower_bound_formulas(5, 2.0, 2.0, 1).lipschitz_explicit is None
    for args in [(2, 1.0, 2.0, 1), (3, 1.0, 0.5, 1), (3, 1.0, 2.0, 0)]:
        with pytest.raises(RegimeError):
            P.approx_lower_bound_formulas(*args)


@given(st.integers(3, 8), st.floats(1, 100), st.floats(1, 100), st.integers(1, 5))
def test_lower_bound_decreases_in_K(d, K1, K2, L):
    lo, hi = sorted([K1, K2])
    a = P.approx_lower_bound_formulas(d, 1.0, lo, L).general
    b = P.approx_lower_bound_formulas(d, 1.0, hi, L).general
    assert b <= a * (1 + 1e-12)
