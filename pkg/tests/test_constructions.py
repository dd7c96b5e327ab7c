import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from normnet import constructions as C
from normnet.errors import DimensionError, InfeasibleBudgetError, ResourceCapError
from normnet.net import kappa
from normnet.probes import GridSpec

from conftest import points


# ------------------------------------------------------------------ square

@pytest.mark.parametrize("k", [1, 2, 3, 8])
def test_square_net_matches_oracle(k):
    # oracle: piecewise linear with breaks at the midpoints (2j-1)/(2k),
    # value j(j-1)/k^2 there, so it agrees with x^2 at every j/k
    j = np.arange(1, k + 1)
    xs = np.concatenate([[0.0], (2 * j - 1) / (2 * k), [1.0]])
    ys = np.concatenate([[0.0], j * (j - 1) / k ** 2, [1.0]])
    x = np.linspace(0, 1, 4001)
    net = C.square_net(k)
    np.testing.assert_allclose(net(x[:, None])[:, 0], np.interp(x, xs, ys), atol=1e-12)
    grid = np.arange(k + 1) / k
    np.testing.assert_allclose(net(grid[:, None])[:, 0], grid ** 2, atol=1e-12)


@given(st.integers(1, 40), st.floats(-100, 0))
def test_square_net_vanishes_on_negatives(k, x):
    assert C.square_net(k)([x])[0] == 0.0


@given(st.integers(1, 40))
def test_square_certificate(k):
    cert = C.build_square(k)
    assert cert.kappa == pytest.approx(3.0, abs=1e-9)
    assert cert.net.width == k and cert.net.depth == 1
    err = C.sup_error(cert.net, lambda X: X[:, 0] ** 2, GridSpec(1, 2001))
    assert err <= cert.error_bound


def test_square_rejects_bad_k():
    for k in (0, -1, 2.5):
        with pytest.raises(ValueError):
            C.square_net(k)


# ------------------------------------------------------------------ product

@pytest.mark.parametrize("k", [1, 2, 4])
def test_product_net(k):
    cert = C.build_product(k)
    X = GridSpec(2, 81, -1, 1).points()
    y = cert.net(X)[:, 0]
    assert np.abs(y - X[:, 0] * X[:, 1]).max() <= 3 / k ** 2
    # clipped range, up to rounding of the truncation layer
    assert np.all(np.abs(y) <= 1 + 1e-12)
    assert cert.budget.admits(cert.net)


@given(st.integers(1, 16), st.floats(-1, 1))
def test_product_zero_on_axes(k, t):
    net = C.product_net(k)
    np.testing.assert_allclose(net([[t, 0.0], [0.0, t]])[:, 0], 0.0, atol=1e-12)


@given(st.integers(1, 16), st.floats(-1, 1), st.floats(-1, 1))
def test_product_is_symmetric(k, x, y):
    net = C.product_net(k)
    np.testing.assert_allclose(net([x, y]), net([y, x]), atol=1e-12)


# ------------------------------------------------------------------ monomial

@pytest.mark.parametrize("d,k", [(2, 2), (3, 4), (5, 2)])
def test_monomial(d, k):
    cert = C.build_monomial(d, k)
    X = points(d, 3000, d)
    assert np.abs(cert.net(X)[:, 0] - X.prod(axis=1)).max() <= cert.error_bound
    assert cert.budget.admits(cert.net)
    assert cert.net.depth == 2 * math.ceil(math.log2(d))


def test_monomial_needs_two_factors():
    with pytest.raises(DimensionError):
        C.monomial_net(1, 4)


# ------------------------------------------------------------------ partition of unity

@given(st.integers(1, 5), st.integers(0, 2**31))
def test_hat_and_offset(N, seed):
    rng = np.random.default_rng(seed)
    n_i = int(rng.integers(0, N + 1))
    X = rng.uniform(-0.5, 1.5, size=(50, 2))
    np.testing.assert_allclose(C.hat_net(N, 2, 1, n_i)(X)[:, 0],
                               np.maximum(0, 1 - np.abs(N * X[:, 1] - n_i)), atol=1e-12)
    np.testing.assert_allclose(C.offset_net(N, 2, 0, n_i)(X)[:, 0], X[:, 0] - n_i / N, atol=1e-12)


@pytest.mark.parametrize("N,d", [(1, 1), (2, 2), (3, 2)])
def test_partition_of_unity_sums_to_one(N, d):
    X = GridSpec(d, 21).points()
    total = sum(C.exact_partition(N, n, X) for n in itertools.product(range(N + 1), repeat=d))
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    nets_total = sum(C.build_partition(N, d, n, k=16)(X)[:, 0]
                     for n in itertools.product(range(N + 1), repeat=d))
    # each factor product is exact to 3 d / k^2 per node
    assert np.abs(nets_total - 1.0).max() <= (N + 1) ** d * 6 * d / 16 ** 2


def test_partition_index_checks():
    with pytest.raises(DimensionError):
        C.build_partition(2, 2, (3, 0))
    with pytest.raises(DimensionError):
        C.build_partition(2, 2, (0,))


# ------------------------------------------------------------------ Taylor

def test_targets_lie_in_unit_ball():
    for name in ("const", "sine"):
        for alpha in (0.5, 1.0, 2.0):
            assert C.make_target(name, 2, alpha).spot_check() == []
    assert C.product_target(2, 2.0).spot_check() == []
    with pytest.raises(ValueError):
        C.make_target("nope", 2, 1.0)


def test_sine_derivatives_match_finite_differences():
    spec = C.sine_target(2, 3.0)
    x = np.array([0.3, 0.6])
    h = 1e-5
    e0 = np.array([h, 0.0])
    fd = (spec.f((x + e0)[None])[0] - spec.f((x - e0)[None])[0]) / (2 * h)
    assert spec.deriv((1, 0), x) == pytest.approx(fd, rel=1e-8)
    fd2 = (spec.deriv((1, 0), x + e0) - spec.deriv((1, 0), x - e0)) / (2 * h)
    assert spec.deriv((2, 0), x) == pytest.approx(fd2, rel=1e-8)


def test_taylor_constant_target_is_exact_up_to_products():
    # for a constant the Taylor net is c * sum of partition products
    spec = C.constant_target(2, 1.0)
    cert = C.build_taylor_net(spec, 2, 8)
    X = GridSpec(2, 33).points()
    assert np.abs(cert.net(X)[:, 0] - 0.5).max() <= 9 * 0.5 * 12 / 64


@pytest.mark.parametrize("alpha,N,k", [(1.0, 2, 2), (2.0, 1, 2)])
def test_taylor_small(alpha, N, k):
    spec = C.sine_target(2, alpha)
    cert = C.build_taylor_net(spec, N, k)
    err = C.certify(cert, spec.f, GridSpec(2, 65), spec.lipschitz)
    assert err.within_bound
    assert err.bracket >= err.grid_error
    assert cert.budget.admits(cert.net)
    assert cert.net.n_weights == C.taylor_weight_estimate(2, alpha, N, k)


def test_taylor_weight_cap():
    with pytest.raises(ResourceCapError):
        C.build_taylor_net(C.sine_target(2, 1.0), 4, 8, max_weights=1000)


def test_taylor_coefficient_order_and_factorials():
    spec = C.product_target(2, 3.0)
    coeffs = C.taylor_coefficients(spec, 1)
    assert [c[0] for c in coeffs[:6]] == [(0, 0)] * 6
    table = {(n, s): c for n, s, c in coeffs}
    assert table[((1, 1), (1, 1))] == 1.0
    assert table[((1, 1), (2, 0))] == 0.0


@pytest.mark.parametrize("K", [1e6, 1e9, 1e12])
def test_plan_approximant_is_largest_feasible(K):
    k, N, Kst = C.plan_approximant(2, 1.0, K)
    assert Kst <= K and N == k ** 2
    N2 = (k + 1) ** 2
    assert C.taylor_budget(2, 1.0, N2, k + 1).kappa_bound > K


def test_plan_approximant_infeasible():
    with pytest.raises(InfeasibleBudgetError):
        C.plan_approximant(2, 1.0, 10.0)
    with pytest.raises(InfeasibleBudgetError):
        C.plan_approximant(2, 1.0, 0.5)


def test_certificate_json():
    cert = C.build_square(4)
    rep = C.certify(cert, lambda X: X[:, 0] ** 2, GridSpec(1, 101), lipschitz_f=2.0)
    out = C.certificate_json(cert, rep)
    assert out["kind"] == "square" and out["within_bound"] is True
    assert out["bracket"] == pytest.approx(rep.grid_error + (2 + cert.kappa) / 200)
