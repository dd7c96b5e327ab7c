"""Explicit approximator networks with their norm budgets and error bounds.

The building blocks are

* ``phi_k(x) = sum_i (2/k) relu(x - (2i-1)/(2k))``, the piecewise-linear
  interpolant of ``x^2`` on ``[0, 1]`` at the nodes ``i/k``;
* the clipped product ``psi_k(x, y)`` built from the polarization identity
  ``xy = 2((x+y)/2)^2 - 2(x/2)^2 - 2(y/2)^2``;
* a binary tree of products for monomials;
* hat-function partitions of unity and local Taylor polynomials.

Every emitter returns a per-neuron normalized network, so the measured
kappa is usually well below the stated budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .algebra import BudgetBound, _deepen, compose, linear_sum, precompose_affine, stack
from .errors import DimensionError, InfeasibleBudgetError, ResourceCapError
from .net import AffineLayer, ReluNet, kappa, normalize, to_dict, truncate
from .probes import GridSpec, _multi_indices, sup_error

DEFAULT_MAX_WEIGHTS = 2_000_000


# ------------------------------------------------------------------ types

@dataclass(frozen=True, eq=False)
class HolderSpec:
    """Target ``f`` on ``[0,1]^d`` with smoothness ``alpha = r + beta``.

    ``f`` maps an ``(n, d)`` array to ``(n,)`` values; ``deriv(s, x)``
    returns the partial derivative of multi-index ``s`` at one point ``x``.
    ``lipschitz`` (sup-norm Lipschitz constant of ``f``) is optional and
    only used to bracket the true sup-error between grid points.
    """

    d: int
    alpha: float
    f: Callable
    deriv: Callable
    name: str = "custom"
    lipschitz: float | None = None

    def __post_init__(self):
        if self.d < 1:
            raise DimensionError(f"d must be >= 1, got {self.d}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def r(self) -> int:
        return math.ceil(self.alpha) - 1

    @property
    def beta(self) -> float:
        return self.alpha - self.r

    def multi_indices(self) -> list[tuple[int, ...]]:
        return [s for order in range(self.r + 1) for s in _multi_indices(self.d, order)]

    def spot_check(self, points_per_axis: int = 5, tol: float = 1e-12) -> list[tuple]:
        """Grid points and multi-indices where ``|deriv| > 1``; empty when fine."""
        axis = np.linspace(0.0, 1.0, points_per_axis)
        bad = []
        for x in itertools.product(axis, repeat=self.d):
            for s in self.multi_indices():
                v = float(self.deriv(s, np.array(x)))
                if not math.isfinite(v) or abs(v) > 1 + tol:
                    bad.append((s, x, v))
        return bad


@dataclass(frozen=True, eq=False)
class ApproxCertificate:
    """A network together with its stated budget and error bound."""

    net: ReluNet
    width: int
    depth: int
    kappa_stated: float
    error_bound: float
    N: int = 0
    k: int = 0
    kind: str = ""
    params: dict = field(default_factory=dict)

    @property
    def kappa(self) -> float:
        return kappa(self.net).kappa

    @property
    def budget(self) -> BudgetBound:
        return BudgetBound(self.width, self.depth, self.kappa_stated)

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            **self.params,
            "N": self.N,
            "k": self.k,
            "width_stated": self.width,
            "depth_stated": self.depth,
            "kappa_stated": self.kappa_stated,
            "error_bound": self.error_bound,
            "width": self.net.width,
            "depth": self.net.depth,
            "kappa": self.kappa,
            "n_weights": self.net.n_weights,
        }


@dataclass(frozen=True)
class CertifyReport:
    grid_error: float
    bracket: float | None
    grid_points: int
    within_bound: bool


def certify(cert: ApproxCertificate, f: Callable, grid: GridSpec,
            lipschitz_f: float | None = None) -> CertifyReport:
    """Grid sup-error plus, for uniform grids, a rigorous upper bracket.

    Every point of the box lies within the covering radius ``h`` of a grid
    node, and ``|f - net|`` is ``(Lip f + kappa)``-Lipschitz, so the true
    sup-error is at most ``grid_error + (Lip f + kappa) h``.
    """
    err = sup_error(cert.net, f, grid)
    radius = grid.covering_radius()
    bracket = None
    if radius is not None and lipschitz_f is not None:
        bracket = err + (lipschitz_f + cert.kappa) * radius
    return CertifyReport(err, bracket, grid.size, err <= cert.error_bound)


# ------------------------------------------------------------------ square

def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")


def square_net(k: int) -> ReluNet:
    """``phi_k`` on R: zero on ``(-inf, 0]``, interpolates ``x^2`` at ``i/k``."""
    _check_k(k)
    knots = (2.0 * np.arange(1, k + 1) - 1.0) / (2.0 * k)
    net = ReluNet((AffineLayer(np.ones((k, 1)), -knots), AffineLayer(np.full((1, k), 2.0 / k))))
    return normalize(net)


def build_square(k: int) -> ApproxCertificate:
    net = square_net(k)
    return ApproxCertificate(net, k, 1, 3.0, 1.0 / (2.0 * k * k), k=k, kind="square")


def even_square_net(k: int) -> ReluNet:
    """``phi_k(x) + phi_k(-x)``; approximates ``x^2`` on ``[-1, 1]``, kappa 6."""
    phi = square_net(k)
    return linear_sum([1.0, 1.0], [phi, precompose_affine(phi, [[-1.0]], [0.0])])


# ------------------------------------------------------------------ product

def product_net_unclipped(k: int) -> ReluNet:
    """Depth-1 polarization product; kappa 36 before normalization."""
    sq = even_square_net(k)
    half = precompose_affine
    parts = [
        half(sq, [[0.5, 0.5]], [0.0]),
        half(sq, [[0.5, 0.0]], [0.0]),
        half(sq, [[0.0, 0.5]], [0.0]),
    ]
    return normalize(linear_sum([2.0, -2.0, -2.0], parts))


@lru_cache(maxsize=32)
def product_net(k: int) -> ReluNet:
    """``psi_k = chi_1 o psi~_k``: values in ``[-1, 1]``, zero when ``xy = 0``."""
    _check_k(k)
    return normalize(truncate(product_net_unclipped(k), 1.0))


def build_product(k: int) -> ApproxCertificate:
    return ApproxCertificate(product_net(k), 6 * k, 2, 216.0, 3.0 / k ** 2, k=k, kind="product")


# ------------------------------------------------------------------ monomial

def _levels(d: int) -> int:
    return max(0, math.ceil(math.log2(d))) if d > 1 else 0


@lru_cache(maxsize=64)
def monomial_net(d: int, k: int) -> ReluNet:
    """Binary tree of clipped products; missing leaves are the constant 1."""
    if d < 2:
        raise DimensionError(f"monomial needs d >= 2, got {d}")
    _check_k(k)
    prod = product_net(k)
    size = 1 << _levels(d)
    in_dim = d
    tree = None
    while size > 1:
        pairs = size // 2
        nodes = []
        for p in range(pairs):
            A = np.zeros((2, in_dim))
            b = np.zeros(2)
            for j, idx in enumerate((2 * p, 2 * p + 1)):
                if idx < in_dim:
                    A[j, idx] = 1.0
                else:
                    b[j] = 1.0
            nodes.append(precompose_affine(prod, A, b))
        level = stack(nodes)
        tree = level if tree is None else compose(level, tree)
        size = in_dim = pairs
    return normalize(tree)


def monomial_budget(d: int, k: int) -> BudgetBound:
    m = _levels(d)
    return BudgetBound(6 * d * k, 2 * m, 6.0 ** (3 * m))


def build_monomial(d: int, k: int) -> ApproxCertificate:
    net = monomial_net(d, k)
    b = monomial_budget(d, k)
    return ApproxCertificate(net, b.width_bound, b.depth_bound, b.kappa_bound,
                             6.0 * d / k ** 2, k=k, kind="monomial", params={"d": d})


# ------------------------------------------------------------------ partition of unity

def hat_net(N: int, d: int, i: int, n_i: int) -> ReluNet:
    """``x -> relu(1 - |N x_i - n_i|)`` on R^d; depth 2, kappa at most 6N."""
    A0 = np.zeros((2, d))
    A0[0, i], A0[1, i] = N, -N
    b0 = np.array([-float(n_i), float(n_i)])
    net = ReluNet((AffineLayer(A0, b0),
                   AffineLayer([[-1.0, -1.0]], [1.0]),
                   AffineLayer([[1.0]])))
    return normalize(net)


def offset_net(N: int, d: int, i: int, n_i: int) -> ReluNet:
    """``x -> x_i - n_i/N`` as ``relu(x_i - n_i/N) - relu(n_i/N - x_i)``."""
    A0 = np.zeros((2, d))
    A0[0, i], A0[1, i] = 1.0, -1.0
    c = n_i / N
    net = ReluNet((AffineLayer(A0, [-c, c]), AffineLayer([[1.0, -1.0]])))
    return normalize(net)


def _check_index(N: int, d: int, n: Sequence[int]):
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if len(n) != d or any(int(v) != v or not 0 <= v <= N for v in n):
        raise DimensionError(f"index {tuple(n)} is not in {{0..{N}}}^{d}")


def partition_features(N: int, d: int, n: Sequence[int]) -> ReluNet:
    """The ``d`` hat values ``psi(N x_i - n_i)`` as one net (output dim ``d``)."""
    _check_index(N, d, n)
    return stack([hat_net(N, d, i, n[i]) for i in range(d)])


def build_partition(N: int, d: int, n: Sequence[int], k: int = 8) -> ReluNet:
    """``psi_n(x) = prod_i psi(N x_i - n_i)``; the product uses the monomial
    net with parameter ``k`` when ``d >= 2`` (exact for ``d = 1``)."""
    feats = partition_features(N, d, n)
    if d == 1:
        return feats
    return normalize(compose(monomial_net(d, k), feats))


def exact_partition(N: int, n: Sequence[int], X) -> np.ndarray:
    """Reference ``prod_i max(0, 1 - |N x_i - n_i|)`` in plain numpy."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.prod(np.maximum(0.0, 1.0 - np.abs(N * X - np.asarray(n, dtype=float))), axis=1)


# ------------------------------------------------------------------ Taylor net

def taylor_budget(d: int, alpha: float, N: int, k: int) -> BudgetBound:
    r = math.ceil(alpha) - 1
    m = _levels(d + r)
    W = 6 * (r + 1) * (d + r) * d ** r * (N + 1) ** d * k
    L = 2 * m + 2
    K = 6.0 ** (3 * m + 1) * (r + 1) * d ** r * N * (N + 1) ** d
    return BudgetBound(W, L, K)


def taylor_error_bound(d: int, alpha: float, N: int, k: int) -> float:
    r = math.ceil(alpha) - 1
    return 2.0 ** d * d ** r * (N ** (-alpha) + 6.0 * (r + 1) * (d + r) / k ** 2)


def _term_net(N: int, d: int, n: Sequence[int], s: Sequence[int], k: int) -> ReluNet:
    feats = [hat_net(N, d, i, n[i]) for i in range(d)]
    for i, si in enumerate(s):
        feats.extend(offset_net(N, d, i, n[i]) for _ in range(si))
    if len(feats) == 1:
        return feats[0]
    return compose(monomial_net(len(feats), k), stack(feats))


def _sum_weight_count(templates: list[tuple[ReluNet, int]], d: int) -> int:
    """Dense weight count of ``linear_sum`` over ``count`` copies of each template."""
    depth = max(t.depth for t, _ in templates)
    dims = np.zeros(depth, dtype=np.int64)
    for net, count in templates:
        deep = _deepen(net, depth - net.depth)
        dims += count * np.array(deep.hidden_dims, dtype=np.int64)
    total = int(dims[0]) * (d + 1)
    for prev, cur in zip(dims[:-1], dims[1:]):
        total += int(cur) * (int(prev) + 1)
    return total + int(dims[-1])


def taylor_weight_estimate(d: int, alpha: float, N: int, k: int) -> int:
    """Weights of the assembled Taylor net, computed without building it."""
    r = math.ceil(alpha) - 1
    templates = []
    for order in range(r + 1):
        count_s = sum(1 for _ in _multi_indices(d, order))
        s = (order,) + (0,) * (d - 1)
        tmpl = _term_net(max(N, 1), d, (0,) * d, s, k)
        templates.append((tmpl, count_s * (N + 1) ** d))
    return _sum_weight_count(templates, d)


def taylor_coefficients(spec: HolderSpec, N: int) -> list[tuple[tuple, tuple, float]]:
    """``(n, s, d^s f(n/N) / s!)`` in lexicographic order of ``n`` then ``s``."""
    out = []
    for n in itertools.product(range(N + 1), repeat=spec.d):
        x = np.array(n, dtype=float) / N
        for s in spec.multi_indices():
            v = float(spec.deriv(s, x))
            if not math.isfinite(v):
                raise ValueError(f"derivative oracle returned {v} for s={s} at {tuple(x)}")
            out.append((n, s, v / math.prod(math.factorial(si) for si in s)))
    return out


def build_taylor_net(spec: HolderSpec, N: int, k: int,
                     max_weights: int = DEFAULT_MAX_WEIGHTS) -> ApproxCertificate:
    """Sum of ``c_{n,s} Phi(hats, offsets)`` over grid nodes ``n`` and ``|s| <= r``."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    _check_k(k)
    d, alpha = spec.d, spec.alpha
    estimate = taylor_weight_estimate(d, alpha, N, k)
    if estimate > max_weights:
        raise ResourceCapError(
            f"Taylor net with d={d}, alpha={alpha}, N={N}, k={k} needs about "
            f"{estimate} weights, above the cap of {max_weights}"
        )
    coeffs, terms = [], []
    for n, s, c in taylor_coefficients(spec, N):
        coeffs.append(c)
        terms.append(_term_net(N, d, n, s, k))
    net = normalize(linear_sum(coeffs, terms))
    b = taylor_budget(d, alpha, N, k)
    return ApproxCertificate(net, b.width_bound, b.depth_bound, b.kappa_bound,
                             taylor_error_bound(d, alpha, N, k), N=N, k=k, kind="taylor",
                             params={"d": d, "alpha": alpha, "target": spec.name})


def plan_approximant(d: int, alpha: float, K_target: float) -> tuple[int, int, float]:
    """Largest ``k`` (with ``N = ceil(k^(2/alpha))``) whose stated kappa fits ``K_target``."""
    if K_target < 1:
        raise InfeasibleBudgetError(f"K_target must be >= 1, got {K_target}")

    def K_of(k):
        N = math.ceil(k ** (2.0 / alpha) - 1e-12)
        return N, taylor_budget(d, alpha, N, k).kappa_bound

    N1, K1 = K_of(1)
    if K1 > K_target:
        raise InfeasibleBudgetError(
            f"smallest construction (k=1, N={N1}) needs kappa {K1:.6g} > {K_target:.6g}"
        )
    lo, hi = 1, 2
    while K_of(hi)[1] <= K_target:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if K_of(mid)[1] <= K_target:
            lo = mid
        else:
            hi = mid
    N, K = K_of(lo)
    return lo, N, K


def build_approximant(spec: HolderSpec, K_target: float,
                      max_weights: int = DEFAULT_MAX_WEIGHTS) -> ApproxCertificate:
    k, N, _ = plan_approximant(spec.d, spec.alpha, K_target)
    return build_taylor_net(spec, N, k, max_weights=max_weights)


# ------------------------------------------------------------------ targets

def constant_target(d: int, alpha: float, value: float = 0.5) -> HolderSpec:
    def f(X):
        return np.full(np.atleast_2d(X).shape[0], value)

    def deriv(s, x):
        return value if sum(s) == 0 else 0.0

    return HolderSpec(d, alpha, f, deriv, name="const", lipschitz=0.0)


def product_target(d: int, alpha: float = 2.0) -> HolderSpec:
    """``x_1 ... x_d``; in the unit Holder ball on ``[0,1]^2`` for ``alpha <= 2``."""
    def f(X):
        return np.prod(np.atleast_2d(X), axis=1)

    def deriv(s, x):
        if any(si > 1 for si in s):
            return 0.0
        return float(np.prod([xi for xi, si in zip(x, s) if si == 0]))

    return HolderSpec(d, alpha, f, deriv, name="product", lipschitz=float(d))


def sine_target(d: int, alpha: float, omega: float = 1.0, phase: float = 0.3) -> HolderSpec:
    """``sin(omega sum_i x_i + phase) / d``; unit Holder ball for ``omega <= 1``."""
    def f(X):
        return np.sin(omega * np.atleast_2d(X).sum(axis=1) + phase) / d

    def deriv(s, x):
        order = sum(s)
        return omega ** order * math.sin(omega * float(np.sum(x)) + phase + order * math.pi / 2) / d

    return HolderSpec(d, alpha, f, deriv, name="sine", lipschitz=omega)


TARGETS = {"const": constant_target, "product": product_target, "sine": sine_target}


def make_target(name: str, d: int, alpha: float) -> HolderSpec:
    try:
        factory = TARGETS[name]
    except KeyError:
        raise ValueError(f"unknown target {name!r}; choose from {sorted(TARGETS)}") from None
    return factory(d, alpha)


def certificate_json(cert: ApproxCertificate, report: CertifyReport | None = None) -> dict:
    out = cert.summary()
    if report is not None:
        out.update(grid_error=report.grid_error, bracket=report.bracket,
                   grid_points=report.grid_points, within_bound=report.within_bound)
    return out


__all__ = [
    "HolderSpec", "ApproxCertificate", "CertifyReport", "certify",
    "build_square", "build_product", "build_monomial", "build_partition",
    "build_taylor_net", "build_approximant", "plan_approximant",
    "taylor_budget", "taylor_error_bound", "taylor_weight_estimate",
    "make_target", "TARGETS", "to_dict",
]
