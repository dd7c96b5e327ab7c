"""Complexity and lower-bound probes.

Executable pieces of the lower-bound machinery: sign-vector packings, the
bump-function class and its grid values, the normalized Euclidean metric,
Monte-Carlo Rademacher estimates for the linear subclass, the
nearest-neighbour Wasserstein probe, and closed-form bound evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .errors import DimensionError, RegimeError
from .net import ReluNet, evaluate
from .rng import child_seed, stream


# ------------------------------------------------------------------ grids

@dataclass(frozen=True)
class GridSpec:
    """Evaluation points in the box ``[lo, hi]^d``.

    ``kind="uniform"`` places ``n`` points per axis (endpoints included);
    ``kind="lhs"`` draws ``n`` Latin-hypercube points in total.
    """

    d: int
    n: int
    lo: float = 0.0
    hi: float = 1.0
    kind: str = "uniform"
    seed: int = 0

    @classmethod
    def default(cls, d: int, lo: float = 0.0, hi: float = 1.0) -> "GridSpec":
        if d == 1:
            return cls(1, 100_000, lo, hi)
        if d == 2:
            return cls(2, 512, lo, hi)
        return cls(d, 100_000, lo, hi, kind="lhs")

    @property
    def size(self) -> int:
        return self.n ** self.d if self.kind == "uniform" else self.n

    def points(self) -> np.ndarray:
        if self.n < 1:
            raise ValueError("grid needs at least one point")
        if self.kind == "uniform":
            axis = np.linspace(self.lo, self.hi, self.n)
            mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
            return np.stack([m.ravel() for m in mesh], axis=1)
        if self.kind == "lhs":
            sampler = qmc.LatinHypercube(d=self.d, rng=np.random.default_rng(child_seed(self.seed, 0)))
            return self.lo + (self.hi - self.lo) * sampler.random(self.n)
        raise ValueError(f"unknown grid kind {self.kind!r}")

    def covering_radius(self) -> float | None:
        """Sup-norm distance within which every box point has a grid point."""
        if self.kind != "uniform":
            return None
        if self.n == 1:
            return (self.hi - self.lo) / 2
        return (self.hi - self.lo) / (2 * (self.n - 1))


def sup_error(net: ReluNet, f: Callable, grid) -> float:
    """``max |f(x) - net(x)|`` over the grid points."""
    X = grid.points() if isinstance(grid, GridSpec) else np.atleast_2d(np.asarray(grid, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty grid")
    if X.shape[1] != net.input_dim:
        raise DimensionError(f"grid dim {X.shape[1]} != net input dim {net.input_dim}")
    approx = evaluate(net, X)
    exact = np.asarray(f(X), dtype=float).reshape(approx.shape)
    return float(np.abs(exact - approx).max())


# ------------------------------------------------------------------ metric

def rho2(x, y) -> float:
    """``m^{-1/2} ||x - y||_2``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.size == 0:
        raise DimensionError(f"rho2 needs equal non-empty lengths, got {x.size} and {y.size}")
    return float(np.linalg.norm(x - y) / math.sqrt(x.size))


# ------------------------------------------------------------------ packing

@dataclass(frozen=True, eq=False)
class SignPack:
    m: int
    vectors: np.ndarray  # (count, m) int8 entries in {-1, +1}
    min_hamming: int

    def __len__(self):
        return self.vectors.shape[0]


_MAX_PACK_M = 24


def _codes_to_signs(codes: np.ndarray, m: int) -> np.ndarray:
    bits = (codes[:, None] >> np.arange(m - 1, -1, -1, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _ball_masks(m: int, radius: int) -> np.ndarray:
    from itertools import combinations

    masks = [0]
    for w in range(1, radius + 1):
        for pos in combinations(range(m), w):
            masks.append(sum(1 << p for p in pos))
    return np.array(masks, dtype=np.int64)


def greedy_sign_packing(m: int) -> SignPack:
    """Greedy packing of {-1, +1}^m with pairwise Hamming distance > floor(m/8).

    Candidates are visited in lexicographic order (entry ``+1`` before
    ``-1``, first coordinate most significant); each accepted vector
    removes its Hamming ball of radius ``floor(m/8)`` from the pool.
    """
    if not 8 <= m <= _MAX_PACK_M:
        raise ValueError(f"packing supports 8 <= m <= {_MAX_PACK_M}, got {m}")
    radius = m // 8
    total = 1 << m
    masks = _ball_masks(m, radius)
    taken = np.zeros(total, dtype=bool)
    chosen = []
    ptr, chunk = 0, 4096
    while ptr < total:
        window = taken[ptr:ptr + chunk]
        free = np.flatnonzero(~window)
        if free.size == 0:
            ptr += chunk
            continue
        code = ptr + int(free[0])
        chosen.append(code)
        taken[code ^ masks] = True
        ptr = code + 1
    vectors = _codes_to_signs(np.array(chosen, dtype=np.int64), m)
    return SignPack(m, vectors, min_pairwise_hamming(vectors))


def _masks_of_weight(m: int, w: int):
    from itertools import combinations

    for pos in combinations(range(m), w):
        yield sum(1 << p for p in pos)


def min_pairwise_hamming(vectors: np.ndarray, max_weight: int | None = None) -> int:
    """Smallest Hamming distance between distinct rows (exact).

    Rows are encoded as integers and stored in a membership bitmap; the
    distance is the smallest weight ``w`` such that some row XOR some
    weight-``w`` mask is again a row.  Returns ``m + 1`` for fewer than two
    rows.  ``max_weight`` stops the search early (the result is then
    ``max_weight + 1`` when nothing closer exists).
    """
    V = np.asarray(vectors)
    count, m = V.shape
    if count < 2:
        return m + 1
    if m > _MAX_PACK_M:
        raise ValueError(f"exact distance check supports m <= {_MAX_PACK_M}")
    codes = np.zeros(count, dtype=np.int64)
    for j in range(m):
        codes = (codes << 1) | (V[:, j] < 0).astype(np.int64)
    member = np.zeros(1 << m, dtype=bool)
    member[codes] = True
    if np.unique(codes).size < count:
        return 0
    top = m if max_weight is None else min(m, max_weight)
    block = max(1, (1 << 22) // count)
    for w in range(1, top + 1):
        buf = []
        for mask in _masks_of_weight(m, w):
            buf.append(mask)
            if len(buf) == block:
                if member[codes[:, None] ^ np.array(buf)[None, :]].any():
                    return w
                buf = []
        if buf and member[codes[:, None] ^ np.array(buf)[None, :]].any():
            return w
    return top + 1


# ------------------------------------------------------------------ bump class

def bump_1d(t):
    """``exp(1 - 1/(1 - t^2))`` on ``|t| < 1``, zero elsewhere; equals 1 at 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def bump(X):
    """``psi(x) = prod_i g(4 x_i)``: smooth, ``psi(0) = 1``, zero for ``||x||_inf >= 1/4``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.prod(bump_1d(4.0 * X), axis=1)


def _derivative_tables(order: int, points: int = 40_001):
    t = np.linspace(-1.0, 1.0, points)
    tables = [bump_1d(t)]
    for _ in range(order):
        tables.append(np.gradient(tables[-1], t))
    return t, tables


def _multi_indices(d: int, total: int):
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _multi_indices(d - 1, total - first):
            yield (first, *rest)


@lru_cache(maxsize=None)
def bump_holder_constant(d: int, alpha: float, safety: float = 0.5) -> float:
    """Numerical constant ``C`` with ``C * psi`` in the unit Holder ball.

    Derivative sup-norms come from finite-difference tables of the 1-D
    profile (``psi`` is a tensor product); the Holder quotient of the top
    derivatives is sampled on random close pairs.  The reciprocal of the
    largest value is multiplied by ``safety``.
    """
    r = math.ceil(alpha) - 1
    beta = alpha - r
    t, tables = _derivative_tables(r)
    sups = [float(np.abs(tab).max()) for tab in tables]
    worst = 0.0
    for order in range(r + 1):
        for s in _multi_indices(d, order):
            worst = max(worst, float(np.prod([4.0 ** si * sups[si] for si in s])))

    def deriv(s, X):
        vals = np.ones(X.shape[0])
        for i, si in enumerate(s):
            vals *= 4.0 ** si * np.interp(4.0 * X[:, i], t, tables[si], left=0.0, right=0.0)
        return vals

    rng = stream(0x5EED, d, int(round(alpha * 1000)))
    X = rng.uniform(-0.3, 0.3, size=(20_000, d))
    step = 10.0 ** rng.uniform(-4, -0.5, size=(20_000, 1))
    Y = X + step * rng.uniform(-1, 1, size=X.shape)
    gap = np.abs(X - Y).max(axis=1)
    for s in _multi_indices(d, r):
        q = np.abs(deriv(s, X) - deriv(s, Y)) / gap ** beta
        worst = max(worst, float(q.max()))
    return safety / worst


@dataclass(frozen=True, eq=False)
class BumpClassSpec:
    d: int
    N: int
    alpha: float
    C_psi_alpha: float
    a: np.ndarray  # shape (N,)*d, entries +-1

    def __post_init__(self):
        a = np.asarray(self.a)
        if a.shape != (self.N,) * self.d:
            raise DimensionError(f"sign array must have shape {(self.N,) * self.d}, got {a.shape}")
        if not np.all(np.abs(a) == 1):
            raise ValueError("sign array entries must be +1 or -1")
        if self.C_psi_alpha <= 0:
            raise ValueError("C_psi_alpha must be positive")
        object.__setattr__(self, "a", a.astype(np.int8))

    @classmethod
    def make(cls, d: int, N: int, alpha: float, a=None) -> "BumpClassSpec":
        if a is None:
            a = np.ones((N,) * d, dtype=np.int8)
        return cls(d, N, alpha, bump_holder_constant(d, alpha), a)


def bump_eval(spec: BumpClassSpec, x):
    """``h_a(x) = C N^-alpha sum_n a_n psi(N x - n)`` over ``n in {0..N-1}^d``.

    The supports ``||N x - n||_inf < 1/4`` are disjoint, so only the
    nearest lattice index can contribute.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != spec.d:
        raise DimensionError(f"expected dim {spec.d}, got {X.shape[1]}")
    scaled = spec.N * X
    nearest = np.rint(scaled).astype(np.int64)
    inside = np.all((nearest >= 0) & (nearest < spec.N), axis=1)
    vals = np.zeros(X.shape[0])
    if inside.any():
        idx = nearest[inside]
        signs = spec.a[tuple(idx.T)]
        vals[inside] = signs * bump(scaled[inside] - idx)
    vals *= spec.C_psi_alpha * float(spec.N) ** (-spec.alpha)
    return float(vals[0]) if single else vals


def bump_grid_points(N: int, d: int) -> np.ndarray:
    """The lattice ``{n / N : n in {0..N-1}^d}`` in C order of ``n``."""
    idx = np.stack(np.meshgrid(*([np.arange(N)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return idx / N


# ------------------------------------------------------------------ Rademacher

@dataclass(frozen=True)
class RademacherEstimate:
    n: int
    K: float
    trials: int
    mc_mean: float
    mc_stderr: float
    paper_lb: float
    paper_ub: float

    @property
    def bracketed(self) -> bool:
        tol = 3 * self.mc_stderr
        return self.paper_lb - tol <= self.mc_mean <= self.paper_ub + tol


def rademacher_bound_formulas(n: int, d: int, K: float, L: int, B: float = 1.0) -> tuple[float, float]:
    """Data-free bracket ``(K / (2 sqrt(2n)), B K sqrt(2 (L + 2 + ln(d+1))) / sqrt(n))``."""
    lb = K / (2.0 * math.sqrt(2.0 * n))
    ub = B * K * math.sqrt(2.0 * (L + 2 + math.log(d + 1))) / math.sqrt(n)
    return lb, ub


def rademacher_linear_lb(points, K: float, trials: int, seed: int,
                         L: int = 1, B: float | None = None) -> RademacherEstimate:
    """Monte-Carlo Rademacher average of the linear class ``{a . (x, 1) : ||a||_1 <= K/2}``.

    For each sign draw the supremum is ``(K/2) ||sum_i xi_i x~_i||_inf / n``.
    Each trial has its own counter-based stream, so the estimate does not
    depend on how trials are batched.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.size == 0:
        raise ValueError("empty point set")
    if K < 0 or trials < 1:
        raise ValueError("need K >= 0 and trials >= 1")
    n, d = X.shape
    Xt = np.hstack([X, np.ones((n, 1))])
    if B is None:
        B = max(1.0, float(np.abs(X).max()))
    vals = np.empty(trials)
    block = max(1, (1 << 20) // n)
    for start in range(0, trials, block):
        stop = min(trials, start + block)
        signs = np.empty((stop - start, n))
        for t in range(start, stop):
            signs[t - start] = 2.0 * stream(seed, t).integers(0, 2, size=n) - 1.0
        vals[start:stop] = 0.5 * K * np.abs(signs @ Xt).max(axis=1) / n
    lb = K / (2 * math.sqrt(2) * n) * float(np.sqrt((Xt ** 2).sum(axis=0)).max())
    _, ub = rademacher_bound_formulas(n, d, K, L, B)
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return RademacherEstimate(n, K, trials, float(vals.mean()), stderr, lb, ub)


# ------------------------------------------------------------------ Wasserstein

class W1Probe(NamedTuple):
    estimate: float
    paper_lb: float
    stderr: float


def w1_point_lower_bound(n: int, d: int) -> float:
    """``d (d+1)^{-1-1/d} n^{-1/d} / 2``: no n-point set is W1-closer to uniform."""
    return 0.5 * d * (d + 1) ** (-1.0 - 1.0 / d) * n ** (-1.0 / d)


def w1_nn_probe(points, mc_samples: int, seed: int, block: int = 8192) -> W1Probe:
    """MC estimate of ``E_Y min_i ||x_i - Y||_inf`` for ``Y`` uniform on the cube."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.size == 0:
        raise ValueError("empty point set")
    if mc_samples < 1:
        raise ValueError("need at least one MC sample")
    n, d = X.shape
    tree = cKDTree(X)
    dist = np.empty(mc_samples)
    for j, start in enumerate(range(0, mc_samples, block)):
        stop = min(mc_samples, start + block)
        Y = stream(seed, j).random((stop - start, d))
        dist[start:stop], _ = tree.query(Y, k=1, p=np.inf)
    stderr = float(dist.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
    return W1Probe(float(dist.mean()), w1_point_lower_bound(n, d), stderr)


# ------------------------------------------------------------------ lower bounds

class LowerBounds(NamedTuple):
    general: float
    lipschitz_explicit: float | None


def explicit_constant(d: int) -> float:
    """``c_d = (d-2) 4^{-d/(d-2)} (d+1)^{-(d+1)/(d-2)}`` for ``d >= 3``."""
    if d < 3:
        raise RegimeError(f"explicit constant needs d >= 3, got d={d}")
    e = d - 2
    return e * 4.0 ** (-d / e) * (d + 1.0) ** (-(d + 1.0) / e)


def approx_lower_bound_formulas(d: int, alpha: float, K: float, L: int) -> LowerBounds:
    """Lower-bound expressions for the sup-norm approximation error.

    ``general`` is the bare power ``(K sqrt(L))^{-2 alpha / (d - 2 alpha)}``;
    its multiplicative constant is unknown, so only ratios are meaningful.
    ``lipschitz_explicit`` is the fully explicit bound for ``alpha = 1``,
    ``d >= 3`` and ``None`` elsewhere.
    """
    if K < 1:
        raise RegimeError(f"K >= 1 required, got K={K}")
    if L < 1:
        raise RegimeError(f"L >= 1 required, got L={L}")
    if not d > 2 * alpha:
        raise RegimeError(f"d > 2*alpha required, got d={d}, alpha={alpha}")
    general = (K * math.sqrt(L)) ** (-2.0 * alpha / (d - 2.0 * alpha))
    explicit = None
    if alpha == 1 and d >= 3:
        t = K * math.sqrt(L + 2 + math.log(d + 1))
        explicit = explicit_constant(d) * t ** (-2.0 / (d - 2))
    return LowerBounds(general, explicit)
