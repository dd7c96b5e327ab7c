"""Small-scale training of norm-constrained ReLU nets.

Manual backpropagation, the kappa projection and kappa subgradient, SGD
regression (constrained or penalized) and a penalized-IPM GAN loop.  All
loops are single-threaded and deterministic given the seed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .constructions import make_target
from .errors import Diagnostic, DimensionError, DivergenceError
from .net import AffineLayer, ReluNet, evaluate, kappa, lipschitz_probe, normalize, random_net, rescale, truncate
from .rng import stream

DIVERGENCE_LOSS = 1e6


# ------------------------------------------------------------------ gradients

@dataclass(eq=False)
class NetGrad:
    """Gradients per layer; ``db`` has no entry for the output layer."""

    dA: list
    db: list

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.dA] + [b.ravel() for b in self.db])

    def scaled(self, c: float) -> "NetGrad":
        return NetGrad([c * a for a in self.dA], [c * b for b in self.db])

    def __add__(self, other: "NetGrad") -> "NetGrad":
        return NetGrad([a + b for a, b in zip(self.dA, other.dA)],
                       [a + b for a, b in zip(self.db, other.db)])


def _params(net: ReluNet):
    return [np.array(A) for A in net.weights], [np.array(b) for b in net.biases]


def _net(Ws, bs) -> ReluNet:
    return ReluNet.from_arrays(Ws, bs)


def _forward_cache(Ws, bs, X):
    acts, pres = [X], []
    h = X
    for A, b in zip(Ws[:-1], bs):
        z = h @ A.T + b
        pres.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    return h @ Ws[-1].T, acts, pres


def _backward(Ws, acts, pres, G):
    """Gradients of ``sum(G * out)``; the ReLU subgradient at 0 is 0."""
    dA = [None] * len(Ws)
    db = [None] * (len(Ws) - 1)
    dA[-1] = G.T @ acts[-1]
    delta = G @ Ws[-1]
    for l in range(len(Ws) - 2, -1, -1):
        delta = delta * (pres[l] > 0)
        dA[l] = delta.T @ acts[l]
        db[l] = delta.sum(axis=0)
        delta = delta @ Ws[l]
    return NetGrad(dA, db), delta


def backprop(net: ReluNet, batch, targets=None, loss: str = "squared", batch_b=None):
    """Loss value, parameter gradient and input gradient for one batch.

    ``loss="squared"``: ``mean_i ||net(x_i) - y_i||^2`` with ``targets`` y.
    ``loss="linear-witness"``: ``mean net(batch) - mean net(batch_b)``
    for a scalar-output net.
    Returns ``(value, NetGrad, input_grad)``; ``input_grad`` has the shape of
    ``batch`` (for the witness loss it refers to the first batch only).
    """
    X = np.atleast_2d(np.asarray(batch, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    if X.shape[1] != net.input_dim:
        raise DimensionError(f"batch dim {X.shape[1]} != net input dim {net.input_dim}")
    Ws, bs = _params(net)
    if loss == "squared":
        Y = np.asarray(targets, dtype=float).reshape(X.shape[0], -1)
        if Y.shape[1] != net.output_dim:
            raise DimensionError("targets do not match the output dimension")
        out, acts, pres = _forward_cache(Ws, bs, X)
        r = out - Y
        G = 2.0 * r / X.shape[0]
        value = float((r ** 2).sum() / X.shape[0])
        grad, dX = _backward(Ws, acts, pres, G)
        return value, grad, dX
    if loss == "linear-witness":
        Xb = np.atleast_2d(np.asarray(batch_b, dtype=float))
        if Xb.shape[0] == 0:
            raise ValueError("empty second batch")
        if Xb.shape[1] != net.input_dim or net.output_dim != 1:
            raise DimensionError("witness loss needs a scalar net and matching batches")
        na, nb = X.shape[0], Xb.shape[0]
        both = np.vstack([X, Xb])
        out, acts, pres = _forward_cache(Ws, bs, both)
        G = np.concatenate([np.full(na, 1.0 / na), np.full(nb, -1.0 / nb)])[:, None]
        value = float(out[:na].mean() - out[na:].mean())
        grad, dX = _backward(Ws, acts, pres, G)
        return value, grad, dX[:na]
    raise ValueError(f"unknown loss {loss!r}")


# ------------------------------------------------------------------ kappa

def _kappa_arrays(Ws, bs) -> float:
    k = float(np.abs(Ws[-1]).sum(axis=1).max())
    for A, b in zip(Ws[:-1], bs):
        k *= max(float((np.abs(A).sum(axis=1) + np.abs(b)).max()), 1.0)
    return k


def kappa_penalty_grad(net: ReluNet, squared: bool = False) -> NetGrad:
    """Subgradient of ``kappa`` (or ``kappa^2``).

    Each layer contributes through its largest row only (lowest index on
    ties), with the sign pattern of that row.  Hidden layers whose norm is
    at most 1 sit on the flat part of ``max(., 1)`` and contribute zero.
    """
    Ws, bs = _params(net)
    hidden = [float((np.abs(A).sum(axis=1) + np.abs(b)).max()) for A, b in zip(Ws[:-1], bs)]
    out_norm = float(np.abs(Ws[-1]).sum(axis=1).max())
    factors = [max(h, 1.0) for h in hidden]
    total = out_norm * math.prod(factors)
    dA = [np.zeros_like(A) for A in Ws]
    db = [np.zeros_like(b) for b in bs]
    for l, (A, b) in enumerate(zip(Ws[:-1], bs)):
        if hidden[l] <= 1.0:
            continue
        row = int(np.argmax(np.abs(A).sum(axis=1) + np.abs(b)))
        coef = out_norm * math.prod(f for i, f in enumerate(factors) if i != l)
        dA[l][row] = coef * np.sign(A[row])
        db[l][row] = coef * np.sign(b[row])
    row = int(np.argmax(np.abs(Ws[-1]).sum(axis=1)))
    dA[-1][row] = math.prod(factors) * np.sign(Ws[-1][row])
    grad = NetGrad(dA, db)
    return grad.scaled(2.0 * total) if squared else grad


def _shrink_to(Ws, bs, K):
    # scale the output layer until kappa <= K holds in floating point
    k = _kappa_arrays(Ws, bs)
    if k <= K:
        return Ws
    Ws = list(Ws)
    Ws[-1] = Ws[-1] * (K / k)
    while _kappa_arrays(Ws, bs) > K:
        Ws[-1] = Ws[-1] * np.nextafter(1.0, 0.0)
    return Ws


def kappa_project(net: ReluNet, K: float) -> ReluNet:
    """Map into ``{kappa <= K}``: identity on feasible nets, otherwise rescale
    (hidden norms <= 1) and shrink the output layer."""
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    if kappa(net).kappa <= K:
        return net
    Ws, bs = _params(rescale(net))
    return _net(_shrink_to(Ws, bs, K), bs)


def _project_arrays(Ws, bs, K):
    if _kappa_arrays(Ws, bs) <= K:
        return Ws, bs
    net = kappa_project(_net(Ws, bs), K)
    return _params(net)


# ------------------------------------------------------------------ schedule

def step_size(lr: float, t: int, decay_steps: float) -> float:
    return lr / (1.0 + t / decay_steps)


def _sgd(Ws, bs, grad: NetGrad, eta: float, sign: float = -1.0):
    Ws = [A + sign * eta * g for A, g in zip(Ws, grad.dA)]
    bs = [b + sign * eta * g for b, g in zip(bs, grad.db)]
    return Ws, bs


# ------------------------------------------------------------------ reports

@dataclass
class TrainReport:
    """Per-epoch rows with a fixed column order, plus the final nets."""

    columns: tuple
    rows: list = field(default_factory=list)
    nets: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


# ------------------------------------------------------------------ regression

@dataclass(frozen=True)
class RegressionConfig:
    """Regression run.  Exactly one of ``K`` (projection) or ``lam``
    (penalty) must be set.  ``target="planted"`` uses a random truncated
    ReLU net (see :func:`planted_net`); other names select analytic
    Holder targets."""

    d: int = 2
    n: int = 400
    target: str = "planted"
    alpha: float = 1.0
    noise_std: float = 0.0
    width: int = 16
    depth: int = 2
    K: float | None = None
    lam: float | None = None
    epochs: int = 100
    lr: float = 0.05
    batch: int = 32
    decay_steps: float = 2000.0
    seed: int = 0
    holdout: int = 10_000
    clip: float = 1.0
    planted_width: int = 8
    planted_spread: float = 0.3
    planted_seed: int = 12345

    def validate(self) -> list[Diagnostic]:
        out = []
        if (self.K is None) == (self.lam is None):
            out.append(Diagnostic("K/lam", "exactly one of K and lam must be set"))
        if self.K is not None and not self.K > 0:
            out.append(Diagnostic("K", "must be positive"))
        if self.lam is not None and not self.lam >= 0:
            out.append(Diagnostic("lam", "must be non-negative"))
        for name in ("d", "n", "width", "depth", "epochs", "batch", "holdout"):
            if getattr(self, name) < 1:
                out.append(Diagnostic(name, "must be >= 1"))
        if self.noise_std < 0:
            out.append(Diagnostic("noise_std", "must be >= 0"))
        if self.lr <= 0:
            out.append(Diagnostic("lr", "must be positive"))
        if self.target != "planted":
            try:
                make_target(self.target, max(self.d, 1), self.alpha)
            except ValueError as exc:
                out.append(Diagnostic("target", str(exc)))
        return out


def planted_net(d: int, width: int, seed: int, spread: float = 0.3, clip: float = 1.0) -> ReluNet:
    """Random two-hidden-layer target, truncated at ``clip``.

    First-layer kinks pass through random points of the unit cube and the
    output layer is scaled so the values have standard deviation ``spread``
    under the uniform law.
    """
    rng = stream(seed, 0)
    A0 = rng.standard_normal((width, d))
    b0 = -np.einsum("ij,ij->i", A0, rng.random((width, d)))
    A1 = rng.standard_normal((width, width))
    b1 = 0.3 * rng.standard_normal(width)
    A2 = rng.standard_normal((1, width))
    raw = ReluNet.from_arrays([A0, A1, A2], [b0, b1])
    sd = float(evaluate(raw, stream(seed, 1).random((4096, d)))[:, 0].std())
    scaled = ReluNet.from_arrays([A0, A1, A2 * (spread / sd)], [b0, b1])
    return truncate(normalize(scaled), clip)


def regression_target(cfg: RegressionConfig) -> Callable:
    if cfg.target == "planted":
        f0 = planted_net(cfg.d, cfg.planted_width, cfg.planted_seed, cfg.planted_spread, cfg.clip)
        return lambda X: evaluate(f0, X)[:, 0]
    return make_target(cfg.target, cfg.d, cfg.alpha).f


REGRESSION_COLUMNS = ("epoch", "train_loss", "kappa", "heldout_l2", "best_loss", "opt_gap")


def train_regression(cfg: RegressionConfig) -> TrainReport:
    """SGD on the squared loss; projection after every step (``K`` mode) or
    the ``lam * kappa`` subgradient added to every step (``lam`` mode).

    Held-out error is ``sqrt(mean (clip(net) - f0)^2)`` on fresh uniform
    points, with the output truncated at ``cfg.clip``.
    """
    bad = cfg.validate()
    if bad:
        from .errors import ConfigError
        raise ConfigError(bad)
    f0 = regression_target(cfg)
    X = stream(cfg.seed, 1).random((cfg.n, cfg.d))
    Y = f0(X) + cfg.noise_std * stream(cfg.seed, 2).standard_normal(cfg.n)
    Xh = stream(cfg.seed, 3).random((cfg.holdout, cfg.d))
    Yh = f0(Xh)
    dims = [cfg.d] + [cfg.width] * cfg.depth + [1]
    Ws, bs = _params(random_net(stream(cfg.seed, 4), dims))
    if cfg.K is not None:
        Ws, bs = _project_arrays(Ws, bs, cfg.K)
    report = TrainReport(REGRESSION_COLUMNS, meta={"config": asdict(cfg)})
    best = math.inf
    t = 0
    for epoch in range(cfg.epochs):
        order = stream(cfg.seed, 5, epoch).permutation(cfg.n)
        for start in range(0, cfg.n, cfg.batch):
            idx = order[start:start + cfg.batch]
            out, acts, pres = _forward_cache(Ws, bs, X[idx])
            G = 2.0 * (out - Y[idx, None]) / idx.size
            grad, _ = _backward(Ws, acts, pres, G)
            if cfg.lam:
                grad = grad + kappa_penalty_grad(_net(Ws, bs)).scaled(cfg.lam)
            Ws, bs = _sgd(Ws, bs, grad, step_size(cfg.lr, t, cfg.decay_steps))
            if cfg.K is not None:
                Ws, bs = _project_arrays(Ws, bs, cfg.K)
            t += 1
        pred = _forward_cache(Ws, bs, X)[0][:, 0]
        loss = float(np.mean((pred - Y) ** 2))
        if cfg.lam:
            loss += cfg.lam * _kappa_arrays(Ws, bs)
        if not math.isfinite(loss) or loss > DIVERGENCE_LOSS:
            raise DivergenceError(epoch, loss)
        best = min(best, loss)
        ph = np.clip(_forward_cache(Ws, bs, Xh)[0][:, 0], -cfg.clip, cfg.clip)
        report.rows.append({
            "epoch": epoch,
            "train_loss": loss,
            "kappa": _kappa_arrays(Ws, bs),
            "heldout_l2": float(np.sqrt(np.mean((ph - Yh) ** 2))),
            "best_loss": best,
            "opt_gap": loss - best,
        })
    report.nets["predictor"] = _net(Ws, bs)
    return report


def rate_budget(n: int, d: int, alpha: float, c: float = 1.0) -> float:
    """``c n^{(d+1)/(2d+4 alpha+2)}``, the budget growth matching the regression rate."""
    return c * n ** ((d + 1) / (2 * d + 4 * alpha + 2))


# ------------------------------------------------------------------ IPM

def _witness_value(Ws, bs, A, B):
    both = np.vstack([A, B])
    out = _forward_cache(Ws, bs, both)[0][:, 0]
    return float(out[:A.shape[0]].mean() - out[A.shape[0]:].mean())


def _unit_direction(Ws, bs):
    """Per-neuron normalize, then scale the output layer to kappa 1."""
    Ws, bs = _params(normalize(_net(Ws, bs)))
    k = _kappa_arrays(Ws, bs)
    if k > 0:
        Ws[-1] = Ws[-1] / k
    return Ws, bs


def scale_for_mode(Ws, bs, rho: float, K: float | None, lam: float | None):
    """Output scaling of a kappa-1 direction: ``kappa = K`` in budget mode,
    the maximizer ``a = max(rho, 0) / (2 lam)`` of ``a rho - lam a^2`` in
    penalty mode."""
    Ws = list(Ws)
    if K is not None:
        Ws[-1] = Ws[-1] * K
        return _shrink_to(Ws, bs, K), bs
    Ws[-1] = Ws[-1] * (max(rho, 0.0) / (2.0 * lam))
    return Ws, bs


def _objective(Ws, bs, A, B, lam):
    v = _witness_value(Ws, bs, A, B)
    return v - lam * _kappa_arrays(Ws, bs) ** 2 if lam is not None else v


def _ascend(Ws, bs, A, B, steps, lr, decay, K, lam, t0=0):
    """Inner maximization for the budget (``K``) or penalty (``lam``) class.

    Both problems reduce to maximizing the scale-free ratio
    ``rho = (E_A f - E_B f) / kappa``: the optimum over output scalings is
    ``K rho`` resp. ``max(rho, 0)^2 / (4 lam)``.  The ascent therefore moves
    a kappa-1 direction along ``grad Delta - rho grad kappa`` (using the
    kappa subgradient) and rescales the output for the active mode after
    every step.  Returns ``(direction, scaled net, best value seen)``; the
    best value is nondecreasing in ``steps``.
    """
    Ws, bs = _unit_direction(Ws, bs)
    rho = _witness_value(Ws, bs, A, B)
    sW, sb = scale_for_mode(Ws, bs, rho, K, lam)
    best = _objective(sW, sb, A, B, lam)
    for t in range(steps):
        net = _net(Ws, bs)
        delta, grad, _ = backprop(net, A, loss="linear-witness", batch_b=B)
        grad = grad + kappa_penalty_grad(net).scaled(-delta)
        Ws, bs = _sgd(Ws, bs, grad, step_size(lr, t0 + t, decay), sign=1.0)
        Ws, bs = _unit_direction(Ws, bs)
        rho = _witness_value(Ws, bs, A, B)
        sW, sb = scale_for_mode(Ws, bs, rho, K, lam)
        best = max(best, _objective(sW, sb, A, B, lam))
    return (Ws, bs), (sW, sb), best


def ipm_estimate(disc_dims: Sequence[int], samples_mu, samples_nu, inner_steps: int,
                 lr: float, seed: int, K: float | None = None, lam: float | None = None,
                 decay_steps: float = 1000.0) -> float:
    """Lower bound on ``sup_f E_mu f - E_nu f`` over the constrained (``K``) or
    penalized (``lam``) class.  The value is attained by an explicit net, so
    it is a lower bound on the supremum, and it never decreases as
    ``inner_steps`` grows (same seed)."""
    A = np.atleast_2d(np.asarray(samples_mu, dtype=float))
    B = np.atleast_2d(np.asarray(samples_nu, dtype=float))
    if A.size == 0 or B.size == 0:
        raise ValueError("both sample sets must be non-empty")
    if (K is None) == (lam is None):
        raise ValueError("set exactly one of K and lam")
    dims = list(disc_dims)
    if dims[0] != A.shape[1] or dims[-1] != 1:
        raise DimensionError("discriminator dims must map the sample dim to 1")
    Ws, bs = _params(random_net(stream(seed, 0), dims))
    _, _, best = _ascend(Ws, bs, A, B, inner_steps, lr, decay_steps, K, lam)
    return best


@dataclass(frozen=True)
class ScalingCheck:
    lhs: float
    rhs: float
    delta: float


def scaling_identity_check(disc_net: ReluNet, samples_mu, samples_nu, lam: float) -> ScalingCheck:
    """Compare ``max_{a>=0} a Delta - lam a^2`` (numerical) with ``max(Delta,0)^2/(4 lam)``.

    ``Delta`` is the witness gap of ``disc_net`` rescaled to kappa 1.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    Ws, bs = _params(rescale(disc_net))
    k = _kappa_arrays(Ws, bs)
    A = np.atleast_2d(np.asarray(samples_mu, dtype=float))
    B = np.atleast_2d(np.asarray(samples_nu, dtype=float))
    delta = 0.0 if k == 0 else _witness_value(Ws, bs, A, B) / k

    def neg(a):
        return -(a * delta - lam * a * a)

    hi = 2.0 * abs(delta) / lam + 1e-300
    res = minimize_scalar(neg, bounds=(0.0, hi), method="bounded",
                          options={"xatol": hi * 1e-12})
    lhs = max(-float(res.fun), -neg(0.0))
    rhs = max(delta, 0.0) ** 2 / (4.0 * lam)
    return ScalingCheck(lhs, rhs, delta)


# ------------------------------------------------------------------ GAN

@dataclass(frozen=True)
class GanConfig:
    """GAN run on a planted target ``g*_# nu`` with ``nu`` uniform on ``[0,1]^k``."""

    d: int = 2
    k: int = 2
    n: int = 2048
    gen_width: int = 8
    disc_width: int = 16
    disc_depth: int = 2
    K: float | None = None
    lam: float | None = None
    outer_steps: int = 400
    inner_steps: int = 5
    lr_gen: float = 0.05
    lr_disc: float = 0.1
    decay_steps: float = 2000.0
    batch: int = 256
    seed: int = 0
    planted_seed: int = 777
    eval_samples: int = 20_000
    checkpoint_every: int = 10
    n_witness: int = 24

    def validate(self) -> list[Diagnostic]:
        out = []
        if (self.K is None) == (self.lam is None):
            out.append(Diagnostic("K/lam", "exactly one of K and lam must be set"))
        if self.K is not None and not self.K > 0:
            out.append(Diagnostic("K", "must be positive"))
        if self.lam is not None and not self.lam > 0:
            out.append(Diagnostic("lam", "must be positive"))
        for name in ("d", "k", "n", "gen_width", "disc_width", "disc_depth", "outer_steps",
                     "inner_steps", "batch", "eval_samples", "checkpoint_every", "n_witness"):
            if getattr(self, name) < 1:
                out.append(Diagnostic(name, "must be >= 1"))
        return out


def planted_generator(k: int, d: int, width: int, seed: int) -> ReluNet:
    return random_net(stream(seed, 0), [k, width, d], scale=1.5)


class WitnessFamily:
    """Fixed 1-Lipschitz test functions: ``w.x`` and ``relu(w.x - t)`` with ``||w||_1 = 1``.

    The IPM over this finite family is the reported surrogate for the
    intractable Holder-class distance.
    """

    def __init__(self, d: int, count: int, reference: np.ndarray, seed: int):
        rng = stream(seed, 0)
        W = rng.standard_normal((count, d))
        self.W = W / np.abs(W).sum(axis=1, keepdims=True)
        proj = reference @ self.W.T
        self.T = np.quantile(proj, [0.2, 0.4, 0.6, 0.8], axis=0).T  # (count, 4)

    def means(self, X) -> np.ndarray:
        P = X @ self.W.T
        ridge = np.maximum(P[:, :, None] - self.T[None], 0.0).mean(axis=0)
        return np.concatenate([P.mean(axis=0), ridge.ravel()])

    def distance(self, X, Y) -> float:
        return float(np.abs(self.means(X) - self.means(Y)).max())


GAN_COLUMNS = ("step", "ipm_penalized", "ipm_batch", "surrogate", "disc_kappa", "disc_lip_probe")


def train_gan(cfg: GanConfig) -> TrainReport:
    """Alternate inner discriminator ascent and one generator descent step.

    Checkpoints (every ``checkpoint_every`` outer steps and at the end) log
    the witness-family surrogate distance, the discriminator kappa and an
    empirical Lipschitz probe of the discriminator.
    """
    bad = cfg.validate()
    if bad:
        from .errors import ConfigError
        raise ConfigError(bad)
    g_star = planted_generator(cfg.k, cfg.d, cfg.gen_width, cfg.planted_seed)
    data = evaluate(g_star, stream(cfg.seed, 1).random((cfg.n, cfg.k)))
    Z_eval = stream(cfg.seed, 2).random((cfg.eval_samples, cfg.k))
    ref = evaluate(g_star, Z_eval)
    family = WitnessFamily(cfg.d, cfg.n_witness, ref, cfg.planted_seed + 1)
    gW, gb = _params(random_net(stream(cfg.seed, 3), [cfg.k, cfg.gen_width, cfg.d], scale=0.5))
    dims = [cfg.d] + [cfg.disc_width] * cfg.disc_depth + [1]
    uW, ub = _params(random_net(stream(cfg.seed, 4), dims))
    lam = cfg.lam
    report = TrainReport(GAN_COLUMNS, meta={"config": asdict(cfg)})
    probe_rng = stream(cfg.seed, 6)
    t_disc = 0
    for step in range(cfg.outer_steps + 1):
        rng = stream(cfg.seed, 5, step)
        Z = rng.random((cfg.batch, cfg.k))
        real = data[rng.integers(0, cfg.n, cfg.batch)]
        fake = _forward_cache(gW, gb, Z)[0]
        (uW, ub), (dW, db), _ = _ascend(uW, ub, real, fake, cfg.inner_steps, cfg.lr_disc,
                                        cfg.decay_steps, cfg.K, lam, t0=t_disc)
        t_disc += cfg.inner_steps
        gap = _witness_value(dW, db, real, fake)
        pen = gap - lam * _kappa_arrays(dW, db) ** 2 if lam is not None else gap
        if not math.isfinite(pen) or abs(pen) > DIVERGENCE_LOSS:
            raise DivergenceError(step, pen)
        if step % cfg.checkpoint_every == 0 or step == cfg.outer_steps:
            fake_eval = _forward_cache(gW, gb, Z_eval)[0]
            P = probe_rng.random((512, cfg.d)) * 1.5 - 0.25
            Q = P + 1e-3 * probe_rng.uniform(-1, 1, size=P.shape)
            report.rows.append({
                "step": step,
                "ipm_penalized": pen,
                "ipm_batch": gap,
                "surrogate": family.distance(ref, fake_eval),
                "disc_kappa": _kappa_arrays(dW, db),
                "disc_lip_probe": lipschitz_probe(_net(dW, db), zip(P, Q)),
            })
        if step == cfg.outer_steps:
            break
        # generator: maximize mean f(g(z)), i.e. shrink the witness gap
        out, acts, pres = _forward_cache(gW, gb, Z)
        _, _, dX = backprop(_net(dW, db), out, loss="linear-witness", batch_b=real)
        grad, _ = _backward(gW, acts, pres, dX)
        gW, gb = _sgd(gW, gb, grad, step_size(cfg.lr_gen, step, cfg.decay_steps), sign=1.0)
    report.nets["generator"] = _net(gW, gb)
    report.nets["discriminator"] = _net(dW, db)
    report.nets["planted"] = g_star
    return report
