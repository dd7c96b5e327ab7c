"""Explicit ReLU networks: evaluation, norm budget, rescaling, truncation, I/O.

A network with depth ``L`` is a list of ``L + 1`` affine layers.  Every layer
but the last is followed by the ReLU; the last layer carries no bias::

    h_0 = x,  h_{l+1} = relu(A_l h_l + b_l),  out = A_L h_L

The norm of a matrix is always the operator norm induced by the sup-norm,
i.e. the largest absolute row sum.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import DimensionError

# Cap on the number of activation entries held at once during evaluation.
_EVAL_BLOCK = 1 << 22
# Large, mostly-zero layers (block-diagonal sums of many subnets) are
# multiplied in CSR form.
_SPARSE_MIN_SIZE = 1 << 16
_SPARSE_MAX_DENSITY = 0.1


def relu(t):
    return np.maximum(t, 0.0)


def op_norm(A) -> float:
    """Max row 1-norm of ``A`` (the l_inf -> l_inf operator norm)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise DimensionError(f"op_norm needs a non-empty matrix, got shape {A.shape}")
    return float(np.abs(A).sum(axis=1).max())


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AffineLayer:
    A: np.ndarray
    b: np.ndarray | None = None

    def __post_init__(self):
        A = _frozen(self.A)
        if A.ndim == 1:
            A = _frozen(A[None, :])
        if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
            raise DimensionError(f"layer matrix must be non-empty 2-D, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("layer matrix has non-finite entries")
        object.__setattr__(self, "A", A)
        if self.b is not None:
            b = _frozen(self.b).reshape(-1)
            if b.shape[0] != A.shape[0]:
                raise DimensionError(f"bias length {b.shape[0]} != rows {A.shape[0]}")
            if not np.all(np.isfinite(b)):
                raise ValueError("layer bias has non-finite entries")
            object.__setattr__(self, "b", b)

    @property
    def in_dim(self) -> int:
        return self.A.shape[1]

    @property
    def out_dim(self) -> int:
        return self.A.shape[0]

    @cached_property
    def _csr(self):
        if self.A.size < _SPARSE_MIN_SIZE:
            return None
        nnz = np.count_nonzero(self.A)
        if nnz > _SPARSE_MAX_DENSITY * self.A.size:
            return None
        return sparse.csr_matrix(self.A)

    def apply(self, H: np.ndarray) -> np.ndarray:
        """``H @ A.T`` for a batch of row vectors."""
        csr = self._csr
        if csr is None:
            return H @ self.A.T
        return np.asarray((csr @ H.T).T)

    def augmented(self) -> np.ndarray:
        """``(A, b)`` with the bias appended as an extra column."""
        if self.b is None:
            return np.asarray(self.A)
        return np.hstack([self.A, self.b[:, None]])


@dataclass(frozen=True, eq=False)
class ReluNet:
    layers: tuple[AffineLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionError("a network needs at least one layer")
        fixed = []
        for i, layer in enumerate(layers):
            if not isinstance(layer, AffineLayer):
                layer = AffineLayer(*layer) if isinstance(layer, tuple) else AffineLayer(layer)
            last = i == len(layers) - 1
            if last and layer.b is not None:
                if np.any(layer.b != 0):
                    raise DimensionError("the output layer must not carry a bias")
                layer = AffineLayer(layer.A)
            if not last and layer.b is None:
                layer = AffineLayer(layer.A, np.zeros(layer.out_dim))
            if i > 0 and layer.in_dim != fixed[-1].out_dim:
                raise DimensionError(
                    f"layer {i} expects {layer.in_dim} inputs but layer {i - 1} "
                    f"produces {fixed[-1].out_dim}"
                )
            fixed.append(layer)
        object.__setattr__(self, "layers", tuple(fixed))

    @classmethod
    def from_arrays(cls, weights: Sequence, biases: Sequence) -> "ReluNet":
        """Build from ``L+1`` matrices and ``L`` hidden biases."""
        if len(biases) != len(weights) - 1:
            raise DimensionError("need exactly one bias per hidden layer")
        layers = [AffineLayer(A, b) for A, b in zip(weights[:-1], biases)]
        layers.append(AffineLayer(weights[-1]))
        return cls(tuple(layers))

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def hidden_dims(self) -> tuple[int, ...]:
        return tuple(layer.out_dim for layer in self.layers[:-1])

    @property
    def width(self) -> int:
        return max(self.hidden_dims, default=0)

    @property
    def n_weights(self) -> int:
        return sum(layer.A.size + (0 if layer.b is None else layer.b.size) for layer in self.layers)

    @property
    def weights(self) -> list[np.ndarray]:
        return [layer.A for layer in self.layers]

    @property
    def biases(self) -> list[np.ndarray]:
        return [layer.b for layer in self.layers[:-1]]

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return f"ReluNet(dims={dims})"


@dataclass(frozen=True)
class KappaReport:
    hidden_norms: tuple[float, ...]
    output_norm: float
    kappa: float = field(init=False)

    def __post_init__(self):
        k = self.output_norm
        for h in self.hidden_norms:
            k *= max(h, 1.0)
        object.__setattr__(self, "kappa", float(k))


def kappa(net: ReluNet) -> KappaReport:
    """Norm budget ``||A_L|| * prod_l max(||(A_l, b_l)||, 1)``."""
    hidden = tuple(op_norm(layer.augmented()) for layer in net.layers[:-1])
    return KappaReport(hidden, op_norm(net.layers[-1].A))


def evaluate(net: ReluNet, x) -> np.ndarray:
    """Forward pass.  Accepts one point of shape (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise DimensionError(f"expected input dim {net.input_dim}, got shape {x.shape}")
    widest = max([net.input_dim, net.output_dim, *net.hidden_dims])
    step = max(1, _EVAL_BLOCK // widest)
    if X.shape[0] <= step:
        out = _forward(net, X)
    else:
        out = np.vstack([_forward(net, X[i:i + step]) for i in range(0, X.shape[0], step)])
    return out[0] if single else out


def _forward(net, X):
    h = X
    for layer in net.layers[:-1]:
        h = relu(layer.apply(h) + layer.b)
    return net.layers[-1].apply(h)


def rescale(net: ReluNet) -> ReluNet:
    """Move all norm into the output layer, layer by layer.

    With ``k_l = max(||(A_l, b_l)||, 1)`` the hidden layers become
    ``A_l / k_l`` and ``b_l / (k_0 ... k_l)``; the output layer absorbs
    ``k_0 ... k_{L-1}``.  The function is unchanged and every hidden layer
    ends up with norm at most one.
    """
    if net.depth == 0:
        return net
    layers = []
    cum = 1.0
    for layer in net.layers[:-1]:
        k = max(op_norm(layer.augmented()), 1.0)
        cum *= k
        layers.append(AffineLayer(layer.A / k, layer.b / cum))
    layers.append(AffineLayer(net.layers[-1].A * cum))
    return ReluNet(tuple(layers))


def normalize(net: ReluNet) -> ReluNet:
    """Per-neuron rescaling: every non-zero hidden row gets norm exactly 1.

    Each neuron's incoming row ``(a_j, b_j)`` is divided by its own norm
    ``r_j`` and the outgoing column is multiplied by ``r_j``, which keeps
    the function by positive homogeneity of the ReLU.  The resulting
    kappa never exceeds that of :func:`rescale`.
    """
    if net.depth == 0:
        return net
    layers = []
    carry = None
    for layer in net.layers[:-1]:
        A = np.array(layer.A) if carry is None else layer.A * carry[None, :]
        b = np.array(layer.b)
        r = np.abs(A).sum(axis=1) + np.abs(b)
        alive = r > 0
        scale = np.where(alive, r, 1.0)
        layers.append(AffineLayer(A / scale[:, None], b / scale))
        carry = np.where(alive, r, 0.0)
    layers.append(AffineLayer(net.layers[-1].A * carry[None, :]))
    return ReluNet(tuple(layers))


def clip_net(B: float, k: int = 1) -> ReluNet:
    """Depth-1 net computing ``(x v -B) ^ B`` element-wise on R^k.

    Uses ``x -> relu(x) - relu(-x) - (B+1) relu(x/(B+1) - B/(B+1))
    + (B+1) relu(-x/(B+1) - B/(B+1))``; hidden rows all have norm 1 and
    the output norm is ``2B + 4``.
    """
    if B <= 0:
        raise ValueError(f"truncation level must be positive, got {B}")
    c = B + 1.0
    rows = np.array([1.0, -1.0, 1.0 / c, -1.0 / c])
    bias = np.array([0.0, 0.0, -B / c, -B / c])
    out = np.array([1.0, -1.0, -c, c])
    eye = np.eye(k)
    A0 = np.kron(eye, rows[:, None])
    b0 = np.tile(bias, k)
    A1 = np.kron(eye, out[None, :])
    return ReluNet((AffineLayer(A0, b0), AffineLayer(A1)))


def truncate(net: ReluNet, B: float) -> ReluNet:
    """Append the clipping layer ``chi_B`` to every output coordinate.

    Depth grows by one, width becomes ``max(W, 4k)`` and kappa is at most
    ``(2B + 4) max(kappa(net), 1)``.
    """
    if B <= 0:
        raise ValueError(f"truncation level must be positive, got {B}")
    chi = clip_net(B, net.output_dim)
    inner = rescale(net)
    head = chi.layers[0]
    merged = AffineLayer(head.A @ inner.layers[-1].A, head.b)
    return ReluNet((*inner.layers[:-1], merged, chi.layers[1]))


def snn_embed(net: ReluNet) -> ReluNet:
    """Bias-free form on the augmented input ``(x, 1)``.

    Hidden layers become ``[[A_l, b_l], [0, 1]]``: the extra unit keeps the
    constant 1 alive through every ReLU.  The output layer becomes
    ``(A_L, 0)``.  The product of the layer norms equals ``kappa(net)``.
    """
    layers = []
    for layer in net.layers[:-1]:
        top = layer.augmented()
        unit = np.zeros((1, top.shape[1]))
        unit[0, -1] = 1.0
        M = np.vstack([top, unit])
        layers.append(AffineLayer(M, np.zeros(M.shape[0])))
    A_L = net.layers[-1].A
    layers.append(AffineLayer(np.hstack([A_L, np.zeros((A_L.shape[0], 1))])))
    return ReluNet(tuple(layers))


def norm_product(net: ReluNet) -> float:
    """Product of the plain matrix norms (meaningful for bias-free nets)."""
    return float(np.prod([op_norm(layer.A) for layer in net.layers]))


def lipschitz_probe(net: ReluNet, pairs: Iterable) -> float:
    """Largest observed ``||f(x) - f(y)||_inf / ||x - y||_inf`` over ``pairs``."""
    xs, ys = [], []
    for x, y in pairs:
        xs.append(np.asarray(x, dtype=np.float64).reshape(-1))
        ys.append(np.asarray(y, dtype=np.float64).reshape(-1))
    if not xs:
        raise ValueError("no pairs given")
    X, Y = np.vstack(xs), np.vstack(ys)
    if X.shape[1] != net.input_dim or Y.shape[1] != net.input_dim:
        raise DimensionError("pair dimension does not match the network input")
    dx = np.abs(X - Y).max(axis=1)
    keep = dx > 0
    if not keep.any():
        raise ValueError("all pairs are degenerate (x == y)")
    df = np.abs(evaluate(net, X[keep]) - evaluate(net, Y[keep])).max(axis=1)
    return float((df / dx[keep]).max())


def random_net(rng: np.random.Generator, dims: Sequence[int], scale: float = 1.0) -> ReluNet:
    """Gaussian weights and biases with ``scale / sqrt(fan_in)`` spread."""
    layers = []
    for i, (m, n) in enumerate(zip(dims[:-1], dims[1:])):
        A = rng.normal(0.0, scale / np.sqrt(m), size=(n, m))
        if i < len(dims) - 2:
            layers.append(AffineLayer(A, rng.normal(0.0, scale / np.sqrt(m), size=n)))
        else:
            layers.append(AffineLayer(A))
    return ReluNet(tuple(layers))


# ---------------------------------------------------------------- serialization

def to_dict(net: ReluNet) -> dict:
    if net.depth == 0:
        raise DimensionError("pure affine maps (depth 0) are not serialized")
    layers = []
    for layer in net.layers:
        entry = {"A": layer.A.tolist()}
        if layer.b is not None:
            entry["b"] = layer.b.tolist()
        layers.append(entry)
    return {"input_dim": net.input_dim, "output_dim": net.output_dim, "layers": layers}


def from_dict(data: dict) -> ReluNet:
    layers = data["layers"]
    built = []
    for i, entry in enumerate(layers):
        A = np.array(entry["A"], dtype=np.float64)
        b = entry.get("b")
        built.append(AffineLayer(A, None if b is None else np.array(b, dtype=np.float64)))
    net = ReluNet(tuple(built))
    if net.input_dim != data["input_dim"] or net.output_dim != data["output_dim"]:
        raise DimensionError("declared dims disagree with the layer shapes")
    return net


def dumps(net: ReluNet) -> str:
    # json writes floats with repr(), the shortest round-trip decimal
    return json.dumps(to_dict(net), separators=(",", ":"))


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(net: ReluNet, path) -> None:
    atomic_write_text(path, dumps(net) + "\n")


def load(path) -> ReluNet:
    with open(path) as fh:
        return from_dict(json.load(fh))
