"""Norm-budget-preserving network combinators.

Every combinator first rescales its operands (hidden layer norms <= 1, all
scale in the output layer), so the budget arithmetic below holds with
``K_i = kappa(operand_i)``:

=================  ==================  =====================  ======================
operation          width               depth                  kappa
=================  ==================  =====================  ======================
compose(o, i)      max(W_o, W_i)       L_o + L_i              K_o * max(K_i, 1)
precompose_affine  W                   L                      K * max(||(A,b)||, 1)
concat(n1, n2)     W_1 + W_2           max(L_1, L_2)          max(K_1, K_2)
lincomb            W_1 + W_2           max(L_1, L_2)          |c_1| K_1 + |c_2| K_2
=================  ==================  =====================  ======================
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .errors import DimensionError
from .net import AffineLayer, ReluNet, kappa, op_norm, rescale

_SLACK = 1e-9


@dataclass(frozen=True)
class BudgetBound:
    width_bound: int
    depth_bound: int
    kappa_bound: float

    def admits(self, net: ReluNet, rtol: float = _SLACK) -> bool:
        return (
            net.width <= self.width_bound
            and net.depth <= self.depth_bound
            and kappa(net).kappa <= self.kappa_bound * (1 + rtol)
        )


def budget(net: ReluNet) -> BudgetBound:
    return BudgetBound(net.width, net.depth, kappa(net).kappa)


def _identity_layer(n: int) -> AffineLayer:
    return AffineLayer(np.eye(n), np.zeros(n))


def _deepen(net: ReluNet, extra: int) -> ReluNet:
    # identity blocks after the first hidden layer; its activations are >= 0
    if extra == 0:
        return net
    if net.depth == 0:
        raise DimensionError("cannot add depth to a pure affine map")
    n = net.layers[0].out_dim
    ids = tuple(_identity_layer(n) for _ in range(extra))
    return ReluNet((net.layers[0], *ids, *net.layers[1:]))


def pad(net: ReluNet, target_width: int, target_depth: int) -> ReluNet:
    """Same function with every hidden layer ``target_width`` wide and
    ``target_depth`` hidden layers.  Zero rows/columns and identity blocks
    leave kappa unchanged."""
    if target_width < net.width or target_depth < net.depth:
        raise DimensionError(
            f"cannot pad ({net.width}, {net.depth}) down to ({target_width}, {target_depth})"
        )
    if (target_width, target_depth) == (net.width, net.depth):
        return net
    if net.depth == 0:
        raise DimensionError("cannot pad a pure affine map")
    layers = []
    prev_extra = 0
    for i, layer in enumerate(net.layers):
        A = np.asarray(layer.A)
        if prev_extra:
            A = np.hstack([A, np.zeros((A.shape[0], prev_extra))])
        if i < net.depth:
            extra = target_width - A.shape[0]
            A = np.vstack([A, np.zeros((extra, A.shape[1]))])
            b = np.concatenate([layer.b, np.zeros(extra)])
            layers.append(AffineLayer(A, b))
            prev_extra = extra
        else:
            layers.append(AffineLayer(A))
    return _deepen(ReluNet(tuple(layers)), target_depth - net.depth)


def compose(outer: ReluNet, inner: ReluNet) -> ReluNet:
    """``x -> outer(inner(x))``; the inner output layer is fused into the
    outer input layer."""
    if inner.output_dim != outer.input_dim:
        raise DimensionError(
            f"inner output dim {inner.output_dim} != outer input dim {outer.input_dim}"
        )
    o, i = rescale(outer), rescale(inner)
    A_in = i.layers[-1].A
    head = o.layers[0]
    fused = AffineLayer(head.A @ A_in, head.b)
    return ReluNet((*i.layers[:-1], fused, *o.layers[1:]))


def compose_bound(outer: ReluNet, inner: ReluNet) -> BudgetBound:
    return BudgetBound(
        max(outer.width, inner.width),
        outer.depth + inner.depth,
        kappa(outer).kappa * max(kappa(inner).kappa, 1.0),
    )


def precompose_affine(net: ReluNet, A, b) -> ReluNet:
    """``x -> net(A x + b)``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.shape[0] != net.input_dim or b.shape[0] != A.shape[0]:
        raise DimensionError(
            f"affine map {A.shape} + ({b.shape[0]},) does not feed input dim {net.input_dim}"
        )
    n = rescale(net)
    head = n.layers[0]
    if n.depth == 0:
        if np.any(b != 0):
            raise DimensionError("a pure affine map cannot absorb a constant offset")
        return ReluNet((AffineLayer(head.A @ A),))
    fused = AffineLayer(head.A @ A, head.A @ b + head.b)
    return ReluNet((fused, *n.layers[1:]))


def precompose_bound(net: ReluNet, A, b) -> BudgetBound:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).reshape(-1, 1)
    return BudgetBound(net.width, net.depth, kappa(net).kappa * max(op_norm(np.hstack([A, b])), 1.0))


def _aligned(nets: Sequence[ReluNet]) -> list[ReluNet]:
    d = nets[0].input_dim
    if any(n.input_dim != d for n in nets):
        raise DimensionError("all operands need the same input dimension")
    scaled = [rescale(n) for n in nets]
    depth = max(n.depth for n in scaled)
    return [_deepen(n, depth - n.depth) for n in scaled]


def _parallel_hidden(nets: list[ReluNet]) -> list[AffineLayer]:
    layers = [AffineLayer(
        np.vstack([n.layers[0].A for n in nets]),
        np.concatenate([n.layers[0].b for n in nets]),
    )] if nets[0].depth > 0 else []
    for l in range(1, nets[0].depth):
        layers.append(AffineLayer(
            block_diag(*[n.layers[l].A for n in nets]),
            np.concatenate([n.layers[l].b for n in nets]),
        ))
    return layers


def stack(nets: Sequence[ReluNet]) -> ReluNet:
    """n-ary concatenation ``x -> (n_1(x), ..., n_m(x))``."""
    nets = _aligned(list(nets))
    hidden = _parallel_hidden(nets)
    if not hidden:
        return ReluNet((AffineLayer(np.vstack([n.layers[0].A for n in nets])),))
    return ReluNet((*hidden, AffineLayer(block_diag(*[n.layers[-1].A for n in nets]))))


def concat(n1: ReluNet, n2: ReluNet) -> ReluNet:
    return stack([n1, n2])


def concat_bound(n1: ReluNet, n2: ReluNet) -> BudgetBound:
    return BudgetBound(n1.width + n2.width, max(n1.depth, n2.depth),
                       max(kappa(n1).kappa, kappa(n2).kappa))


def linear_sum(coeffs: Sequence[float], nets: Sequence[ReluNet]) -> ReluNet:
    """n-ary linear combination ``sum_i c_i n_i``; kappa <= sum |c_i| K_i."""
    if len(coeffs) != len(nets) or not nets:
        raise DimensionError("need one coefficient per network")
    k = nets[0].output_dim
    if any(n.output_dim != k for n in nets):
        raise DimensionError("all operands need the same output dimension")
    nets = _aligned(list(nets))
    hidden = _parallel_hidden(nets)
    if not hidden:
        A = sum(c * n.layers[0].A for c, n in zip(coeffs, nets))
        return ReluNet((AffineLayer(A),))
    head = np.hstack([c * n.layers[-1].A for c, n in zip(coeffs, nets)])
    return ReluNet((*hidden, AffineLayer(head)))


def lincomb(c1: float, n1: ReluNet, c2: float, n2: ReluNet) -> ReluNet:
    return linear_sum([c1, c2], [n1, n2])


def lincomb_bound(c1: float, n1: ReluNet, c2: float, n2: ReluNet) -> BudgetBound:
    return BudgetBound(n1.width + n2.width, max(n1.depth, n2.depth),
                       abs(c1) * kappa(n1).kappa + abs(c2) * kappa(n2).kappa)


def identity_net(d: int) -> ReluNet:
    """``x = relu(x) - relu(-x)``; width 2d, depth 1, kappa 2."""
    eye = np.eye(d)
    return ReluNet((AffineLayer(np.vstack([eye, -eye]), np.zeros(2 * d)),
                    AffineLayer(np.hstack([eye, -eye]))))
