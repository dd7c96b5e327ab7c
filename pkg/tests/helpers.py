"""Independent oracles shared by the unit and acceptance tests."""

import numpy as np

from normnet import algebra
from normnet.net import ReluNet, random_net


def direct_forward(net: ReluNet, X):
    """Plain loop over the weight list, no shared code with ``evaluate``."""
    H = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Ws, bs = net.weights, net.biases
    for W, b in zip(Ws[:-1], bs):
        H = np.maximum(np.einsum("ij,nj->ni", W, H) + b, 0.0)
    out = np.einsum("ij,nj->ni", Ws[-1], H)
    if net.layers[-1].b is not None:
        out = out + net.layers[-1].b
    return out


def random_composition(rng, d, depth=3):
    """Random combinator tree over random leaves.

    Returns ``(net, fn, checks)`` where ``fn`` evaluates the same function by
    direct math on the leaves and ``checks`` is a list of ``(net, BudgetBound)``
    for every internal node.
    """
    checks = []

    def leaf(din, dout):
        dims = [din, *rng.integers(1, 6, size=rng.integers(1, 3)), dout]
        net = random_net(rng, [int(v) for v in dims], scale=float(rng.uniform(0.3, 2.0)))
        return net, (lambda X, n=net: direct_forward(n, X))

    def build(din, level):
        dout = int(rng.integers(1, 4))
        if level == 0:
            return leaf(din, dout)
        op = rng.choice(["compose", "precompose", "concat", "lincomb"])
        if op == "compose":
            inner, fi = build(din, level - 1)
            outer, fo = leaf(inner.output_dim, dout)
            net = algebra.compose(outer, inner)
            checks.append((net, algebra.compose_bound(outer, inner)))
            return net, (lambda X: fo(fi(X)))
        if op == "precompose":
            m = int(rng.integers(1, 4))
            base, fb = build(m, level - 1)
            A = rng.uniform(-1, 1, size=(m, din))
            b = rng.uniform(-1, 1, size=m)
            net = algebra.precompose_affine(base, A, b)
            checks.append((net, algebra.precompose_bound(base, A, b)))
            return net, (lambda X: fb(np.atleast_2d(X) @ A.T + b))
        n1, f1 = build(din, level - 1)
        if op == "concat":
            n2, f2 = leaf(din, dout)
            net = algebra.concat(n1, n2)
            checks.append((net, algebra.concat_bound(n1, n2)))
            return net, (lambda X: np.hstack([f1(X), f2(X)]))
        n2, f2 = leaf(din, n1.output_dim)
        c1, c2 = rng.uniform(-2, 2, size=2)
        net = algebra.lincomb(c1, n1, c2, n2)
        checks.append((net, algebra.lincomb_bound(c1, n1, c2, n2)))
        return net, (lambda X: c1 * f1(X) + c2 * f2(X))

    net, fn = build(d, depth)
    return net, fn, checks


def loss_value(net: ReluNet, X, Y=None, loss="squared", Xb=None):
    if loss == "squared":
        return float(((direct_forward(net, X) - Y) ** 2).sum() / X.shape[0])
    return float(direct_forward(net, X).mean() - direct_forward(net, Xb).mean())


def kink_margin(net: ReluNet, X):
    """Smallest |pre-activation| over all hidden units and points."""
    H = np.atleast_2d(X)
    margin = np.inf
    for W, b in zip(net.weights[:-1], net.biases):
        Z = H @ W.T + b
        margin = min(margin, float(np.abs(Z).min()))
        H = np.maximum(Z, 0.0)
    return margin


def fd_gradient(net: ReluNet, f, h=1e-6):
    """Central differences of ``f(net)`` over every weight and hidden bias."""
    Ws, bs = [np.array(W) for W in net.weights], [np.array(b) for b in net.biases]
    out = []
    for arrays in (Ws, bs):
        for arr in arrays:
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                up = f(ReluNet.from_arrays(Ws, bs))
                arr[idx] = old - h
                down = f(ReluNet.from_arrays(Ws, bs))
                arr[idx] = old
                out.append((up - down) / (2 * h))
    return np.array(out)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-12))


# acceptance results, printed by the terminal-summary hook in conftest
ACCEPTANCE: dict = {}


def record(number: int, name: str, ok: bool, detail: str, seconds: float):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail} ({seconds:.2f} s)"
    ACCEPTANCE[number] = line
    print(line)
    return ok
