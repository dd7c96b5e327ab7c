"""Build and certify the square, product, monomial and Taylor approximators.

Prints one row per construction with measured and stated width, depth,
kappa and sup-error.  ``--quick`` skips the two largest Taylor nets.
"""

import argparse
import time

import numpy as np

from normnet.constructions import (build_monomial, build_product, build_square,
                                   build_taylor_net, certify, sine_target)
from normnet.probes import GridSpec


def rows(quick: bool):
    sq = GridSpec(1, 100_000)
    for k in (1, 2, 4, 8, 16, 32):
        yield build_square(k), (lambda X: X[:, 0] ** 2), sq
    for k in (2, 4, 8):
        yield build_product(k), (lambda X: X[:, 0] * X[:, 1]), GridSpec(2, 200, -1, 1)
    for d in (2, 3, 4):
        for k in (4, 8):
            grid = GridSpec(d, 100_000, -1, 1, kind="lhs", seed=d)
            yield build_monomial(d, k), (lambda X: X.prod(axis=1)), grid
    sizes = ((2, 4),) if quick else ((2, 4), (4, 8))
    for alpha in (1.0, 2.0):
        spec = sine_target(2, alpha)
        for N, k in sizes:
            yield build_taylor_net(spec, N, k, max_weights=10 ** 7), spec.f, GridSpec.default(2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    head = f"{'kind':9} {'params':34} {'width':>12} {'depth':>7} {'kappa':>22} {'error':>20}"
    print(head)
    print("-" * len(head))
    for cert, f, grid in rows(args.quick):
        t = time.perf_counter()
        rep = certify(cert, f, grid)
        params = {**cert.params, "k": cert.k, **({"N": cert.N} if cert.N else {})}
        label = " ".join(f"{k}={v}" for k, v in params.items())
        print(f"{cert.kind:9} {label:34} {cert.net.width:>5}/{cert.width:<6} "
              f"{cert.net.depth:>3}/{cert.depth:<3} {cert.kappa:>9.4g}/{cert.kappa_stated:<12.4g} "
              f"{rep.grid_error:>8.3g}/{cert.error_bound:<9.3g} "
              f"{'ok' if rep.within_bound else 'FAIL'} {time.perf_counter() - t:.1f}s")
    print("columns are measured/stated")


if __name__ == "__main__":
    np.seterr(all="raise")
    main()
