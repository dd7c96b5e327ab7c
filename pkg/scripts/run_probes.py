"""Complexity and lower-bound probes: Rademacher bracket, sign packing,
Wasserstein point lower bound and the approximation lower-bound formulas."""

import argparse
import time

import numpy as np

from normnet import probes as P
from normnet.rng import stream


def rademacher(trials):
    print("\nRademacher average of the linear subclass (n, d, K, L)")
    for n, d, K, L in ((50, 2, 1, 2), (200, 3, 2, 3), (1000, 5, 4, 2)):
        est = P.rademacher_linear_lb(stream(n, d).random((n, d)), K, trials, seed=n, L=L)
        print(f"  {(n, d, K, L)!s:18} lb={est.paper_lb:.4f}  mc={est.mc_mean:.4f}"
              f" +- {est.mc_stderr:.1e}  ub={est.paper_ub:.4f}  bracketed={est.bracketed}")


def packing(max_m):
    print("\nGreedy sign packing, pairwise Hamming distance > floor(m/8)")
    for m in range(8, max_m + 1, 4):
        t = time.perf_counter()
        pack = P.greedy_sign_packing(m)
        print(f"  m={m:2d} size={len(pack):7d} (need >= {2 ** (m / 4):7.1f})"
              f" min distance={pack.min_hamming}  {time.perf_counter() - t:.1f}s")


def wasserstein(samples):
    print("\nW1 from uniform of the nearest-point map, lattice point sets")
    for d in (1, 2, 3):
        for side in (1, 2, 4, 8):
            grid = np.stack(np.meshgrid(*([np.arange(side)] * d), indexing="ij"), -1)
            X = (grid.reshape(-1, d) + 0.5) / side
            w = P.w1_nn_probe(X, samples, seed=side)
            print(f"  d={d} n={X.shape[0]:4d} estimate={w.estimate:.4f} +- {w.stderr:.1e}"
                  f"  lower bound={w.paper_lb:.4f}")


def lower_bounds():
    print("\nApproximation lower bounds (alpha=1), general power and explicit form")
    for d in (3, 4, 6):
        for K in (1.0, 10.0, 100.0):
            lb = P.approx_lower_bound_formulas(d, 1.0, K, 2)
            print(f"  d={d} K={K:6.1f} L=2 general={lb.general:.3e}"
                  f" explicit={lb.lipschitz_explicit:.3e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--max-m", type=int, default=24)
    ap.add_argument("--mc-samples", type=int, default=100_000)
    args = ap.parse_args()
    rademacher(args.trials)
    packing(args.max_m)
    wasserstein(args.mc_samples)
    lower_bounds()


if __name__ == "__main__":
    main()
