"""Held-out error of budget-constrained regression as n grows.

K follows the rate budget n^((d+1)/(2d+4 alpha+2)); the target is a planted
truncated ReLU net with no label noise.
"""

import argparse

from normnet.learn import RegressionConfig, rate_budget, train_regression


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--ns", type=int, nargs="+", default=[100, 400, 1600])
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--c", type=float, default=1.0, help="rate budget constant")
    args = ap.parse_args()
    Ks = [rate_budget(n, 2, 1.0, args.c) for n in args.ns]
    print("n:", args.ns, " K:", [round(K, 2) for K in Ks])
    trend = 0
    for seed in range(args.seeds):
        errs = []
        for n, K in zip(args.ns, Ks):
            rep = train_regression(RegressionConfig(d=2, n=n, K=K, epochs=args.epochs, seed=seed))
            assert rep.column("kappa").max() <= K
            errs.append(rep.rows[-1]["heldout_l2"])
        down = all(a > b for a, b in zip(errs, errs[1:]))
        trend += down
        print(f"seed {seed}: held-out L2 {' -> '.join(f'{e:.4f}' for e in errs)}"
              f"  {'decreasing' if down else 'not monotone'}")
    print(f"strictly decreasing on {trend}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
