"""Command-line entry point: ``normnet construct|probe|train|net|sweep``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .constructions import (build_monomial, build_product, build_square, build_taylor_net,
                            certificate_json, certify, make_target)
from .errors import ConfigError, NormNetError
from .learn import GanConfig, RegressionConfig, train_gan, train_regression
from .net import atomic_write_text, dumps, kappa, load, save


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=harness._cell))


def _construct(args) -> int:
    if args.which == "square":
        cert, f, d = build_square(args.k), (lambda X: X[:, 0] ** 2), 1
        lip = 2.0
    elif args.which == "product":
        cert, f, d = build_product(args.k), (lambda X: X[:, 0] * X[:, 1]), 2
        lip = 2.0
    elif args.which == "monomial":
        cert, f, d = build_monomial(args.d, args.k), (lambda X: np.prod(X, axis=1)), args.d
        lip = float(args.d)
    else:
        spec = make_target(args.target, args.d, args.alpha)
        cert = build_taylor_net(spec, args.N, args.k, max_weights=args.max_weights)
        f, d, lip = spec.f, args.d, spec.lipschitz
    if args.out:
        save(cert.net, args.out)
    report = None
    if args.certify:
        grid = harness.certification_grid(args.which, d, args.grid_n, args.seed)
        # sup-norm Lipschitz constant of the target on the grid box, for the bracket
        report = certify(cert, f, grid, lip)
    _print_json(certificate_json(cert, report))
    return 0 if report is None or report.within_bound else 1


def _probe(args) -> int:
    p = {"probe": args.which, "n": args.n, "d": args.d, "K": args.K, "L": args.L, "B": args.B,
         "trials": args.trials, "mc_samples": args.mc_samples, "m": args.m, "alpha": args.alpha}
    diags = harness._validate_probe(p)
    if diags:
        for d in diags:
            print(f"error: {d.field}: {d.reason}", file=sys.stderr)
        return harness.EXIT_INVALID
    row = harness.probe_point(p, args.seed)
    if args.csv:
        atomic_write_text(args.csv, harness._csv_text(
            harness.COLUMNS[f"probe-{args.which}"], [{"index": 0, "status": "ok", "message": "", **row}]))
    _print_json(row)
    return 0


def _train(args) -> int:
    table = harness.load_table(args.config)
    cls = RegressionConfig if args.which == "regress" else GanConfig
    try:
        cfg = cls(**table)
    except TypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_INVALID
    diags = cfg.validate()
    if diags:
        for d in diags:
            print(f"error: {d.field}: {d.reason}", file=sys.stderr)
        return harness.EXIT_INVALID
    report = train_regression(cfg) if args.which == "regress" else train_gan(cfg)
    out = Path(args.out)
    atomic_write_text(out / "report.csv", report.to_csv())
    for name, net in sorted(report.nets.items()):
        atomic_write_text(out / f"{name}.json", dumps(net) + "\n")
    _print_json(report.rows[-1])
    return 0


def _net_inspect(args) -> int:
    net = load(args.file)
    rep = kappa(net)
    _print_json({
        "input_dim": net.input_dim, "output_dim": net.output_dim, "depth": net.depth,
        "width": net.width, "hidden_dims": list(net.hidden_dims), "n_weights": net.n_weights,
        "hidden_norms": list(rep.hidden_norms), "output_norm": rep.output_norm,
        "kappa": rep.kappa,
    })
    return 0


def _sweep(args) -> int:
    try:
        cfg = harness.load_config(args.config)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {d.field}: {d.reason}", file=sys.stderr)
        return harness.EXIT_INVALID
    diags = harness.validate(cfg)
    if diags:
        for d in diags:
            print(f"error: {d.field}: {d.reason}", file=sys.stderr)
        return harness.EXIT_INVALID
    manifest = harness.run(cfg, args.out)
    out = args.out or cfg.out
    print(f"{len(manifest.points)} points, {len(manifest.failures)} failed -> {out}")
    for f in manifest.failures:
        print(f"  point {f['index']}: {f['message']}", file=sys.stderr)
    return manifest.exit_code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="normnet", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="emit an approximator network")
    c.add_argument("which", choices=["square", "product", "monomial", "taylor"])
    c.add_argument("--k", type=int, default=8)
    c.add_argument("--N", type=int, default=4)
    c.add_argument("--d", type=int, default=2)
    c.add_argument("--alpha", type=float, default=1.0)
    c.add_argument("--target", default="sine")
    c.add_argument("--max-weights", type=int, default=2_000_000)
    c.add_argument("--out", help="write the net as JSON")
    c.add_argument("--certify", action="store_true", help="run the grid check")
    c.add_argument("--grid-n", type=int, default=None)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_construct)

    p = sub.add_parser("probe", help="complexity and lower-bound probes")
    p.add_argument("which", choices=["rademacher", "packing", "wasserstein", "bounds"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="also write the row as CSV")
    p.set_defaults(func=_probe)

    t = sub.add_parser("train", help="regression or GAN training from a config file")
    t.add_argument("which", choices=["regress", "gan"])
    t.add_argument("--config", required=True)
    t.add_argument("--out", default="runs/train")
    t.set_defaults(func=_train)

    n = sub.add_parser("net", help="network utilities")
    nsub = n.add_subparsers(dest="net_command", required=True)
    i = nsub.add_parser("inspect", help="print dimensions and norm budget")
    i.add_argument("file")
    i.set_defaults(func=_net_inspect)

    s = sub.add_parser("sweep", help="configuration-driven sweeps")
    ssub = s.add_subparsers(dest="sweep_command", required=True)
    r = ssub.add_parser("run")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="override the output directory")
    r.set_defaults(func=_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {d.field}: {d.reason}", file=sys.stderr)
        return harness.EXIT_INVALID
    except (NormNetError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
