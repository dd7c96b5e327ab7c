"""Configuration-driven sweeps with reproducible outputs.

A sweep is a kind, a parameter grid (cartesian product, keys in file
order), fixed parameters, a seed and an output directory.  Each grid point
gets its own seed derived from ``(seed, index)``, so results do not depend
on the number of worker threads.  Every file lands via write-then-rename.

Outputs under ``out``::

    results.csv          one row per grid point (gan-run: per checkpoint)
    points/NNNN.*        per-point artifacts (nets as JSON, training logs)
    manifest.json        config hash, seed, versions, per-point status
    timing.json          wall-clock (the only file that differs between reruns)
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .constructions import (TARGETS, build_monomial, build_product, build_square,
                            build_taylor_net, certify, make_target)
from .errors import ConfigError, Diagnostic, NormNetError
from .learn import GanConfig, RegressionConfig, rate_budget, train_gan, train_regression
from .net import atomic_write_text, dumps
from .probes import (GridSpec, approx_lower_bound_formulas, greedy_sign_packing, rademacher_linear_lb,
                     w1_nn_probe)
from .rng import child_seed, stream

KINDS = ("construct-sweep", "probe-sweep", "regress-sweep", "gan-run")
CONSTRUCTIONS = ("square", "product", "monomial", "taylor")
PROBES = ("rademacher", "packing", "wasserstein", "bounds")

EXIT_OK, EXIT_INVALID, EXIT_POINT_FAILED = 0, 2, 3

COLUMNS = {
    "construct-sweep": ("index", "construction", "d", "alpha", "N", "k", "width", "depth",
                        "kappa", "kappa_stated", "sup_error", "bound", "within_bound",
                        "status", "message"),
    "probe-rademacher": ("index", "n", "d", "K", "L", "B", "trials", "mc_mean", "mc_stderr",
                         "paper_lb", "paper_ub", "bracketed", "status", "message"),
    "probe-packing": ("index", "m", "size", "min_hamming", "size_bound", "radius", "status",
                      "message"),
    "probe-wasserstein": ("index", "n", "d", "mc_samples", "estimate", "stderr", "paper_lb",
                          "status", "message"),
    "probe-bounds": ("index", "d", "alpha", "K", "L", "general", "lipschitz_explicit",
                     "status", "message"),
    "regress-sweep": ("index", "n", "d", "K", "lam", "epochs", "seed", "train_loss",
                      "heldout_l2", "kappa_final", "kappa_max", "best_loss", "opt_gap",
                      "status", "message"),
    "gan-run": ("index", "step", "K", "lam", "seed", "ipm_penalized", "ipm_batch", "surrogate",
                "disc_kappa", "disc_lip_probe", "status", "message"),
}


@dataclass
class ExperimentConfig:
    kind: str
    grid: dict
    seed: int | None
    out: str = "runs/out"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError([Diagnostic(k, "unknown top-level field") for k in sorted(extra)])
        return cls(kind=data.get("kind", ""), grid=data.get("grid", {}),
                   seed=data.get("seed"), out=data.get("out", "runs/out"),
                   params=data.get("params", {}))

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def points(self) -> list[dict]:
        keys = list(self.grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.grid[k] for k in keys))]


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        import tomli
        data = tomli.loads(text)
    return ExperimentConfig.from_dict(data)


def load_table(path) -> dict:
    """A flat TOML or JSON table (used for training configs)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    import tomli
    return tomli.loads(text)


# ------------------------------------------------------------------ validation

def _merged(cfg: ExperimentConfig) -> list[dict]:
    return [{**cfg.params, **p} for p in cfg.points()]


def _int_ge(diags, name, value, lo):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < lo:
        diags.append(Diagnostic(name, f"must be an integer >= {lo}, got {value!r}"))


def validate(cfg: ExperimentConfig) -> list[Diagnostic]:
    """Every problem that would stop ``run``; empty iff the config is runnable."""
    diags: list[Diagnostic] = []
    if cfg.kind not in KINDS:
        diags.append(Diagnostic("kind", f"must be one of {', '.join(KINDS)}"))
    if cfg.seed is None:
        diags.append(Diagnostic("seed", "is required"))
    elif not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        diags.append(Diagnostic("seed", "must be a non-negative integer"))
    if not isinstance(cfg.out, str) or not cfg.out:
        diags.append(Diagnostic("out", "must be a non-empty path"))
    if not isinstance(cfg.params, dict):
        diags.append(Diagnostic("params", "must be a table"))
        return diags
    if not isinstance(cfg.grid, dict) or not cfg.grid:
        diags.append(Diagnostic("grid", "must be a non-empty table of value lists"))
        return diags
    for key, values in cfg.grid.items():
        if not isinstance(values, list) or not values:
            diags.append(Diagnostic(f"grid.{key}", "must be a non-empty list"))
    if diags:
        return diags
    if cfg.kind == "probe-sweep" and "probe" not in cfg.params:
        diags.append(Diagnostic("params.probe", "probe-sweep needs a single probe in params"))
        return diags
    check = {
        "construct-sweep": _validate_construct,
        "probe-sweep": _validate_probe,
        "regress-sweep": _validate_regress,
        "gan-run": _validate_gan,
    }[cfg.kind]
    seen = set()
    for point in _merged(cfg):
        for d in check(point):
            if (d.field, d.reason) not in seen:
                seen.add((d.field, d.reason))
                diags.append(d)
    return diags


def _validate_construct(p: dict) -> list[Diagnostic]:
    diags = []
    kind = p.get("construction")
    if kind not in CONSTRUCTIONS:
        return [Diagnostic("construction", f"must be one of {', '.join(CONSTRUCTIONS)}")]
    _int_ge(diags, "k", p.get("k"), 1)
    if kind in ("monomial", "taylor"):
        _int_ge(diags, "d", p.get("d"), 2 if kind == "monomial" else 1)
    if kind == "taylor":
        _int_ge(diags, "N", p.get("N"), 1)
        alpha = p.get("alpha")
        if not isinstance(alpha, (int, float)) or alpha <= 0:
            diags.append(Diagnostic("alpha", "must be a positive number"))
        if p.get("target", "sine") not in TARGETS:
            diags.append(Diagnostic("target", f"must be one of {', '.join(sorted(TARGETS))}"))
    if "grid_n" in p:
        _int_ge(diags, "grid_n", p["grid_n"], 1)
    return diags


def _validate_probe(p: dict) -> list[Diagnostic]:
    diags = []
    probe = p.get("probe")
    if probe not in PROBES:
        return [Diagnostic("probe", f"must be one of {', '.join(PROBES)}")]
    if probe == "packing":
        m = p.get("m")
        if not isinstance(m, int) or not 8 <= m <= 24:
            diags.append(Diagnostic("m", "must be an integer in [8, 24]"))
        return diags
    if probe == "bounds":
        d, alpha, K, L = (p.get(x) for x in ("d", "alpha", "K", "L"))
        if any(v is None for v in (d, alpha, K, L)):
            return [Diagnostic("d/alpha/K/L", "bounds probe needs d, alpha, K and L")]
        if not d > 2 * alpha:
            diags.append(Diagnostic("d/alpha", f"regime violated: need d > 2*alpha, got d={d}, alpha={alpha}"))
        if K < 1:
            diags.append(Diagnostic("K", "regime violated: need K >= 1"))
        if L < 1:
            diags.append(Diagnostic("L", "regime violated: need L >= 1"))
        return diags
    _int_ge(diags, "n", p.get("n"), 1)
    _int_ge(diags, "d", p.get("d"), 1)
    if probe == "rademacher":
        _int_ge(diags, "trials", p.get("trials", 1000), 1)
        K = p.get("K")
        if not isinstance(K, (int, float)) or K < 0:
            diags.append(Diagnostic("K", "must be a number >= 0"))
        _int_ge(diags, "L", p.get("L", 1), 1)
    else:
        _int_ge(diags, "mc_samples", p.get("mc_samples", 100_000), 1)
    return diags


def _split_train_params(p: dict, config_cls) -> tuple[dict, list[Diagnostic]]:
    names = {f.name for f in fields(config_cls)}
    special = {"K_rate_c"}
    unknown = [k for k in p if k not in names and k not in special]
    return {k: v for k, v in p.items() if k in names}, [
        Diagnostic(k, f"unknown parameter for {config_cls.__name__}") for k in unknown
    ]


def _regression_config(p: dict, seed: int) -> RegressionConfig:
    kw, _ = _split_train_params(p, RegressionConfig)
    if "K_rate_c" in p:
        kw["K"] = rate_budget(kw.get("n", RegressionConfig.n), kw.get("d", RegressionConfig.d),
                              kw.get("alpha", RegressionConfig.alpha), p["K_rate_c"])
    kw["seed"] = seed
    return RegressionConfig(**kw)


def _validate_regress(p: dict) -> list[Diagnostic]:
    kw, diags = _split_train_params(p, RegressionConfig)
    modes = sum(x in p for x in ("K", "lam", "K_rate_c"))
    if modes != 1:
        return diags + [Diagnostic("K/lam", "exactly one of K, lam and K_rate_c must be set")]
    try:
        cfg = _regression_config(p, 0)
    except TypeError as exc:
        return diags + [Diagnostic("params", str(exc))]
    return diags + cfg.validate()


def _validate_gan(p: dict) -> list[Diagnostic]:
    kw, diags = _split_train_params(p, GanConfig)
    if ("K" in kw) == ("lam" in kw):
        return diags + [Diagnostic("K/lam", "exactly one of K and lam must be set")]
    try:
        cfg = GanConfig(**kw)
    except TypeError as exc:
        return diags + [Diagnostic("params", str(exc))]
    return diags + cfg.validate()


# ------------------------------------------------------------------ point runners

def certification_grid(construction: str, d: int, grid_n: int | None, seed: int) -> GridSpec:
    if construction == "square":
        return GridSpec(1, grid_n or 100_000, 0.0, 1.0)
    if construction == "product":
        return GridSpec(2, grid_n or 200, -1.0, 1.0)
    if construction == "monomial":
        return GridSpec(d, grid_n or 100_000, -1.0, 1.0, kind="lhs", seed=seed)
    default = GridSpec.default(d)
    return GridSpec(d, grid_n or default.n, 0.0, 1.0, kind=default.kind, seed=seed)


def construct_point(p: dict, seed: int):
    """Build and certify one construction; returns ``(row, certificate)``."""
    kind = p["construction"]
    k = int(p["k"])
    d = int(p.get("d", {"square": 1, "product": 2}.get(kind, 2)))
    alpha = p.get("alpha", "")
    if kind == "square":
        cert, f = build_square(k), (lambda X: X[:, 0] ** 2)
    elif kind == "product":
        cert, f = build_product(k), (lambda X: X[:, 0] * X[:, 1])
    elif kind == "monomial":
        cert, f = build_monomial(d, k), (lambda X: np.prod(X, axis=1))
    else:
        spec = make_target(p.get("target", "sine"), d, float(alpha))
        cert = build_taylor_net(spec, int(p["N"]), k,
                                max_weights=int(p.get("max_weights", 2_000_000)))
        f = spec.f
    grid = certification_grid(kind, d, p.get("grid_n"), seed)
    rep = certify(cert, f, grid)
    row = {
        "construction": kind, "d": d, "alpha": alpha, "N": cert.N or "", "k": k,
        "width": cert.net.width, "depth": cert.net.depth, "kappa": cert.kappa,
        "kappa_stated": cert.kappa_stated, "sup_error": rep.grid_error,
        "bound": cert.error_bound, "within_bound": rep.within_bound,
    }
    return row, cert


def probe_point(p: dict, seed: int) -> dict:
    probe = p["probe"]
    if probe == "packing":
        pack = greedy_sign_packing(int(p["m"]))
        m = pack.m
        return {"m": m, "size": len(pack), "min_hamming": pack.min_hamming,
                "size_bound": 2.0 ** (m / 4), "radius": m // 8}
    if probe == "bounds":
        lb = approx_lower_bound_formulas(int(p["d"]), float(p["alpha"]), float(p["K"]), int(p["L"]))
        return {"d": p["d"], "alpha": p["alpha"], "K": p["K"], "L": p["L"],
                "general": lb.general,
                "lipschitz_explicit": "" if lb.lipschitz_explicit is None else lb.lipschitz_explicit}
    n, d = int(p["n"]), int(p["d"])
    pts = stream(seed, 0).random((n, d))
    if probe == "rademacher":
        B = float(p.get("B", 1.0))
        est = rademacher_linear_lb(pts, float(p["K"]), int(p.get("trials", 1000)), seed,
                                   L=int(p.get("L", 1)), B=B)
        return {"n": n, "d": d, "K": p["K"], "L": p.get("L", 1), "B": B, "trials": est.trials,
                "mc_mean": est.mc_mean, "mc_stderr": est.mc_stderr, "paper_lb": est.paper_lb,
                "paper_ub": est.paper_ub, "bracketed": est.bracketed}
    mc = int(p.get("mc_samples", 100_000))
    w = w1_nn_probe(pts, mc, seed)
    return {"n": n, "d": d, "mc_samples": mc, "estimate": w.estimate, "stderr": w.stderr,
            "paper_lb": w.paper_lb}


def regress_point(p: dict, seed: int):
    cfg = _regression_config(p, seed)
    rep = train_regression(cfg)
    last = rep.rows[-1]
    row = {"n": cfg.n, "d": cfg.d, "K": "" if cfg.K is None else cfg.K,
           "lam": "" if cfg.lam is None else cfg.lam, "epochs": cfg.epochs, "seed": seed,
           "train_loss": last["train_loss"], "heldout_l2": last["heldout_l2"],
           "kappa_final": last["kappa"], "kappa_max": float(rep.column("kappa").max()),
           "best_loss": last["best_loss"], "opt_gap": last["opt_gap"]}
    return row, rep


def gan_point(p: dict, seed: int):
    kw, _ = _split_train_params(p, GanConfig)
    kw["seed"] = seed
    cfg = GanConfig(**kw)
    rep = train_gan(cfg)
    rows = [{"step": r["step"], "K": "" if cfg.K is None else cfg.K,
             "lam": "" if cfg.lam is None else cfg.lam, "seed": seed,
             **{c: r[c] for c in ("ipm_penalized", "ipm_batch", "surrogate", "disc_kappa",
                                  "disc_lip_probe")}} for r in rep.rows]
    return rows, rep


# ------------------------------------------------------------------ run

def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    return v


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_cell) + "\n"


def _columns(cfg: ExperimentConfig) -> tuple:
    if cfg.kind == "probe-sweep":
        return COLUMNS[f"probe-{cfg.params['probe']}"]
    return COLUMNS[cfg.kind]


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("NORMNET_THREADS", "1")))
    except ValueError:
        return 1


def _execute(cfg: ExperimentConfig, index: int, point: dict, out: Path):
    """Run one grid point; returns ``(rows, files)`` where files maps relative
    paths to text.  Library errors become a failed row, never an abort."""
    seed = child_seed(cfg.seed, index)
    p = {**cfg.params, **point}
    try:
        if cfg.kind == "construct-sweep":
            row, cert = construct_point(p, seed)
            return [row], {f"points/{index:04d}-net.json": dumps(cert.net) + "\n"}
        if cfg.kind == "probe-sweep":
            return [probe_point(p, seed)], {}
        if cfg.kind == "regress-sweep":
            row, rep = regress_point(p, seed)
            return [row], {f"points/{index:04d}-log.csv": rep.to_csv(),
                           f"points/{index:04d}-net.json": dumps(rep.nets["predictor"]) + "\n"}
        rows, rep = gan_point(p, seed)
        return rows, {f"points/{index:04d}-log.csv": rep.to_csv(),
                      f"points/{index:04d}-generator.json": dumps(rep.nets["generator"]) + "\n",
                      f"points/{index:04d}-discriminator.json": dumps(rep.nets["discriminator"]) + "\n"}
    except (NormNetError, ValueError, ArithmeticError, MemoryError) as exc:
        return [{"status": "error", "message": f"{type(exc).__name__}: {exc}"}], {}


@dataclass
class Manifest:
    config_hash: str
    seed: int
    kind: str
    versions: dict
    points: list
    failures: list
    wall_clock_s: float = 0.0

    @property
    def exit_code(self) -> int:
        return EXIT_POINT_FAILED if self.failures else EXIT_OK

    def deterministic_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_clock_s")
        return d


def versions() -> dict:
    return {"normnet": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(cfg: ExperimentConfig, out: str | os.PathLike | None = None) -> Manifest:
    """Validate, execute every grid point and write results atomically."""
    diags = validate(cfg)
    if diags:
        raise ConfigError(diags)
    out = Path(out if out is not None else cfg.out)
    start = time.perf_counter()
    points = cfg.points()
    with ThreadPoolExecutor(max_workers=min(thread_count(), len(points))) as pool:
        results = list(pool.map(lambda ip: _execute(cfg, ip[0], ip[1], out), enumerate(points)))
    rows, status, failures = [], [], []
    for index, (point, (prows, files)) in enumerate(zip(points, results)):
        for name, text in sorted(files.items()):
            atomic_write_text(out / name, text)
        for r in prows:
            r.setdefault("status", "ok")
            r.setdefault("message", "")
            rows.append({"index": index, **point, **r})
        failed = any(r["status"] != "ok" for r in prows)
        status.append({"index": index, "params": point, "status": "error" if failed else "ok",
                       "artifacts": sorted(files)})
        if failed:
            failures.append({"index": index, "message": prows[0]["message"]})
    atomic_write_text(out / "results.csv", _csv_text(_columns(cfg), rows))
    manifest = Manifest(cfg.digest(), cfg.seed, cfg.kind, versions(), status, failures,
                        time.perf_counter() - start)
    atomic_write_text(out / "manifest.json", _json({**manifest.deterministic_dict(),
                                                    "config": cfg.to_dict(),
                                                    "timing_file": "timing.json"}))
    atomic_write_text(out / "timing.json", _json({"wall_clock_s": manifest.wall_clock_s}))
    return manifest
