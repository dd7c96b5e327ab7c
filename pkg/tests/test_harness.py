import csv
import json
from pathlib import Path

import pytest

from normnet import harness as H
from normnet.cli import main
from normnet.errors import ConfigError
from normnet.net import load


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def tree_bytes(root: Path):
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "timing.json"}


SQUARE_TOML = """
kind = "construct-sweep"
seed = 3
out = "unused"

[grid]
k = [1, 2, 4]

[params]
construction = "square"
grid_n = 2001
"""


# ------------------------------------------------------------------ config

def test_points_are_cartesian_in_key_order():
    cfg = H.ExperimentConfig("probe-sweep", {"n": [1, 2], "d": [3, 4, 5]}, 0)
    pts = cfg.points()
    assert len(pts) == 6 and pts[0] == {"n": 1, "d": 3} and pts[1] == {"n": 1, "d": 4}


def test_load_config_toml_and_json(tmp_path):
    cfg = H.load_config(write(tmp_path, "a.toml", SQUARE_TOML))
    assert cfg.kind == "construct-sweep" and cfg.grid == {"k": [1, 2, 4]}
    js = write(tmp_path, "a.json", json.dumps(cfg.to_dict()))
    assert H.load_config(js).digest() == cfg.digest()
    with pytest.raises(ConfigError):
        H.load_config(write(tmp_path, "b.json", json.dumps({"kind": "x", "bogus": 1})))


def test_validate_reports_every_problem():
    cfg = H.ExperimentConfig("nope", {}, None, out="")
    fields = {d.field for d in H.validate(cfg)}
    assert {"kind", "seed", "out", "grid"} <= fields


@pytest.mark.parametrize("kind,params,grid,field", [
    ("construct-sweep", {"construction": "circle"}, {"k": [1]}, "construction"),
    ("construct-sweep", {"construction": "taylor", "d": 2, "N": 2}, {"k": [2], "alpha": [-1.0]}, "alpha"),
    ("probe-sweep", {}, {"n": [1]}, "params.probe"),
    ("probe-sweep", {"probe": "packing"}, {"m": [30]}, "m"),
    ("probe-sweep", {"probe": "bounds", "K": 2.0, "L": 1, "alpha": 1.0}, {"d": [2]}, "d/alpha"),
    ("regress-sweep", {"K": 1.0, "lam": 0.1}, {"n": [10]}, "K/lam"),
    ("regress-sweep", {"K": 1.0, "typo": 3}, {"n": [10]}, "typo"),
    ("gan-run", {}, {"seed": [0]}, "K/lam"),
])
def test_validate_kind_specific(kind, params, grid, field):
    cfg = H.ExperimentConfig(kind, grid, 0, params=params)
    assert field in {d.field for d in H.validate(cfg)}


def test_run_rejects_invalid(tmp_path):
    with pytest.raises(ConfigError):
        H.run(H.ExperimentConfig("construct-sweep", {}, 0), tmp_path)


# ------------------------------------------------------------------ run

def test_construct_sweep_outputs(tmp_path):
    cfg = H.load_config(write(tmp_path, "c.toml", SQUARE_TOML))
    out = tmp_path / "out"
    man = H.run(cfg, out)
    assert man.exit_code == H.EXIT_OK
    rows = read_rows(out / "results.csv")
    assert [r["k"] for r in rows] == ["1", "2", "4"]
    assert all(r["within_bound"] == "true" and r["status"] == "ok" for r in rows)
    assert list(rows[0]) == list(H.COLUMNS["construct-sweep"])
    net = load(out / "points" / "0002-net.json")
    assert net.width == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == cfg.digest() and "wall_clock_s" not in manifest
    assert "wall_clock_s" in json.loads((out / "timing.json").read_text())


def test_rerun_is_byte_identical(tmp_path, monkeypatch):
    cfg = H.ExperimentConfig("probe-sweep", {"n": [20, 40], "d": [1, 2]}, 11,
                             params={"probe": "wasserstein", "mc_samples": 2000})
    H.run(cfg, tmp_path / "a")
    monkeypatch.setenv("NORMNET_THREADS", "3")
    H.run(cfg, tmp_path / "b")
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_failed_point_gives_exit_3(tmp_path):
    cfg = H.ExperimentConfig("construct-sweep", {"N": [1, 4]}, 0,
                             params={"construction": "taylor", "d": 2, "k": 8, "alpha": 1.0,
                                     "max_weights": 20_000, "grid_n": 17})
    man = H.run(cfg, tmp_path)
    assert man.exit_code == H.EXIT_POINT_FAILED
    rows = read_rows(tmp_path / "results.csv")
    assert rows[0]["status"] == "ok" and rows[1]["status"] == "error"
    assert "ResourceCapError" in rows[1]["message"]


def test_regress_and_gan_sweeps(tmp_path):
    reg = H.ExperimentConfig("regress-sweep", {"n": [40, 80]}, 0,
                             params={"K_rate_c": 1.0, "epochs": 2, "holdout": 100})
    man = H.run(reg, tmp_path / "r")
    assert man.exit_code == 0
    rows = read_rows(tmp_path / "r" / "results.csv")
    assert all(float(r["kappa_max"]) <= float(r["K"]) for r in rows)
    assert (tmp_path / "r" / "points" / "0001-log.csv").exists()
    gan = H.ExperimentConfig("gan-run", {"seed": [0]}, 0,
                             params={"lam": 0.05, "outer_steps": 4, "n": 64, "batch": 16,
                                     "eval_samples": 200, "checkpoint_every": 2})
    assert H.run(gan, tmp_path / "g").exit_code == 0
    assert len(read_rows(tmp_path / "g" / "results.csv")) == 3


def test_probe_kinds(tmp_path):
    for probe, grid in [("rademacher", {"n": [10], "K": [1.0]}), ("packing", {"m": [8]}),
                        ("bounds", {"d": [3], "alpha": [1.0], "K": [2.0], "L": [1]})]:
        cfg = H.ExperimentConfig("probe-sweep", grid, 0,
                                 params={"probe": probe, "d": 2, "trials": 50})
        assert H.run(cfg, tmp_path / probe).exit_code == 0
        header = (tmp_path / probe / "results.csv").read_text().split("\n")[0]
        assert header == ",".join(H.COLUMNS[f"probe-{probe}"])


# ------------------------------------------------------------------ CLI

def test_cli_construct_and_inspect(tmp_path, capsys):
    path = tmp_path / "sq.json"
    assert main(["construct", "square", "--k", "4", "--out", str(path), "--certify",
                 "--grid-n", "1001"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["within_bound"] is True and out["kappa"] == pytest.approx(3.0)
    assert out["bracket"] >= out["grid_error"]
    assert main(["net", "inspect", str(path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["width"] == 4 and info["kappa"] == pytest.approx(3.0)


def test_cli_taylor_cap_is_error(capsys):
    code = main(["construct", "taylor", "--N", "4", "--k", "8", "--max-weights", "10"])
    assert code == 1 and "ResourceCapError" in capsys.readouterr().err


def test_cli_probe(tmp_path, capsys):
    csv_path = tmp_path / "p.csv"
    assert main(["probe", "rademacher", "--n", "20", "--trials", "100", "--csv", str(csv_path)]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 20
    assert read_rows(csv_path)[0]["status"] == "ok"
    assert main(["probe", "bounds", "--d", "2", "--alpha", "1"]) == H.EXIT_INVALID
    assert "regime" in capsys.readouterr().err


def test_cli_train(tmp_path, capsys):
    cfg = write(tmp_path, "r.toml", "n = 40\nepochs = 2\nK = 2.0\nholdout = 50\n")
    assert main(["train", "regress", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "report.csv").exists() and (tmp_path / "o" / "predictor.json").exists()
    bad = write(tmp_path, "b.toml", "n = 40\n")
    assert main(["train", "regress", "--config", str(bad)]) == H.EXIT_INVALID
    typo = write(tmp_path, "t.toml", "n = 40\nK = 1.0\nbogus = 2\n")
    assert main(["train", "gan", "--config", str(typo)]) == H.EXIT_INVALID


def test_cli_sweep(tmp_path, capsys):
    cfg = write(tmp_path, "s.toml", SQUARE_TOML)
    assert main(["sweep", "run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "3 points, 0 failed" in capsys.readouterr().out
    bad = write(tmp_path, "bad.toml", 'kind = "construct-sweep"\n[grid]\nk = [1]\n')
    assert main(["sweep", "run", "--config", str(bad)]) == H.EXIT_INVALID
    assert "seed" in capsys.readouterr().err


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.name)
def test_shipped_configs_are_valid(path):
    if path.name.startswith("train_"):
        from normnet.learn import GanConfig, RegressionConfig
        cls = GanConfig if "gan" in path.name else RegressionConfig
        assert cls(**H.load_table(path)).validate() == []
    else:
        assert H.validate(H.load_config(path)) == []
