import json
import os

import numpy as np
import pytest
import yaml

from growthlab.cli import main
from growthlab.reporting import (
    atomic_write_json, canonical_json, config_hash, load_bundle_arrays,
    save_bundle_arrays, write_csv,
)

MARKET = {
    "dim": 2,
    "n_steps": 25,
    "covariance": [[0.5, 0.1], [0.1, 0.4]],
    "drift": [0.8, 0.5],
}


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def run_cli(*args):
    return main(list(args))


def test_solve_roundtrip(tmp_path):
    cfg = write_config(tmp_path, "solve.yaml", {
        "kind": "solve",
        "covariance": [[1.0, 0.0], [0.0, 1.0]],
        "drift": [0.3, 0.4],
        "constraint": {"type": "ball", "radius": 10.0},
    })
    out = str(tmp_path / "run")
    assert run_cli("solve", "--config", cfg, "--out", out) == 0
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert np.allclose(summary["fraction"], [0.3, 0.4], atol=1e-9)
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["checks"] == {"solved": True}
    assert "summary.json" in manifest["files"]


def test_unknown_config_key_exits_2(tmp_path):
    cfg = write_config(tmp_path, "bad.yaml", {
        "kind": "solve",
        "covariance": [[1.0]],
        "drift": [0.5],
        "mystery": 1,
    })
    assert run_cli("solve", "--config", cfg,
                   "--out", str(tmp_path / "o")) == 2


def test_kind_mismatch_exits_2(tmp_path):
    cfg = write_config(tmp_path, "solve.yaml", {
        "kind": "solve", "covariance": [[1.0]], "drift": [0.5],
    })
    assert run_cli("simulate", "--config", cfg,
                   "--out", str(tmp_path / "o")) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert run_cli("solve", "--config", str(tmp_path / "nope.yaml"),
                   "--out", str(tmp_path / "o")) == 2


def test_failed_check_exits_1(tmp_path):
    # off-center residual pushes theta away from zero, failing theta_near_zero
    cfg = write_config(tmp_path, "ce.yaml", {
        "kind": "counterexample", "p": 0.6, "levels": [1],
        "signal_mean": 0.3,
    })
    assert run_cli("counterexample", "--config", cfg,
                   "--out", str(tmp_path / "o")) == 1


def test_numerical_error_exits_3(tmp_path):
    cfg = write_config(tmp_path, "ce.yaml", {
        "kind": "counterexample", "p": 0.6, "levels": [8],
        "signal_mean": 1.0,
    })
    assert run_cli("counterexample", "--config", cfg,
                   "--out", str(tmp_path / "o")) == 3


def test_simulate_writes_wealth_table(tmp_path):
    cfg = write_config(tmp_path, "sim.yaml", {
        "kind": "simulate", "market": MARKET,
        "constraint": {"type": "ball", "radius": 1.5}, "paths": 64,
    })
    out = str(tmp_path / "run")
    assert run_cli("simulate", "--config", cfg, "--seed", "3",
                   "--out", out) == 0
    lines = (tmp_path / "run" / "wealth.csv").read_text().splitlines()
    assert lines[0] == "t,logX,B,L,g"
    assert len(lines) == MARKET["n_steps"] + 2
    first = lines[1].split(",")
    assert all(float(v) == 0.0 for v in first)


def test_reruns_are_byte_identical_across_threads(tmp_path):
    cfg = write_config(tmp_path, "stab.yaml", {
        "kind": "stability-filtration", "market": MARKET,
        "signal": {"direction": [1.0, 0.3],
                   "noise_scales": [0.5, 0.25, 0.125]},
        "paths": 512,
    })
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert run_cli("stability", "--config", cfg, "--seed", "11",
                   "--threads", "1", "--out", out1) == 0
    assert run_cli("stability", "--config", cfg, "--seed", "11",
                   "--threads", "8", "--out", out2) == 0
    a = (tmp_path / "a" / "ladder.csv").read_bytes()
    b = (tmp_path / "b" / "ladder.csv").read_bytes()
    assert a == b
    sa = (tmp_path / "a" / "summary.json").read_bytes()
    sb = (tmp_path / "b" / "summary.json").read_bytes()
    assert sa == sb


def test_counterexample_checks_theta(tmp_path):
    cfg = write_config(tmp_path, "ce.yaml", {
        "kind": "counterexample", "p": 0.6, "levels": [1, 2, 3],
    })
    out = str(tmp_path / "run")
    assert run_cli("counterexample", "--config", cfg, "--out", out) == 0
    rows = (tmp_path / "run" / "gaps.csv").read_text().splitlines()
    assert rows[0] == "level,theta_star,gap"
    gaps = [float(r.split(",")[2]) for r in rows[1:]]
    assert np.allclose(gaps, 0.2, atol=1e-9)


def test_tree_projection_command(tmp_path):
    cfg = write_config(tmp_path, "tree.yaml", {
        "kind": "tree-projection", "depth": 6,
        "chi": {"leaf_indicator": 0},
    })
    out = str(tmp_path / "run")
    assert run_cli("tree", "--config", cfg, "--out", out) == 0
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["checks"]["monotone"]
    assert manifest["checks"]["zero_at_full_cap"]


def test_density_check_lognormal(tmp_path):
    cfg = write_config(tmp_path, "dens.yaml", {
        "kind": "density-check", "family": "lognormal",
        "vols": [0.4, 0.2, 0.1], "paths": 512, "n_steps": 64,
    })
    out = str(tmp_path / "run")
    assert run_cli("density-check", "--config", cfg, "--seed", "7",
                   "--out", out) == 0


def test_sensitivity_command_checks_identity(tmp_path):
    cfg = write_config(tmp_path, "sens.yaml", {
        "kind": "sensitivity", "market": MARKET,
        "tilt": {"lam1": [0.4, -0.2]}, "paths": 128,
    })
    out = str(tmp_path / "run")
    assert run_cli("sensitivity", "--config", cfg, "--seed", "5",
                   "--out", out) == 0
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["checks"]["response_identity"]


def test_bad_seed_exits_2(tmp_path):
    cfg = write_config(tmp_path, "sim.yaml", {
        "kind": "simulate", "market": MARKET, "paths": 16,
    })
    assert run_cli("simulate", "--config", cfg, "--seed", "-1",
                   "--out", str(tmp_path / "o")) == 2


def test_canonical_json_is_order_insensitive():
    a = {"b": 1, "a": [1.5, 2], "c": {"y": np.float64(0.25), "x": 3}}
    b = {"c": {"x": 3, "y": 0.25}, "a": [1.5, 2], "b": 1}
    assert canonical_json(a) == canonical_json(b)
    assert config_hash(a) == config_hash(b)


def test_atomic_write_replaces_existing(tmp_path):
    target = tmp_path / "out.json"
    atomic_write_json(str(target), {"v": 1})
    atomic_write_json(str(target), {"v": 2})
    assert json.loads(target.read_text()) == {"v": 2}
    leftovers = [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]
    assert leftovers == []


def test_csv_float_format_round_trips():
    import io
    path = "/tmp/growthlab-csv-test.csv"
    value = 0.1 + 0.2
    write_csv(path, ["x"], [[value]])
    with open(path) as fh:
        fh.readline()
        back = float(fh.readline())
    assert back == value


def test_bundle_cache_round_trip(tmp_path):
    path = str(tmp_path / "cache" / "b.npz")
    arrays = {"dM": np.arange(6.0).reshape(2, 3), "dG": np.array([0.1])}
    save_bundle_arrays(path, **arrays)
    back = load_bundle_arrays(path)
    assert np.array_equal(back["dM"], arrays["dM"])
    assert load_bundle_arrays(str(tmp_path / "missing.npz")) is None
