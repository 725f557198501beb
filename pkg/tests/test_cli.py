"""End-to-end command-line interface behavior, exit codes, and CSV output."""

import csv
import json

import pytest

from nonholo.cli import main

BALL_CFG = {
    "system": "ball_chaplygin",
    "inertia": [1.0, 2.0, 3.0],
    "D": 1.0,
    "epsilon": 1.0,
    "initial": {"seed": 7},
    "integrator": {"t_end": 1.0, "samples": 5},
}

ELR_CFG = {
    "system": "elr_multiplier",
    "n": 3,
    "k": 1,
    "epsilon": 0.5,
    "inertia": {"kind": "wedge_products", "a": [0.8, 1.1, 1.7]},
    "initial": {"seed": 1},
    "integrator": {"t_end": 1.0, "samples": 5},
    "checks": ["liouville", "volume", "integrals"],
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg), encoding="utf-8")
    return str(p)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# simulate


def test_simulate_writes_trajectory_with_expected_header(tmp_path):
    cfg = write_cfg(tmp_path, BALL_CFG)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "ball_chaplygin_trajectory.csv")
    assert rows[0] == ["t", "k1", "k2", "k3", "g1", "g2", "g3", "H", "log_density", "residual"]
    assert len(rows) == 1 + 5
    assert rows[1][0] == "0"


def test_simulate_deterministic_bytes(tmp_path):
    cfg = write_cfg(tmp_path, BALL_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
    b1 = (out1 / "ball_chaplygin_trajectory.csv").read_bytes()
    b2 = (out2 / "ball_chaplygin_trajectory.csv").read_bytes()
    assert b1 == b2
    assert b"\r" not in b1  # LF endings only


def test_simulate_seed_changes_output(tmp_path):
    cfg = write_cfg(tmp_path, BALL_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--seed", "8", "--out", str(out2)]) == 0
    b1 = (out1 / "ball_chaplygin_trajectory.csv").read_bytes()
    b2 = (out2 / "ball_chaplygin_trajectory.csv").read_bytes()
    assert b1 != b2


def test_simulate_zero_horizon_single_sample(tmp_path):
    cfg = dict(BALL_CFG, integrator={"t_end": 0.0})
    p = write_cfg(tmp_path, cfg)
    assert main(["simulate", "--config", p, "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "ball_chaplygin_trajectory.csv")
    assert len(rows) == 2


def test_simulate_values_round_trip_at_full_precision(tmp_path):
    cfg = write_cfg(tmp_path, BALL_CFG)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "ball_chaplygin_trajectory.csv")
    for row in rows[1:]:
        for cell in row:
            assert ("%.17g" % float(cell)) == cell


def test_simulate_abort_exits_four(tmp_path):
    cfg = dict(BALL_CFG, integrator={"t_end": 50.0, "max_steps": 5})
    p = write_cfg(tmp_path, cfg)
    assert main(["simulate", "--config", p, "--out", str(tmp_path)]) == 4


# ---------------------------------------------------------------------------
# verify


def test_verify_volume_pass(tmp_path):
    cfg = write_cfg(tmp_path, BALL_CFG)
    assert main(["verify", "--config", cfg, "--check", "volume", "--seeds", "2",
                 "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "ball_chaplygin_volume.csv")
    assert rows[0] == ["system", "n", "r", "k", "epsilon", "seed", "check",
                       "quantity", "value", "tolerance", "status"]
    body = rows[1:]
    assert {r[10] for r in body} == {"pass"}
    # seeds enumerate upward from the configured base seed
    assert {r[5] for r in body} == {"7", "8"}


def test_verify_liouville_and_integrals(tmp_path):
    cfg = write_cfg(tmp_path, ELR_CFG)
    assert main(["verify", "--config", cfg, "--check", "liouville",
                 "--out", str(tmp_path)]) == 0
    assert main(["verify", "--config", cfg, "--check", "integrals",
                 "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "elr_multiplier_integrals.csv")
    quantities = {r[7] for r in rows[1:]}
    assert "phi1_drift" in quantities


def test_verify_liouville_rejected_for_constrained_system(tmp_path):
    cfg = write_cfg(tmp_path, dict(BALL_CFG, checks=["liouville"]))
    assert main(["verify", "--config", cfg, "--check", "liouville",
                 "--out", str(tmp_path)]) == 3


def test_verify_tight_tolerance_fails_with_exit_two(tmp_path):
    cfg = write_cfg(tmp_path, dict(BALL_CFG, tolerance=1e-20))
    assert main(["verify", "--config", cfg, "--check", "volume",
                 "--out", str(tmp_path)]) == 2
    rows = read_rows(tmp_path / "ball_chaplygin_volume.csv")
    assert any(r[10] == "fail" for r in rows[1:])


def test_env_var_sets_default_tolerance(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, BALL_CFG)
    monkeypatch.setenv("NONHOLO_DEFAULT_TOL", "1e-20")
    assert main(["verify", "--config", cfg, "--check", "volume",
                 "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("NONHOLO_DEFAULT_TOL", "not-a-number")
    assert main(["verify", "--config", cfg, "--check", "volume",
                 "--out", str(tmp_path)]) == 3


def test_config_tolerance_wins_over_env(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, dict(BALL_CFG, tolerance=10.0))
    monkeypatch.setenv("NONHOLO_DEFAULT_TOL", "1e-20")
    assert main(["verify", "--config", cfg, "--check", "volume",
                 "--out", str(tmp_path)]) == 0


# ---------------------------------------------------------------------------
# crosscheck


def test_crosscheck_pair_and_reversed_alias(tmp_path):
    cfg = write_cfg(tmp_path, dict(BALL_CFG, system="ball_rubber", D=0.5,
                                   epsilon=0.5, variables="m"))
    assert main(["crosscheck", "--config", cfg,
                 "--pair", "ball_rubber:elr_multiplier", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "crosscheck_ball_rubber_elr_multiplier.csv")
    assert rows[0] == ["t", "deviation"]
    assert max(float(r[1]) for r in rows[1:]) < 1e-8
    assert main(["crosscheck", "--config", cfg,
                 "--pair", "elr_multiplier:ball_rubber", "--out", str(tmp_path)]) == 0


def test_crosscheck_requires_matching_system(tmp_path):
    cfg = write_cfg(tmp_path, BALL_CFG)
    assert main(["crosscheck", "--config", cfg,
                 "--pair", "ball_rubber:elr_multiplier", "--out", str(tmp_path)]) == 3


def test_crosscheck_unknown_pair(tmp_path):
    cfg = write_cfg(tmp_path, BALL_CFG)
    assert main(["crosscheck", "--config", cfg,
                 "--pair", "ball_chaplygin:veselova", "--out", str(tmp_path)]) == 3


# ---------------------------------------------------------------------------
# configuration errors


@pytest.mark.parametrize(
    "patch",
    [
        {"system": "pendulum"},
        {"epsilon": None},
        {"epsilon": 0.0, "checks": ["volume"]},
        {"inertia": [1.0, -2.0, 3.0]},
        {"integrator": {"t_end": -2.0}},
        {"integrator": {"timestep": 0.1}},
        {"initial": {"coords": [1.0, 2.0]}},
        {"variables": "quaternion", "system": "ball_rubber"},
    ],
)
def test_bad_configs_exit_three(tmp_path, patch):
    cfg = {k: v for k, v in dict(BALL_CFG, **patch).items() if v is not None}
    p = write_cfg(tmp_path, cfg)
    assert main(["simulate", "--config", p, "--out", str(tmp_path)]) == 3


def test_invalid_chaplygin_pair_parameters(tmp_path):
    cfg = {
        "system": "lpr_stiefel",
        "a": [1.0, 2.0, 3.0],
        "D": 2.0,
        "r": 1,
        "epsilon": 1.0,
    }
    p = write_cfg(tmp_path, cfg)
    assert main(["simulate", "--config", p, "--out", str(tmp_path)]) == 3


def test_malformed_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"system": ', encoding="utf-8")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 3
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 3


def test_explicit_initial_coordinates(tmp_path):
    cfg = dict(BALL_CFG)
    cfg["initial"] = {"coords": [0.3, -0.2, 0.5, 0.0, 0.6, 0.8]}
    p = write_cfg(tmp_path, cfg)
    assert main(["simulate", "--config", p, "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "ball_chaplygin_trajectory.csv")
    first = [float(v) for v in rows[1][4:7]]
    assert first == [0.0, 0.6, 0.8]
