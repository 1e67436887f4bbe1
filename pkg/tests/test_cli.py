import json
from pathlib import Path

import pytest

from sparsedom.cli import (EXIT_CONFIG, EXIT_FAILED_CHECKS, EXIT_OK,
                           ConfigError, Scenario, main, validate_config)


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def tiny_config(**extra):
    cfg = {
        "geometry": {"dimension": 1, "resolution": 4},
        "seed": 0,
        "exponents": {"p": [2.0, 2.0], "p0": 1.0, "gamma": 1.0},
        "weights": {"kind": "constant", "values": [1.0, 1.0]},
        "checks": ["constants"],
    }
    cfg.update(extra)
    return cfg


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        validate_config({"geometry": {"dimension": 1, "resolution": 4},
                         "bogus": 1})


def test_unknown_check_rejected():
    with pytest.raises(ConfigError):
        validate_config(tiny_config(checks=["not_a_check"]))


def test_missing_geometry_rejected():
    with pytest.raises(ConfigError):
        validate_config({"seed": 0})


def test_cli_config_error_exit(tmp_path, capsys):
    path = write_config(tmp_path, {"nope": 1})
    rc = main(["run", "--config", path, "--out", str(tmp_path / "out")])
    assert rc == EXIT_CONFIG
    diag = json.loads(capsys.readouterr().err)
    assert diag["error"] == "config"


def test_empty_check_list(tmp_path):
    path = write_config(tmp_path, tiny_config(checks=[]))
    out = tmp_path / "out"
    rc = main(["run", "--config", path, "--out", str(out)])
    assert rc == EXIT_OK
    assert (out / "summary.csv").read_text() == \
        "check,lhs,rhs,ratio,slack,pass\n"


def test_constants_trivial_scenario(tmp_path):
    path = write_config(tmp_path, tiny_config())
    out = tmp_path / "out"
    rc = main(["run", "--config", path, "--out", str(out)])
    assert rc == EXIT_OK
    rows = (out / "summary.csv").read_text().strip().splitlines()[1:]
    assert rows
    for row in rows:
        fields = row.split(",")
        assert fields[0].startswith("constants.")
        assert float(fields[2]) == pytest.approx(1.0, abs=1e-12)  # rhs: value
        assert fields[5] == "True"


def test_determinism(tmp_path):
    path = write_config(tmp_path, tiny_config(
        checks=["constants", "p0_reduction", "cz_decomposition"]))
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["run", "--config", path, "--out", str(out)]) == EXIT_OK
        outs.append((out / "summary.csv").read_bytes()
                    + (out / "report.jsonl").read_bytes())
    assert outs[0] == outs[1]


def test_report_rows_roundtrip(tmp_path):
    path = write_config(tmp_path, tiny_config())
    out = tmp_path / "out"
    main(["run", "--config", path, "--out", str(out)])
    for line in (out / "report.jsonl").read_text().splitlines():
        rec = json.loads(line)
        assert {"check", "lhs", "rhs", "ratio", "slack", "pass"} <= set(rec)


def test_seed_override_changes_seeded_inputs(tmp_path):
    cfg = tiny_config(weights={"kind": "seeded"})
    path = write_config(tmp_path, cfg)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    main(["run", "--config", path, "--out", str(out1), "--seed", "1"])
    main(["run", "--config", path, "--out", str(out2), "--seed", "2"])
    assert (out1 / "summary.csv").read_text() != \
        (out2 / "summary.csv").read_text()


def test_sweep_single_point_matches_run(tmp_path):
    base = tiny_config()
    sweep_cfg = dict(base)
    sweep_cfg["sweep"] = {"parameter": "gamma", "values": [1.0]}
    p_run = write_config(tmp_path, base, "run.json")
    p_sweep = write_config(tmp_path, sweep_cfg, "sweep.json")
    out_r, out_s = tmp_path / "r", tmp_path / "s"
    assert main(["run", "--config", p_run, "--out", str(out_r)]) == EXIT_OK
    assert main(["sweep", "--config", p_sweep, "--out", str(out_s)]) == EXIT_OK
    run_rows = (out_r / "summary.csv").read_text().splitlines()[1:]
    sweep_rows = (out_s / "summary.csv").read_text().splitlines()[1:]
    assert [f"gamma=1.0,{row}" for row in run_rows] == sweep_rows


def test_sweep_resolution_three_rows(tmp_path):
    cfg = tiny_config(checks=["p0_reduction"])
    cfg["sweep"] = {"parameter": "resolution", "values": [4, 5, 6]}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["sweep", "--config", path, "--out", str(out)]) == EXIT_OK
    rows = (out / "summary.csv").read_text().strip().splitlines()[1:]
    assert len(rows) == 3
    assert [r.split(",")[0] for r in rows] == [
        "resolution=4", "resolution=5", "resolution=6"]


def test_sweep_degeneracy_monotone(tmp_path):
    cfg = {
        "geometry": {"dimension": 1, "resolution": 5},
        "seed": 0,
        "exponents": {"p": [2.0, 2.0], "p0": 1.0, "gamma": 1.0},
        "weights": {"kind": "two_step", "values": [[1.0, 1.0], [1.0, 1.0]]},
        "checks": ["constants"],
        "sweep": {"parameter": "weight_scale", "values": [1.0, 8.0, 64.0]},
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    main(["sweep", "--config", path, "--out", str(out)])
    rows = [r.split(",") for r in
            (out / "summary.csv").read_text().strip().splitlines()[1:]]
    ap_rows = [float(r[3]) for r in rows if r[1] == "constants.ap_multi"]
    assert ap_rows == sorted(ap_rows)
    assert ap_rows[-1] > ap_rows[0]


def test_sweep_requires_section(tmp_path):
    path = write_config(tmp_path, tiny_config())
    rc = main(["sweep", "--config", path, "--out", str(tmp_path / "o")])
    assert rc == EXIT_CONFIG


def test_dominate_verb(tmp_path):
    cfg = {
        "geometry": {"dimension": 1, "resolution": 5},
        "seed": 0,
        "kernel": {"name": "smooth_tensor", "width": 0.25},
        "functions": {"kind": "seeded", "count": 1},
        "checks": ["domination"],
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    rc = main(["dominate", "--config", path, "--out", str(out)])
    assert rc == EXIT_OK
    families = json.loads((out / "families.json").read_text())
    assert "constant" in families and "families" in families
    assert (out / "plots" / "domination.csv").exists()


def test_constants_verb(tmp_path):
    path = write_config(tmp_path, tiny_config(checks=[]))
    out = tmp_path / "out"
    rc = main(["constants", "--config", path, "--out", str(out)])
    assert rc == EXIT_OK
    assert "constants.hruscev" in (out / "summary.csv").read_text()


def test_threads_do_not_change_output(tmp_path):
    path = write_config(tmp_path, tiny_config(
        checks=["constants", "p0_reduction", "kolmogorov"]))
    out1, out2 = tmp_path / "t1", tmp_path / "t4"
    main(["run", "--config", path, "--out", str(out1), "--threads", "1"])
    main(["run", "--config", path, "--out", str(out2), "--threads", "4"])
    assert (out1 / "summary.csv").read_bytes() == \
        (out2 / "summary.csv").read_bytes()


def test_failed_check_exit_code(tmp_path):
    # an impossibly tight slack forces a failing report, not an error
    cfg = tiny_config(checks=["kolmogorov"],
                      weights={"kind": "seeded"},
                      calibration={"slack.kolmogorov": 1e-9})
    path = write_config(tmp_path, cfg)
    rc = main(["run", "--config", path, "--out", str(tmp_path / "out")])
    assert rc == EXIT_FAILED_CHECKS
