import json
from pathlib import Path

import numpy as np
import pytest

from eintail.cli import main
from eintail.config import ConfigError, build_settings, load_config
from eintail.tensor_core import DenseTensor, TensorShape, write_fixture

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def scalar_config(**overrides):
    doc = json.loads((CONFIG_DIR / "scalar_embedding.json").read_text())
    doc.update(overrides)
    return doc


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "[ok]" in out and "[FAIL]" not in out


def test_selftest_log_is_reproducible(capsys):
    main(["selftest"])
    first = capsys.readouterr().out
    main(["selftest"])
    second = capsys.readouterr().out
    assert first == second


def test_selftest_valid_fixture(tmp_path, capsys):
    t = DenseTensor(TensorShape((2,), (2,)), np.eye(2, dtype=complex))
    p = tmp_path / "id.tensor"
    write_fixture(t, p)
    assert main(["selftest", str(p)]) == 0
    assert "fixture id.tensor" in capsys.readouterr().out


def test_selftest_corrupted_fixture_exits_nonzero(tmp_path, capsys):
    p = tmp_path / "broken.tensor"
    p.write_text("1 1\n2\n2\n1.0 zzz\n")
    assert main(["selftest", str(p)]) == 4
    assert "[FAIL] fixture broken.tensor" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_missing_config_is_config_error(tmp_path, capsys):
    code = main(["experiment", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 4
    assert "config error" in capsys.readouterr().err


def test_schema_violation_reported(tmp_path, capsys):
    p = write_config(tmp_path, {"schema_version": 1, "mode": "hanson-wright"})
    assert main(["experiment", "--config", str(p), "--out", str(tmp_path)]) == 4
    assert "schema violation" in capsys.readouterr().err


def test_unknown_field_rejected(tmp_path):
    doc = scalar_config()
    doc["bogus_field"] = 1
    p = write_config(tmp_path, doc)
    assert main(["experiment", "--config", str(p), "--out", str(tmp_path)]) == 4


def test_load_config_rejects_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)


def test_decouple_config_under_experiment_rejected(tmp_path):
    p = CONFIG_DIR / "decouple_small.json"
    assert main(["experiment", "--config", str(p), "--out", str(tmp_path)]) == 4


def test_block_matrix_fixtures_roundtrip(tmp_path):
    shape = TensorShape((1,), (1,))
    paths = []
    for i in range(1):
        row = []
        for j in range(1):
            p = tmp_path / f"a{i}{j}.tensor"
            write_fixture(DenseTensor(shape, np.array([1.0], dtype=complex)), p)
            row.append(p.name)
        paths.append(row)
    doc = scalar_config(block_matrix={"kind": "fixtures", "paths": paths})
    cfg_path = write_config(tmp_path, doc)
    cfg = load_config(cfg_path)
    settings = build_settings(cfg, tmp_path)
    assert settings.block_matrix.n == 1


def test_block_matrix_fixture_grid_shape_checked(tmp_path):
    doc = scalar_config(block_matrix={"kind": "fixtures", "paths": [["a.tensor", "b.tensor"]]})
    cfg_path = write_config(tmp_path, doc)
    with pytest.raises(ConfigError, match="grid"):
        build_settings(load_config(cfg_path), tmp_path)


# ---------------------------------------------------------------------------
# experiment command
# ---------------------------------------------------------------------------

def test_experiment_scalar_golden_csv(tmp_path):
    code = main([
        "experiment", "--config", str(CONFIG_DIR / "scalar_embedding.json"),
        "--out", str(tmp_path),
    ])
    assert code == 0
    got = (tmp_path / "scalar_summary.csv").read_text()
    want = (GOLDEN_DIR / "scalar_summary.csv").read_text()
    assert got == want


def test_experiment_report_structure(tmp_path):
    main([
        "experiment", "--config", str(CONFIG_DIR / "scalar_embedding.json"),
        "--out", str(tmp_path),
    ])
    doc = json.loads((tmp_path / "scalar_report.json").read_text())
    for key in ("schema_version", "mode", "config", "assumptions", "pilot", "rows",
                "excluded_trials", "ensemble_note", "exit_code"):
        assert key in doc
    assert doc["exit_code"] == 0
    assert doc["assumptions"]["all_ok"] is True
    row = doc["rows"][0]
    for key in ("theta", "p_hat", "ci_low", "ci_high", "bound", "t_star", "verdict"):
        assert key in row
    # threads and output are execution details and stay out of the report
    assert "threads" not in doc["config"] and "output" not in doc["config"]


def test_experiment_threads_do_not_change_bytes(tmp_path):
    cfg = str(CONFIG_DIR / "scalar_embedding.json")
    main(["experiment", "--config", cfg, "--out", str(tmp_path / "a"), "--threads", "1"])
    main(["experiment", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3"])
    assert (tmp_path / "a/scalar_report.json").read_bytes() == (tmp_path / "b/scalar_report.json").read_bytes()
    assert (tmp_path / "a/scalar_summary.csv").read_bytes() == (tmp_path / "b/scalar_summary.csv").read_bytes()


def test_seed_override_moves_tails_not_bounds(tmp_path):
    cfg = str(CONFIG_DIR / "scalar_embedding.json")
    main(["experiment", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["experiment", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "555"])
    a = json.loads((tmp_path / "a/scalar_report.json").read_text())
    b = json.loads((tmp_path / "b/scalar_report.json").read_text())
    assert [r["bound"] for r in a["rows"]] == [r["bound"] for r in b["rows"]]
    assert [r["p_hat"] for r in a["rows"]] != [r["p_hat"] for r in b["rows"]]


def test_infeasible_theta_row_gives_refusal_exit(tmp_path):
    doc = scalar_config(polynomial=[2.0, 1.0], theta_grid=[1.0, 5.0])
    p = write_config(tmp_path, doc)
    code = main(["experiment", "--config", str(p), "--out", str(tmp_path)])
    assert code == 3
    report = json.loads((tmp_path / "scalar_report.json").read_text())
    verdicts = [r["verdict"] for r in report["rows"]]
    assert verdicts[0] == "refused" and "infeasible" in report["rows"][0]["note"]
    assert report["exit_code"] == 3


def test_trials_override(tmp_path):
    cfg = str(CONFIG_DIR / "scalar_embedding.json")
    main(["experiment", "--config", cfg, "--out", str(tmp_path), "--trials", "150"])
    doc = json.loads((tmp_path / "scalar_report.json").read_text())
    assert doc["rows"][0]["trials"] == 150


# ---------------------------------------------------------------------------
# bound command
# ---------------------------------------------------------------------------

def test_bound_command_has_no_tails(tmp_path):
    code = main([
        "bound", "--config", str(CONFIG_DIR / "scalar_embedding.json"),
        "--out", str(tmp_path),
    ])
    assert code == 0
    csv = (tmp_path / "scalar_summary.csv").read_text().splitlines()
    assert csv[0] == "theta,p_hat,ci_low,ci_high,bound,t_star,verdict"
    first = csv[1].split(",")
    assert first[1] == "" and first[2] == "" and first[3] == ""
    assert first[6] == "bound_only"
    doc = json.loads((tmp_path / "scalar_report.json").read_text())
    assert all(r["p_hat"] is None for r in doc["rows"])
    assert all(r["bound"] is not None for r in doc["rows"])


def test_exit_code_distinguishes_violation_from_refusal():
    from eintail.cli import _dominance_exit_code
    from eintail.verify import DominanceReport, DominanceRow

    def report(*verdicts):
        rows = tuple(
            DominanceRow(theta=1.0, tail=None, bound=1.0, bound_capped=1.0,
                         t_star=1.0, verdict=v)
            for v in verdicts
        )
        return DominanceReport(mode="hanson-wright", rows=rows, assumptions={},
                               pilot={}, excluded_trials=0, ensemble_note="")

    assert _dominance_exit_code(report("pass", "pass")) == 0
    assert _dominance_exit_code(report("pass", "refused")) == 3
    assert _dominance_exit_code(report("refused", "violation")) == 2


def test_sample_dominance_config_all_rows_pass(tmp_path):
    code = main([
        "experiment", "--config", str(CONFIG_DIR / "dominance_small.json"),
        "--out", str(tmp_path),
    ])
    assert code == 0
    doc = json.loads((tmp_path / "dominance_report.json").read_text())
    assert all(r["verdict"] == "pass" for r in doc["rows"])
    csv = (tmp_path / "dominance_summary.csv").read_text().splitlines()
    assert all(line.endswith(",pass") for line in csv[1:])


# ---------------------------------------------------------------------------
# decouple command
# ---------------------------------------------------------------------------

def test_decouple_exact_scalar(tmp_path):
    doc = {
        "schema_version": 1,
        "mode": "decouple",
        "master_seed": 5,
        "trials": 100,
        "k": 1,
        "theta_grid": [0.5, 1.0, 1.5, 2.5],
        "ensemble": {"row_dims": [1], "n": 2, "family": "scalar",
                     "eig_low": 0.5, "eig_high": 1.0, "mean_zero": True},
        "m_order": 2,
        "kernel": "product",
        "exact": True,
    }
    p = write_config(tmp_path, doc)
    code = main(["decouple", "--config", str(p), "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "decouple.json").read_text())
    assert abs(report["decoupling"]["d_hat"] - 2.0) < 1e-4
    assert report["decoupling"]["exact"] is True


def test_decouple_sample_config_runs(tmp_path):
    code = main([
        "decouple", "--config", str(CONFIG_DIR / "decouple_small.json"),
        "--out", str(tmp_path), "--trials", "400",
    ])
    assert code == 0
    report = json.loads((tmp_path / "decouple_report.json").read_text())
    assert report["decoupling"]["d_hat"] >= 1.0


def test_decouple_rejects_experiment_config(tmp_path):
    code = main([
        "decouple", "--config", str(CONFIG_DIR / "scalar_embedding.json"),
        "--out", str(tmp_path),
    ])
    assert code == 4
