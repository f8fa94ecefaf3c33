"""Batch front door: exit codes, artifact layout, reproducibility."""

import json

import pytest

from perfectsim import cli


def _run(*argv):
    return cli.main(list(argv))


# --------------------------------------------------------------- happy paths


def test_sample_writes_csv_rows_and_a_summary(tmp_path):
    out = tmp_path / "draws"
    rc = _run(
        "sample",
        "--kernel",
        "autoregressive",
        "--reps",
        "40",
        "--seed",
        "3",
        "--k",
        "1",
        "--out",
        str(out),
    )
    assert rc == 0
    lines = (tmp_path / "draws.csv").read_text().splitlines()
    assert lines[0].startswith("# schema=1 config=")
    assert lines[1] == "replication,x[-1],x[0],abs_T,rounds,uniforms"
    assert len(lines) == 42
    first = lines[2].split(",")
    assert first[0] == "0" and first[1] in "01" and first[2] in "01"

    summary = json.loads((tmp_path / "draws.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["replications"] == 40
    assert summary["config"]["kernel"] == "autoregressive"
    assert set(summary["marginal_newest"]) <= {"0", "1"}
    assert sum(summary["marginal_newest"].values()) == 40
    assert summary["mean_abs_T"] >= 0.0
    assert 0.0 <= summary["mean_x0"] <= 1.0


def test_sample_reruns_are_byte_identical(tmp_path):
    out = tmp_path / "rerun"
    args = (
        "sample",
        "--kernel",
        "autoregressive",
        "--reps",
        "25",
        "--seed",
        "9",
        "--out",
        str(out),
    )
    assert _run(*args) == 0
    csv1 = (tmp_path / "rerun.csv").read_bytes()
    json1 = (tmp_path / "rerun.json").read_bytes()
    assert _run(*args) == 0
    assert (tmp_path / "rerun.csv").read_bytes() == csv1
    assert (tmp_path / "rerun.json").read_bytes() == json1


def test_sample_auxiliary_rows_leave_stopping_columns_empty(tmp_path):
    out = tmp_path / "aux"
    rc = _run(
        "sample",
        "--kernel",
        "flipflop",
        "--algo",
        "auxiliary",
        "--reps",
        "4",
        "--k",
        "2",
        "--out",
        str(out),
    )
    assert rc == 0
    lines = (tmp_path / "aux.csv").read_text().splitlines()
    assert lines[1] == "replication,x[-2],x[-1],x[0],abs_T,rounds,uniforms"
    assert lines[2] == "0,*,*,*,,,"


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "kernel": "autoregressive",
                "seed": 4,
                "reps": 30,
                "params": {"delta": 0.4, "theta": "geometric:0.5"},
            }
        )
    )
    out = tmp_path / "merged"
    rc = _run(
        "sample",
        "--config",
        str(cfg),
        "--reps",
        "10",
        "--param",
        "delta=0.25",
        "--out",
        str(out),
    )
    assert rc == 0
    summary = json.loads((tmp_path / "merged.json").read_text())
    assert summary["replications"] == 10  # flag beat the config value
    assert summary["config"]["params"]["delta"] == 0.25  # per-key merge
    assert summary["config"]["params"]["theta"] == "geometric:0.5"  # kept
    assert summary["config"]["seed"] == 4


def test_validate_reports_contract_checks(tmp_path):
    out = tmp_path / "val"
    rc = _run(
        "validate", "--kernel", "ladder", "--reps", "40", "--out", str(out)
    )
    assert rc == 0
    payload = json.loads((tmp_path / "val.json").read_text())
    assert payload["passed"] is True
    assert payload["trials"] == 40
    assert payload["violations"] == []


def test_analyze_markov_reports_structure(tmp_path):
    out = tmp_path / "cycle"
    rc = _run("analyze-markov", "--kernel", "cyclic4", "--out", str(out))
    assert rc == 0
    payload = json.loads((tmp_path / "cycle.json").read_text())
    assert payload["nhat"] == 1
    assert payload["n0"] == 2
    assert payload["n_closed_classes"] == 1
    assert payload["period"] == 1
    assert payload["n_states"] == 4
    matrix = (tmp_path / "cycle-matrix.csv").read_text().splitlines()
    assert matrix[1].split(",")[0] == "from\\to"
    assert len(matrix) == 2 + 4  # comment, header, one row per window


def test_analyze_markov_reports_a_null_order_honestly(tmp_path):
    out = tmp_path / "ff"
    rc = _run("analyze-markov", "--kernel", "flipflop", "--out", str(out))
    assert rc == 0
    payload = json.loads((tmp_path / "ff.json").read_text())
    assert payload["nhat"] is None
    assert payload["n0"] is None
    assert len(payload["reports"]) == 6
    assert payload["n_closed_classes"] == 2  # order-1 fallback analysis


def test_diagnose_writes_all_tables(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "kernel": "autoregressive",
                "n_terms": 4,
                "window_w": 300,
                "renewal_h": 8,
                "horizon": 3,
            }
        )
    )
    out = tmp_path / "diag"
    rc = _run("diagnose", "--config", str(cfg), "--reps", "150", "--out", str(out))
    assert rc == 0
    payload = json.loads((tmp_path / "diag.json").read_text())
    assert payload["condition_report"]["rho_source"] == "closed-form"
    assert len(payload["condition_report"]["rho_values"]) == 4
    assert payload["renewal"]["window_w"] == 300
    assert payload["renewal"]["truncation_bias"] > 0.0
    rho = (tmp_path / "diag-rho.csv").read_text().splitlines()
    assert rho[1] == "n,rho,rho_tilde"
    assert len(rho) == 2 + 4
    tail = (tmp_path / "diag-tail.csv").read_text().splitlines()
    assert tail[1] == "n,exact_tail,mc_tail,mc_se"
    assert len(tail) == 2 + 4  # horizon 3 -> n = 0..3
    exact0 = float(tail[2].split(",")[1])
    assert exact0 == 0.5
    gaps = (tmp_path / "diag-gaps.csv").read_text().splitlines()
    assert gaps[1] == "half,gap"


# ---------------------------------------------------------------- exit codes


def test_unknown_kernel_is_a_config_error(capsys):
    assert _run("sample", "--kernel", "nonesuch") == 2
    err = capsys.readouterr().err
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "config-error"


def test_overlong_decimal_literals_are_refused(tmp_path, capsys):
    rc = _run(
        "sample",
        "--kernel",
        "autoregressive",
        "--param",
        "delta=0.123456789012345678901",
        "--out",
        str(tmp_path / "x"),
    )
    assert rc == 2
    assert "decimal digits" in capsys.readouterr().err


def test_spontaneous_route_rejection_maps_to_exit_3(tmp_path, capsys):
    rc = _run(
        "sample",
        "--kernel",
        "flipflop",
        "--reps",
        "5",
        "--out",
        str(tmp_path / "ff"),
    )
    assert rc == 3
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload["error"] == "assumption-violated"
    assert payload["type"] == "BetaZeroForAlgo1"


def test_round_budget_exhaustion_maps_to_exit_4(tmp_path, capsys):
    rc = _run(
        "sample",
        "--kernel",
        "cyclic4",
        "--algo",
        "algo2",
        "--reps",
        "2",
        "--max-rounds",
        "3",
        "--out",
        str(tmp_path / "c4"),
    )
    assert rc == 4
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload["error"] == "budget-exceeded"
    assert payload["type"] == "MaxRoundsExceeded"


def test_missing_kernel_is_a_config_error(capsys):
    assert _run("sample") == 2
    assert "required" in capsys.readouterr().err
