import csv
import json

import numpy as np
import pytest

from dybm.cli import main
from dybm.persist import STEP_COLUMNS, SUMMARY_COLUMNS


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- train -----------------------------------------------------------------------

def test_train_row_count(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["train", "--model", "var", "--d", "1", "--steps", "1000", "--runs", "1",
                 "--seed", "7", "--out", str(out), "--no-timing"]) == 0
    rows = read_rows(out)
    assert tuple(rows[0]) == STEP_COLUMNS
    assert len(rows) == 1001
    assert [int(r[0]) for r in rows[1:]] == list(range(1, 1001))
    summary = read_rows(tmp_path / "run.summary.csv")
    assert tuple(summary[0]) == SUMMARY_COLUMNS and len(summary) == 2
    assert b"\r\n" not in out.read_bytes()


def test_train_missing_d(capsys):
    assert main(["train", "--steps", "1000"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_train_bad_flag_value(capsys):
    assert main(["train", "--d", "abc"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_train_is_byte_identical(tmp_path):
    argv = ["train", "--d", "2", "--mu", "0.5", "--steps", "500", "--runs", "3", "--seed", "3", "--no-timing"]
    main(argv + ["--out", str(tmp_path / "a.csv")])
    main(argv + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.summary.csv").read_bytes() == (tmp_path / "b.summary.csv").read_bytes()


def test_floats_round_trip_exactly(tmp_path):
    out = tmp_path / "r.csv"
    main(["train", "--d", "3", "--steps", "300", "--runs", "1", "--out", str(out), "--no-timing"])
    from dybm.experiment import ExperimentConfig, make_data
    targets = make_data(ExperimentConfig(d=3, steps=300, runs=1), 0)
    assert [float(r[1]) for r in read_rows(out)[1:]] == targets.tolist()


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"d": 2, "steps": 300, "runs": 2, "model": "var"}))
    out = tmp_path / "o.csv"
    assert main(["train", "--config", str(cfg), "--steps", "400", "--out", str(out), "--no-timing"]) == 0
    assert len(read_rows(out)) == 401
    row = read_rows(tmp_path / "o.summary.csv")[1]
    assert row[:5] == ["var", "2", "0", "2", "400"]


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"d": 2, "learning_rate": 0.1}))
    assert main(["train", "--config", str(cfg)]) == 2
    assert "learning_rate" in capsys.readouterr().err


def test_user_data(tmp_path):
    data = tmp_path / "x.csv"
    values = np.random.default_rng(0).normal(size=(250, 2))
    data.write_text("a,b\n" + "\n".join(f"{a:.17g},{b:.17g}" for a, b in values) + "\n")
    out = tmp_path / "o.csv"
    assert main(["train", "--d", "2", "--runs", "1", "--data", str(data), "--out", str(out), "--no-timing"]) == 0
    rows = read_rows(out)
    assert rows[0][:3] == ["step", "target_0", "target_1"]
    assert len(rows) == 251
    assert float(rows[1][1]) == values[0, 0]


def test_divergence_exit_code(tmp_path, capsys):
    data = tmp_path / "x.csv"
    data.write_text("\n".join(["1e200"] * 300) + "\n")
    code = main(["train", "--d", "1", "--runs", "1", "--rule", "sgd", "--eta0", "10",
                 "--data", str(data), "--no-timing"])
    err = capsys.readouterr().err
    assert code == 3
    assert "run 0" in err and "step" in err


# --- sweep -----------------------------------------------------------------------

def test_sweep_improvement_definition(tmp_path):
    assert main(["sweep", "--mus", "0,0.9", "--ds", "1", "--steps", "1000", "--runs", "4",
                 "--out-dir", str(tmp_path), "--no-timing"]) == 0
    rows = read_rows(tmp_path / "summary.csv")[1:]
    assert len(rows) == 2
    var_mse, dybm_mse = float(rows[0][5]), float(rows[1][5])
    assert float(rows[0][6]) == 0.0
    assert float(rows[1][6]) == pytest.approx(1 - dybm_mse / var_mse, abs=1e-15)
    curve = read_rows(tmp_path / "curve_d1_mu0.9.csv")
    assert len(curve) == 1001


def test_sweep_timing_table(tmp_path):
    assert main(["sweep", "--mus", "0,0.5", "--ds", "1,16,32,64", "--steps", "200", "--runs", "2",
                 "--out-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "timing.csv")
    assert rows[0] == ["d", "mu=0", "mu=0.5"]
    assert [r[0] for r in rows[1:]] == ["1", "16", "32", "64"]
    assert all(float(v) > 0 for r in rows[1:] for v in r[1:])


def test_sweep_requires_out_dir(capsys):
    assert main(["sweep", "--ds", "1"]) == 2


# --- snapshot ----------------------------------------------------------------------

def test_snapshot_resume_is_bit_identical(tmp_path):
    base = ["--d", "5", "--mu", "0.7", "--eta0", "0.01", "--seed", "11"]
    assert main(["snapshot", "save", str(tmp_path / "s.json"), "--steps", "200", *base]) == 0
    assert main(["snapshot", "load", str(tmp_path / "s.json"), "--steps", "100",
                 "--out", str(tmp_path / "resumed.csv")]) == 0
    assert main(["snapshot", "save", str(tmp_path / "full.json"), "--steps", "300", *base,
                 "--out", str(tmp_path / "full.csv")]) == 0
    resumed = read_rows(tmp_path / "resumed.csv")[1:]
    full = read_rows(tmp_path / "full.csv")[201:]
    assert len(resumed) == 100 and resumed == full


def test_snapshot_chain_save(tmp_path):
    base = ["--d", "3", "--seed", "2"]
    main(["snapshot", "save", str(tmp_path / "a.json"), "--steps", "50", *base])
    main(["snapshot", "load", str(tmp_path / "a.json"), "--steps", "50", "--save", str(tmp_path / "b.json")])
    main(["snapshot", "save", str(tmp_path / "c.json"), "--steps", "100", *base])
    assert json.loads((tmp_path / "b.json").read_text()) == json.loads((tmp_path / "c.json").read_text())


def test_snapshot_empty_file(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    assert main(["snapshot", "load", str(path)]) == 4


def test_snapshot_missing_file(tmp_path):
    assert main(["snapshot", "load", str(tmp_path / "nope.json")]) == 4


def test_snapshot_version_tampered(tmp_path, capsys):
    path = tmp_path / "s.json"
    main(["snapshot", "save", str(path), "--d", "2", "--steps", "10"])
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    assert main(["snapshot", "load", str(path)]) == 4
    assert "version" in capsys.readouterr().err


def test_snapshot_corrupt_content(tmp_path):
    path = tmp_path / "s.json"
    main(["snapshot", "save", str(path), "--d", "2", "--steps", "10"])
    doc = json.loads(path.read_text())
    del doc["model"]
    path.write_text(json.dumps(doc))
    assert main(["snapshot", "load", str(path)]) == 4
