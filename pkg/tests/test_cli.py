"""Command-line behavior: wiring, exit codes, artifacts, reproducibility."""

import json
import subprocess
import sys

import numpy as np
import pytest

from uadb.cli import main


def _read(path):
    return path.read_bytes()


@pytest.fixture()
def clustered_csv(tmp_path):
    path = tmp_path / "clustered.csv"
    assert main(["synth", "--kind", "clustered", "--seed", "1", "--out", str(path)]) == 0
    return path


# ---------------------------------------------------------------------------
# synth


def test_synth_writes_expected_counts(clustered_csv, capsys):
    text = clustered_csv.read_text(encoding="utf-8").splitlines()
    assert len(text) == 301  # header + 300 rows
    labels = [row.rsplit(",", 1)[1] for row in text[1:]]
    assert labels.count("1") == 45


def test_synth_small_global(tmp_path):
    out = tmp_path / "g.csv"
    rep = tmp_path / "g.json"
    rc = main(
        ["synth", "--kind", "global", "--n", "20", "--rate", "0.1", "--out", str(out), "--report", str(rep)]
    )
    assert rc == 0
    assert json.loads(rep.read_text())["n_anomalies"] == 2


def test_synth_unknown_kind_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--kind", "banana"])
    assert exc.value.code == 2


def test_synth_requires_kind(capsys):
    assert main(["synth"]) == 2
    assert "usage error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# detect


def test_detect_reports_metrics_and_scores(clustered_csv, tmp_path, capsys):
    scores = tmp_path / "scores.txt"
    rep = tmp_path / "detect.json"
    rc = main(
        [
            "detect",
            "--data", str(clustered_csv),
            "--label-column", "label",
            "--detector", "knn",
            "--k", "5",
            "--scores-out", str(scores),
            "--report", str(rep),
        ]
    )
    assert rc == 0
    blob = json.loads(rep.read_text())
    assert 0.0 <= blob["metrics"]["aucroc"] <= 1.0
    assert blob["metrics"]["n_pos"] == 45
    lines = [ln for ln in scores.read_text().splitlines() if ln]
    assert len(lines) == 300
    values = np.array([float(v) for v in lines])
    assert values.min() >= 0.0 and values.max() <= 1.0


def test_detect_k_too_large_is_data_error(clustered_csv, capsys):
    rc = main(
        ["detect", "--data", str(clustered_csv), "--detector", "lof", "--k", "500"]
    )
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_detect_missing_data_flag(capsys):
    assert main(["detect", "--detector", "knn"]) == 2


def test_detect_missing_file_is_data_error(capsys):
    assert main(["detect", "--data", "/nonexistent.csv", "--detector", "knn"]) == 1


# ---------------------------------------------------------------------------
# boost


def test_boost_full_run_artifacts(clustered_csv, tmp_path, capsys):
    scores = tmp_path / "boost-scores.txt"
    hist = tmp_path / "history.csv"
    rep = tmp_path / "boost.json"
    rc = main(
        [
            "boost",
            "--data", str(clustered_csv),
            "--label-column", "label",
            "--teacher", "iforest",
            "--strategy", "uadb",
            "--seed", "1",
            "--scores-out", str(scores),
            "--history-out", str(hist),
            "--report", str(rep),
        ]
    )
    assert rc == 0
    header = hist.read_text().splitlines()[0].split(",")
    assert header == [f"y{t}" for t in range(1, 12)]  # T=10 -> 11 columns
    blob = json.loads(rep.read_text())
    assert blob["runs"][0]["booster"]["aucroc"] > 0.0
    assert len([ln for ln in scores.read_text().splitlines() if ln]) == 300


def test_boost_teacher_scores_length_mismatch(clustered_csv, tmp_path, capsys):
    ext = tmp_path / "ext.txt"
    ext.write_text("0.1\n0.2\n0.3\n", encoding="utf-8")
    rc = main(
        ["boost", "--data", str(clustered_csv), "--teacher-scores", str(ext), "--iterations", "1"]
    )
    assert rc == 1
    assert "expected 300 scores" in capsys.readouterr().err


def test_boost_requires_exactly_one_teacher(clustered_csv, capsys):
    assert main(["boost", "--data", str(clustered_csv)]) == 2


def test_boost_external_teacher_scores(clustered_csv, tmp_path):
    ext = tmp_path / "ext.txt"
    rc = main(
        ["detect", "--data", str(clustered_csv), "--detector", "hbos", "--scores-out", str(ext)]
    )
    assert rc == 0
    rep = tmp_path / "ext-boost.json"
    rc = main(
        [
            "boost",
            "--data", str(clustered_csv),
            "--label-column", "label",
            "--teacher-scores", str(ext),
            "--iterations", "2",
            "--folds", "2",
            "--report", str(rep),
        ]
    )
    assert rc == 0
    assert json.loads(rep.read_text())["runs"][0]["teacher"]["aucroc"] > 0.0


def test_boost_naive_vs_uadb_reports(clustered_csv, tmp_path):
    reports = {}
    for strategy in ("naive", "uadb"):
        rep = tmp_path / f"{strategy}.json"
        rc = main(
            [
                "boost",
                "--data", str(clustered_csv),
                "--label-column", "label",
                "--teacher", "iforest",
                "--strategy", strategy,
                "--seed", "1",
                "--iterations", "2",
                "--report", str(rep),
            ]
        )
        assert rc == 0
        reports[strategy] = json.loads(rep.read_text())
    assert reports["naive"]["config"]["strategy"] == "naive"
    assert reports["uadb"]["config"]["strategy"] == "uadb"
    for blob in reports.values():
        assert {"teacher", "booster"} <= set(blob["runs"][0])


def test_boost_repeat_averages(clustered_csv, tmp_path):
    rep = tmp_path / "rep.json"
    rc = main(
        [
            "boost",
            "--data", str(clustered_csv),
            "--label-column", "label",
            "--teacher", "knn",
            "--iterations", "1",
            "--folds", "2",
            "--repeat", "2",
            "--seed", "3",
            "--report", str(rep),
        ]
    )
    assert rc == 0
    blob = json.loads(rep.read_text())
    assert [r["seed"] for r in blob["runs"]] == [3, 4]
    assert "mean" in blob


def test_boost_grid_export(tmp_path):
    csv = tmp_path / "small.csv"
    assert main(["synth", "--kind", "global", "--n", "40", "--seed", "2", "--out", str(csv)]) == 0
    grid = tmp_path / "grid.csv"
    rc = main(
        [
            "boost",
            "--data", str(csv),
            "--label-column", "label",
            "--teacher", "knn",
            "--iterations", "1",
            "--folds", "1",
            "--grid-out", str(grid),
            "--grid-size", "5",
        ]
    )
    assert rc == 0
    rows = grid.read_text().splitlines()
    assert rows[0] == "x1,x2,score"
    assert len(rows) == 1 + 25
    scores = [float(r.split(",")[2]) for r in rows[1:]]
    assert all(0.0 <= s <= 1.0 for s in scores)


# ---------------------------------------------------------------------------
# ablate


def test_ablate_six_rows_and_origin_consistency(clustered_csv, tmp_path):
    rep = tmp_path / "ablate.json"
    rc = main(
        [
            "ablate",
            "--data", str(clustered_csv),
            "--label-column", "label",
            "--teacher", "iforest",
            "--seed", "1",
            "--iterations", "2",
            "--report", str(rep),
        ]
    )
    assert rc == 0
    rows = json.loads(rep.read_text())["rows"]
    assert [r["variant"] for r in rows] == [
        "origin", "naive", "discrepancy", "self", "discrepancy-star", "uadb",
    ]
    det_rep = tmp_path / "det.json"
    rc = main(
        [
            "detect",
            "--data", str(clustered_csv),
            "--label-column", "label",
            "--detector", "iforest",
            "--seed", "1",
            "--report", str(det_rep),
        ]
    )
    assert rc == 0
    det = json.loads(det_rep.read_text())["metrics"]
    origin = rows[0]
    assert origin["aucroc"] == det["aucroc"]
    assert origin["ap"] == det["ap"]


def test_ablate_requires_labels(tmp_path, capsys):
    csv = tmp_path / "nolabel.csv"
    csv.write_text("a,b\n1.0,2.0\n3.0,4.0\n5.0,6.0\n", encoding="utf-8")
    rc = main(["ablate", "--data", str(csv), "--teacher", "knn", "--k", "1"])
    assert rc == 1


def test_ablate_uadb_leads_four_kind_suite(tmp_path):
    """Seeded four-dataset suite: the full method tops the mean AUCROC table."""
    means = {}
    for kind in ("clustered", "global", "local", "dependency"):
        csv = tmp_path / f"{kind}.csv"
        rep = tmp_path / f"{kind}.json"
        assert main(["synth", "--kind", kind, "--seed", "1", "--out", str(csv)]) == 0
        rc = main(
            [
                "ablate",
                "--data", str(csv),
                "--label-column", "label",
                "--teacher", "iforest",
                "--seed", "1",
                "--report", str(rep),
            ]
        )
        assert rc == 0
        for row in json.loads(rep.read_text())["rows"]:
            means.setdefault(row["variant"], []).append(row["aucroc"])
    table = {variant: float(np.mean(v)) for variant, v in means.items()}
    assert max(table, key=table.get) == "uadb"


# ---------------------------------------------------------------------------
# config resolution and environment


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "global", "n": 30, "seed": 5}), encoding="utf-8")
    out = tmp_path / "out.csv"
    rep = tmp_path / "rep.json"
    rc = main(
        ["synth", "--config", str(cfg), "--n", "40", "--out", str(out), "--report", str(rep)]
    )
    assert rc == 0
    blob = json.loads(rep.read_text())
    assert blob["config"]["kind"] == "global"
    assert blob["config"]["n"] == 40  # flag beats config file
    assert blob["config"]["seed"] == 5


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "global", "bogus": 1}), encoding="utf-8")
    assert main(["synth", "--config", str(cfg)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_seed_env_var_default(tmp_path, monkeypatch):
    monkeypatch.setenv("UADB_SEED", "9")
    rep = tmp_path / "rep.json"
    assert main(["synth", "--kind", "local", "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["config"]["seed"] == 9


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "uadb.cli", "synth", "--kind", "global", "--n", "20"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "n=20" in proc.stdout
