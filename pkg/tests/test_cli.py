import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from wavemvsvm.cli import run
from wavemvsvm.data import make_synthetic_two_view, save_matrix_csv, save_two_view_csv
from wavemvsvm.model import load


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    ds = make_synthetic_two_view(40, separation=4.0, noise_std=1.0, seed=0)
    save_two_view_csv(ds.subset(np.arange(30)), root / "train")
    test = ds.subset(np.arange(30, 40))
    save_matrix_csv(root / "t1.csv", test.view1)
    save_matrix_csv(root / "t2.csv", test.view2)
    save_matrix_csv(root / "labels01.csv", ((ds.labels[:30] + 1) / 2)[:, None])
    return root


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_train_then_predict(files, tmp_path):
    model = tmp_path / "model.json"
    assert run(["train", "--view1", str(files / "train/view1.csv"), "--labels-in-view1",
                "--synthesize-view2", "0.95", "--out", str(model)]) == 0
    assert model.exists() and (tmp_path / "model.json.manifest.json").exists()
    preds = tmp_path / "preds.csv"
    assert run(["predict", "--model", str(model), "--view1", str(files / "t1.csv"), "--out", str(preds)]) == 0
    rows = read_rows(preds)
    assert len(rows) == 10 and all(r[0] in ("1", "-1") and len(r) == 1 for r in rows)


def test_train_two_views_predict_two_views(files, tmp_path):
    model = tmp_path / "model.json"
    assert run(["train", "--view1", str(files / "train/view1.csv"), "--view2", str(files / "train/view2.csv"),
                "--labels-in-view1", "--standardize", "--out", str(model), "--trace-out", str(tmp_path / "t.csv")]) == 0
    preds = tmp_path / "preds.csv"
    assert run(["predict", "--model", str(model), "--view1", str(files / "t1.csv"), "--view2", str(files / "t2.csv"),
                "--out", str(preds), "--with-scores"]) == 0
    rows = read_rows(preds)
    assert len(rows) == 10
    for lab, score in rows:
        assert int(lab) == (1 if float(score) >= 0 else -1)
    assert "standardize" in load(model).preprocessing


def test_separate_zero_one_labels(files, tmp_path):
    view1 = tmp_path / "x.csv"
    save_matrix_csv(view1, np.loadtxt(files / "train/view1.csv", delimiter=",")[:, :-1])
    assert run(["train", "--view1", str(view1), "--labels", str(files / "labels01.csv"), "--zero-one-labels",
                "--synthesize-view2", "0.9", "--out", str(tmp_path / "m.json")]) == 0


def test_unknown_flag_is_usage_error(capsys):
    assert run(["train", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_required_flag_is_usage_error():
    assert run(["predict", "--model", "m.json"]) == 2


def test_runtime_errors_exit_one(files, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,1\n3,1\n")
    assert run(["train", "--view1", str(bad), "--labels-in-view1", "--synthesize-view2", "0.95",
                "--out", str(tmp_path / "m.json")]) == 1
    assert run(["predict", "--model", str(tmp_path / "missing.json"), "--view1", str(files / "t1.csv"),
                "--out", str(tmp_path / "p.csv")]) == 1


def test_invalid_hyperparameter_exits_one(files, tmp_path):
    assert run(["train", "--view1", str(files / "train/view1.csv"), "--labels-in-view1", "--synthesize-view2",
                "0.95", "--gamma", "-1", "--out", str(tmp_path / "m.json")]) == 1


def test_config_precedence(files, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"view1 = {files / 'train/view1.csv'}\nlabels-in-view1 = true\nsynthesize-view2 = 0.95\n"
                   "gamma = 3\nc1 = 0.5\n")
    out = tmp_path / "m.json"
    assert run(["train", "--config", str(cfg), "--out", str(out), "--c1", "2"]) == 0
    hp = load(out).hyperparams
    assert hp.gamma == 3.0 and hp.c1 == 2.0 and hp.c2 == 1.0


def test_config_unknown_key_is_usage_error(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nonsense = 1\n")
    assert run(["train", "--config", str(cfg), "--out", str(tmp_path / "m.json")]) == 2


def test_noise_sweep_rate_zero_reproduces_eval(files, tmp_path):
    common = ["--view1", str(files / "train/view1.csv"), "--view2", str(files / "train/view2.csv"),
              "--labels-in-view1", "--seed", "7"]
    assert run(["eval", *common, "--out-dir", str(tmp_path / "e")]) == 0
    assert run(["noise-sweep", *common, "--rates", "0,0.2", "--out-dir", str(tmp_path / "n")]) == 0
    assert (tmp_path / "e/roc.csv").read_bytes() == (tmp_path / "n/rate_0_roc.csv").read_bytes()
    assert (tmp_path / "e/summary.json").read_bytes() == (tmp_path / "n/rate_0_summary.json").read_bytes()
    assert len(read_rows(tmp_path / "n/noise.csv")) == 3


def test_stats_published_ranks(tmp_path):
    assert run(["stats", "--avg-ranks", "1.55,3.43,4.87,4.70,5.17,3.57,4.72", "--n-datasets", "30",
                "--out-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["chi2_f"] == pytest.approx(62.5275, abs=0.01)
    assert summary["cd"] == pytest.approx(1.645, abs=1e-3)
    assert read_rows(tmp_path / "stats.csv")[0] == ["chi2_f", "f_f", "cd"]


def test_stats_from_accuracy_matrix(tmp_path):
    acc = tmp_path / "acc.csv"
    acc.write_text("model,d1,d2,d3\nA,0.9,0.8,0.7\nB,0.8,0.8,0.6\nC,0.7,0.6,0.5\n")
    assert run(["stats", "--acc", str(acc), "--out-dir", str(tmp_path / "o")]) == 0
    ranks = read_rows(tmp_path / "o/ranks.csv")
    assert ranks[1][0] == "A" and float(ranks[1][1]) == pytest.approx(7 / 6)


def test_tune_and_trace(files, tmp_path):
    common = ["--view1", str(files / "train/view1.csv"), "--view2", str(files / "train/view2.csv"),
              "--labels-in-view1"]
    assert run(["tune", *common, "--grid-sigma", "2^-1:2^1", "--grid-c1", "1", "--folds", "3",
                "--out-dir", str(tmp_path / "tune")]) == 0
    assert len(read_rows(tmp_path / "tune/grid.csv")) == 4
    best = json.loads((tmp_path / "tune/best.json").read_text())
    assert best["sigma"] in (0.5, 1.0, 2.0)
    assert run(["trace", *common, "--out-dir", str(tmp_path / "tr")]) == 0
    assert read_rows(tmp_path / "tr/trace.csv")[0] == ["iter", "objective", "res1", "res2", "res3", "res4"]


def strip_clock(manifest_path):
    doc = json.loads(manifest_path.read_text())
    doc.pop("timestamp")
    doc.pop("wall_clock_seconds")
    return doc


def test_reruns_are_byte_identical(files, tmp_path):
    outputs = []
    for _ in range(2):
        argv = ["eval", "--view1", str(files / "train/view1.csv"), "--labels-in-view1", "--synthesize-view2",
                "0.95", "--out-dir", str(tmp_path / "run")]
        assert run(argv) == 0
        outputs.append({p.name: p.read_bytes() for p in (tmp_path / "run").iterdir() if p.name != "manifest.json"}
                       | {"manifest": strip_clock(tmp_path / "run/manifest.json")})
    assert outputs[0] == outputs[1]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wavemvsvm.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
