"""CLI surface: ingest, run, analyze, report."""

import json

import numpy as np
import pytest
import yaml

from conftest import build_mock_cache
from harood.runner.cli import main
from harood.scenarios import save_bundle

SYNTH = {
    "domain_count": 2, "class_count": 2, "channels": 2, "length": 16,
    "noise_std": 0.05, "samples_per_class_per_domain": 8,
}


def _run_config(tmp_path, **extra):
    cfg = {
        "algorithm": "erm", "lr": 0.05, "batch_size": 8, "max_epoch": 2,
        "dataset": "synthetic", "trials": 1, "output": str(tmp_path / "out"),
        "synthetic": SYNTH,
    }
    cfg.update(extra)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


def test_run_subcommand(tmp_path, capsys):
    cfg = _run_config(tmp_path)
    assert main(["run", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    summary = json.loads(out)
    assert "tasks" in summary and summary["algorithm"] == "erm"
    assert (tmp_path / "out" / "summary.json").exists()
    runs = list((tmp_path / "out" / "runs").rglob("*.jsonl"))
    assert len(runs) == 2  # 2 leave-one-out tasks x 1 combo x 1 trial


def test_run_with_set_overrides(tmp_path, capsys):
    cfg = _run_config(tmp_path)
    assert main(["run", "--config", str(cfg), "--set", "test_envs=[0]",
                 "--set", "max_epoch=1"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert list(summary["tasks"]) == ["t0"]


def test_run_invalid_algorithm_fails_cleanly(tmp_path, capsys):
    cfg = _run_config(tmp_path, algorithm="not_a_method")
    assert main(["run", "--config", str(cfg)]) == 1
    assert "error:" in capsys.readouterr().err


def test_ingest_subcommand(tmp_path, capsys):
    rng = np.random.default_rng(0)
    raw = tmp_path / "raw"
    for a in (1, 2):
        for p in (1, 2):
            d = raw / f"a{a:02d}" / f"p{p}"
            d.mkdir(parents=True)
            np.savetxt(d / "s01.txt", rng.normal(size=(125, 45)), delimiter=",",
                       fmt="%.3f")
    assert main(["ingest", "--dataset", "dsads", "--root", str(raw),
                 "--out", str(tmp_path / "cache")]) == 0
    assert "2 subject cache file(s)" in capsys.readouterr().out


def test_analyze_subcommand(tmp_path, synthetic_bundle, capsys):
    bundle_dir = save_bundle(synthetic_bundle, tmp_path / "bundle")
    out = tmp_path / "distances.json"
    assert main(["analyze", "--bundle", str(bundle_dir), "--normalization",
                 "zscore", "--out", str(out), "--sample-cap", "20"]) == 0
    report = json.loads(out.read_text())
    assert report["normalization"] == "z_score"
    assert set(report["averages"]) == {"mmd", "w1", "emd"}
    assert len(report["per_pair"]) == 3  # C(3,2)


def test_report_subcommand(tmp_path, capsys):
    cfg = _run_config(tmp_path)
    assert main(["run", "--config", str(cfg)]) == 0
    capsys.readouterr()
    store = tmp_path / "out"
    assert main(["report", "--store", str(store), "--protocol", "valid"]) == 0
    report_dir = store / "report"
    assert (report_dir / "accuracy_valid.csv").exists()
    assert (report_dir / "ranks_valid.csv").exists()
    assert (report_dir / "timing.csv").exists()
    assert (report_dir / "report_valid.md").exists()
    assert main(["report", "--store", str(store), "--protocol", "oracle"]) == 0
    assert (report_dir / "accuracy_oracle.csv").exists()


def test_report_empty_store_fails(tmp_path, capsys):
    assert main(["report", "--store", str(tmp_path / "nothing")]) == 1
    assert "error:" in capsys.readouterr().err
