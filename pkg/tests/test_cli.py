"""Command line: every subcommand end to end on a tiny config."""

import json

import pytest

import unlearnlab as ul
from unlearnlab.cli import main


@pytest.fixture(scope="module")
def cfg_path(tiny_cfg, tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "tiny.json"
    path.write_text(json.dumps(ul.config_to_dict(tiny_cfg)))
    return str(path)


def test_train_writes_both_checkpoints(cfg_path, tmp_path, capsys):
    out = tmp_path / "models"
    rc = main(["train", "--config", cfg_path, "--out", str(out)])
    assert rc == 0
    base = ul.load_checkpoint(out / "base_seed0.ckpt")
    retrain = ul.load_checkpoint(out / "retrain_seed0.ckpt")
    assert base.arch == retrain.arch
    assert "wrote" in capsys.readouterr().out


def test_train_honors_seed_flag(cfg_path, tmp_path):
    out = tmp_path / "models"
    rc = main(["train", "--config", cfg_path, "--seed", "1", "--out", str(out)])
    assert rc == 0
    assert (out / "base_seed1.ckpt").exists()
    assert not (out / "base_seed0.ckpt").exists()


def test_unlearn_then_evaluate(cfg_path, tmp_path, capsys):
    out = tmp_path / "work"
    rc = main(["unlearn", "--config", cfg_path, "--method", "finetune",
               "--out", str(out)])
    assert rc == 0
    ckpt = out / "finetune_seed0.ckpt"
    assert ckpt.exists()

    rc = main(["evaluate", "--config", cfg_path, "--out", str(out), str(ckpt)])
    assert rc == 0
    rows = ul.read_metrics_csv(out / "metrics.csv")
    assert [r.method for r in rows[:2]] == ["base", "retrain"]
    assert rows[2].method == "finetune_seed0"
    assert rows[1].gap_tp == 0.0
    text = capsys.readouterr().out
    assert "base:" in text and "retain" in text


def test_unlearn_rejects_disabled_method(cfg_path, tmp_path, capsys):
    rc = main(["unlearn", "--config", cfg_path, "--method", "neggrad",
               "--out", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_run_writes_full_report(cfg_path, tmp_path, capsys):
    out = tmp_path / "report"
    rc = main(["run", "--config", cfg_path, "--out", str(out)])
    assert rc == 0
    rows = ul.read_metrics_csv(out / "metrics.csv")
    assert {r.method for r in rows} == {"base", "retrain", "regun", "finetune"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["format"] == "unlearnlab-run v1"
    assert (out / "aggregated.csv").exists()
    text = capsys.readouterr().out
    assert "test" in text and "rmia" in text


def test_run_method_restriction_and_workers(cfg_path, tmp_path):
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    argv = ["run", "--config", cfg_path, "--method", "finetune"]
    assert main(argv + ["--out", str(serial)]) == 0
    assert main(argv + ["--out", str(parallel), "--workers", "2"]) == 0
    for name in ("metrics.csv", "aggregated.csv", "manifest.json"):
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()
    rows = ul.read_metrics_csv(serial / "metrics.csv")
    assert {r.method for r in rows} == {"base", "retrain", "finetune"}


def test_report_reaggregates_byte_identically(cfg_path, tmp_path):
    out = tmp_path / "report"
    assert main(["run", "--config", cfg_path, "--out", str(out)]) == 0
    original = (out / "aggregated.csv").read_bytes()
    (out / "aggregated.csv").unlink()
    assert main(["report", "--out", str(out)]) == 0
    assert (out / "aggregated.csv").read_bytes() == original


def test_sweep_writes_curve(cfg_path, tmp_path, capsys):
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", cfg_path, "--method", "regun",
               "--seed", "0", "--out", str(out)])
    assert rc == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("method,w,n_seeds")
    assert len(lines) == 1 + len(ul.harness.DEFAULT_SWEEP_WS)
    assert all(ln.startswith("regun,") for ln in lines[1:])
    assert "gap_tp" in capsys.readouterr().out


def test_missing_config_is_a_clean_error(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "absent.json"),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_bad_config_keys_are_a_clean_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"learning_rate": 0.1}))
    rc = main(["train", "--config", str(path), "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_report_without_metrics_is_a_clean_error(tmp_path, capsys):
    rc = main(["report", "--out", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_forget_fraction_override(cfg_path, tmp_path):
    out = tmp_path / "override"
    rc = main(["train", "--config", cfg_path, "--forget-fraction", "0.3",
               "--out", str(out)])
    assert rc == 0
    assert (out / "base_seed0.ckpt").exists()
