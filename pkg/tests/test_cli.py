import csv
import json
import logging

import pytest

from transg.cli import main

TINY_KINECT = {
    "mode": "sgt_gpc_stpr",
    "d": 8,
    "heads": 2,
    "d_k": 4,
    "layers": 1,
    "pe_dim": 2,
    "seq_len": 4,
    "mask_nodes": 2,
    "mask_frames": 1,
    "batch_size": 6,
    "instances_per_id": 2,
    "epochs": 1,
}


@pytest.fixture(autouse=True)
def detach_cli_log_handlers():
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, "_transg", False)]:
        root.removeHandler(handler)


def _error(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def _synth(out, *extra):
    return main(["synth", "--out", str(out), *extra])


@pytest.fixture
def kinect_data(tmp_path):
    out = tmp_path / "kinect"
    assert _synth(out, "--ids", "3", "--seqs", "4", "--probe", "2", "--gallery", "2", "--frames", "4") == 0
    return out / "manifest.json"


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY_KINECT))
    return path


@pytest.fixture
def trained_run(tmp_path, kinect_data, tiny_config_file, capsys):
    run = tmp_path / "run"
    code = main(["train", "--config", str(tiny_config_file), "--manifest", str(kinect_data), "--out", str(run)])
    assert code == 0
    capsys.readouterr()
    return run


def test_synth_defaults_write_two_hundred_training_lines(tmp_path, capsys):
    assert _synth(tmp_path / "data") == 0
    assert capsys.readouterr().out.strip().endswith("manifest.json")
    assert len((tmp_path / "data" / "train.jsonl").read_text().splitlines()) == 200
    manifest = json.loads((tmp_path / "data" / "manifest.json").read_text())
    assert manifest["J"] == 20 and manifest["f"] == 6


def test_synth_is_byte_identical_for_a_seed(tmp_path):
    assert _synth(tmp_path / "a", "--seed", "5", "--ids", "3", "--seqs", "2") == 0
    assert _synth(tmp_path / "b", "--seed", "5", "--ids", "3", "--seqs", "2") == 0
    assert (tmp_path / "a" / "train.jsonl").read_bytes() == (tmp_path / "b" / "train.jsonl").read_bytes()


def test_synth_with_one_identity_is_a_configuration_error(tmp_path, capsys):
    assert _synth(tmp_path / "data", "--ids", "1") == 2
    assert _error(capsys)["error"] == "configuration_error"


def test_synth_refuses_a_non_empty_directory(tmp_path, capsys):
    assert _synth(tmp_path / "data", "--ids", "2", "--seqs", "1") == 0
    assert _synth(tmp_path / "data", "--ids", "2", "--seqs", "1") == 2
    assert _error(capsys)["error"] == "configuration_error"
    assert _synth(tmp_path / "data", "--ids", "2", "--seqs", "1", "--force") == 0


def test_train_then_eval(trained_run, capsys):
    assert (trained_run / "metrics.csv").exists()
    assert (trained_run / "checkpoint" / "params.bin").exists()
    assert main(["eval", "--checkpoint", str(trained_run / "checkpoint"), "--rankings"]) == 0
    metrics = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert set(metrics) == {"mAP", "R1", "R5", "R10"}
    report = trained_run / "checkpoint" / "eval"
    with open(report / "report.csv", newline="") as f:
        row = next(csv.DictReader(f))
    assert row["probes"] == "6" and row["excluded"] == "0"
    assert len((report / "rankings.jsonl").read_text().splitlines()) == 6
    assert json.loads((report / "report.json").read_text())["config"]["d"] == 8


def test_train_prints_a_summary(tmp_path, kinect_data, tiny_config_file, capsys):
    run = tmp_path / "summary"
    assert main(["train", "--config", str(tiny_config_file), "--manifest", str(kinect_data), "--out", str(run)]) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["output_dir"] == str(run) and summary["epochs"] == 1
    assert set(summary["final"]) == {"mAP", "R1", "R5", "R10"}


def test_eval_against_another_skeleton_is_a_schema_error(tmp_path, trained_run, capsys):
    assert _synth(tmp_path / "pose", "--graph", "pose14", "--ids", "2", "--seqs", "1", "--probe", "1", "--gallery", "1", "--frames", "4") == 0
    code = main(["eval", "--checkpoint", str(trained_run / "checkpoint"), "--manifest", str(tmp_path / "pose" / "manifest.json")])
    assert code == 2
    assert _error(capsys)["error"] == "schema_error"


def test_unknown_config_key_is_rejected(tmp_path, kinect_data, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**TINY_KINECT, "dropout": 0.1}))
    assert main(["train", "--config", str(path), "--manifest", str(kinect_data), "--out", str(tmp_path / "run")]) == 2
    error = _error(capsys)
    assert error["error"] == "configuration_error"
    assert any("dropout" in v for v in error["details"]["violations"])


def test_malformed_config_file_is_a_parse_error(tmp_path, kinect_data, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"mode": "pc",\n')
    assert main(["train", "--config", str(path), "--manifest", str(kinect_data)]) == 2
    assert _error(capsys)["error"] == "parse_error"


def test_flags_override_the_config_file(tmp_path, kinect_data, tiny_config_file):
    run = tmp_path / "run"
    code = main(
        ["train", "--config", str(tiny_config_file), "--manifest", str(kinect_data), "--out", str(run), "--mode", "sgt_ds", "--lr", "0.01", "--eval-every", "0"]
    )
    assert code == 0
    saved = json.loads((run / "config.json").read_text())
    assert saved["mode"] == "sgt_ds" and saved["lr"] == 0.01 and saved["d"] == 8


def test_train_without_manifest_is_a_configuration_error(tiny_config_file, capsys):
    assert main(["train", "--config", str(tiny_config_file)]) == 2
    assert _error(capsys)["error"] == "configuration_error"


def test_gradcheck_passes_on_the_tiny_config(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split() == ["group", "size", "rel_error", "result"]
    assert "FAIL" not in out


def test_embed_writes_one_row_per_sequence(tmp_path, trained_run):
    out = tmp_path / "reps.csv"
    assert main(["embed", "--checkpoint", str(trained_run / "checkpoint"), "--out", str(out)]) == 0
    with open(out, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][:4] == ["split", "index", "identity", "source_id"] and len(rows[0]) == 4 + 8
    assert [r[0] for r in rows[1:]].count("train") == 12
    assert len(rows) == 1 + 12 + 6 + 6
    saved = json.loads((tmp_path / "reps.config.json").read_text())
    assert saved["mode"] == "sgt_gpc_stpr" and saved["d"] == 8


def test_ablate_writes_every_mode(tmp_path, kinect_data, tiny_config_file):
    out = tmp_path / "suite"
    assert main(["ablate", "--config", str(tiny_config_file), "--manifest", str(kinect_data), "--out", str(out)]) == 0
    lines = (out / "ablation.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in lines] == ["mode", "baseline", "pc", "sgt_ds", "sgt_gpc", "sgt_gpc_stpr"]
