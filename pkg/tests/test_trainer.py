import csv
import json
import logging
from pathlib import Path

import numpy as np
import pytest

from transg.core.config import ABLATION_MODES, TrainConfig
from transg.core.errors import (
    ConfigurationError,
    DivergenceError,
    IncompatibleCheckpointError,
    ParseError,
    SchemaError,
)
from transg.core.evalrank import evaluate_sequences
from transg.core.graphpe import build_graph
from transg.core.numerics import SeededRng, Tensor
from transg.core.skeledata import Dataset, SkeletonSequence, generate_splits, get_topology, load_dataset, write_dataset
from transg.core.objectives import recombine
from transg.core.trainer import (
    METRIC_COLUMNS,
    Trainer,
    check_gradients,
    create_runner,
    load_checkpoint,
    normalized_distances,
    pseudo_label,
    save_checkpoint,
    tiny_config,
    train,
    train_ablation_suite,
    write_ablation_csv,
)

from conftest import write_small_dataset

ROOT = Path(__file__).resolve().parent.parent


def _params(runner):
    return {name: p.data.copy() for name, p in runner.state.params.items()}


def _subset(dataset, train):
    return Dataset(manifest=dataset.manifest, graph=dataset.graph, splits={"train": train})


def _read_metrics(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


# gradients
@pytest.mark.parametrize("mode", ["pc", "sgt_ds", "sgt_gpc", "sgt_gpc_stpr", "unsupervised"])
def test_tiny_gradient_check_passes(mode):
    rows = check_gradients(tiny_config(mode=mode))
    assert rows
    failed = [row.to_dict() for row in rows if not row.passed]
    assert not failed


def test_gradient_check_rows_cover_every_module():
    rows = check_gradients(tiny_config())
    groups = {row.group for row in rows}
    assert {"embed.value", "layers.0.attn", "heads.structure.fc1", "heads.trajectory.fc2"} <= groups


def test_unsupervised_gradient_check_reaches_prototype_contrast(caplog):
    caplog.set_level(logging.INFO, logger="transg.core.trainer.diagnostics")
    rows = check_gradients(tiny_config(mode="unsupervised"))
    assert all(row.passed for row in rows)
    message = next(r.getMessage() for r in caplog.records if "Gradient check of mode unsupervised" in r.getMessage())
    assert "gpc_seq" in message and "gpc_ske" in message and "stpr_st" in message
    assert "heads.proj_skeleton" in {row.group for row in rows}


def test_labeled_modes_need_room_for_two_pairs():
    problems = TrainConfig(mode="sgt_ds", batch_size=3, instances_per_id=1).violations()
    assert any("batch_size >= 4" in p for p in problems)
    assert any("instances_per_id" in p for p in problems)
    assert not TrainConfig(mode="unsupervised", batch_size=3).violations()


def test_gradient_check_refuses_baseline():
    with pytest.raises(ConfigurationError):
        check_gradients(tiny_config(mode="baseline"))


# runners
def test_unknown_mode_is_rejected(path_graph):
    with pytest.raises(ConfigurationError):
        create_runner(TrainConfig(mode="sgt_gpc_rnn"), path_graph, [1, 2], rng=SeededRng(0))


def test_labeled_mode_needs_two_identities(small_config, small_dataset):
    single = _subset(small_dataset, [s for s in small_dataset.train if s.identity == 1])
    with pytest.raises(ConfigurationError):
        Trainer(small_config, single)


def test_config_must_fit_the_dataset(small_config, small_dataset):
    with pytest.raises(ConfigurationError) as info:
        Trainer(small_config.replace(seq_len=6), small_dataset)
    assert any("seq_len" in v for v in info.value.violations)


# training loop
def test_zero_epochs_checkpoint_is_the_initialization(small_config, small_dataset, tmp_path):
    config = small_config.replace(epochs=0)
    initial = create_runner(config, small_dataset.graph, small_dataset.identities("train"), rng=SeededRng(config.seed))
    result = train(config, small_dataset, output_dir=tmp_path / "run")
    assert result.step_losses == []
    restored = load_checkpoint(tmp_path / "run" / "checkpoint")
    assert restored.epoch == 0
    for name, value in _params(initial).items():
        np.testing.assert_array_equal(restored.state[name].data, value.astype(np.float32))


def test_same_seed_same_step_losses(small_config, small_dataset):
    config = small_config.replace(epochs=5, eval_every=0)
    a = train(config, small_dataset)
    b = train(config, small_dataset)
    assert len(a.step_losses) == 10
    assert a.step_losses == b.step_losses


def test_different_seed_different_step_losses(small_config, small_dataset):
    config = small_config.replace(epochs=1, eval_every=0)
    a = train(config, small_dataset)
    b = train(config.replace(seed=4), small_dataset)
    assert a.step_losses != b.step_losses


def test_metrics_csv_and_loss_decomposition(small_config, small_dataset, tmp_path):
    config = small_config.replace(alpha=0.3, beta=0.6, lam=0.4)
    train(config, small_dataset, output_dir=tmp_path / "run")
    path = tmp_path / "run" / "metrics.csv"
    assert path.read_text().splitlines()[0] == ",".join(METRIC_COLUMNS)
    rows = _read_metrics(path)
    assert [r["epoch"] for r in rows] == ["0", "1"]
    for row in rows:
        gpc = 0.3 * float(row["L_gpc_seq"]) + 0.7 * float(row["L_gpc_ske"])
        expected = recombine(gpc, float(row["L_stpr_st"]), float(row["L_stpr_tr"]), 0.6, 0.4)
        assert float(row["L_total"]) == pytest.approx(expected, rel=1e-12, abs=1e-12)
        assert 0.0 <= float(row["mAP"]) <= 100.0
    assert json.loads((tmp_path / "run" / "config.json").read_text())["alpha"] == 0.3


def test_gpc_only_mode_has_no_reconstruction_columns(small_config, small_dataset, tmp_path):
    train(small_config.replace(mode="sgt_gpc", eval_every=0), small_dataset, output_dir=tmp_path / "run")
    for row in _read_metrics(tmp_path / "run" / "metrics.csv"):
        assert float(row["L_stpr_st"]) == 0.0 and float(row["L_stpr_tr"]) == 0.0
        assert row["mAP"] == ""
        # lambda is fixed at 1 for this mode
        gpc = 0.5 * float(row["L_gpc_seq"]) + 0.5 * float(row["L_gpc_ske"])
        assert float(row["L_total"]) == pytest.approx(gpc, rel=1e-12)


def test_best_and_final_checkpoints_are_written(small_config, small_dataset, tmp_path):
    result = train(small_config, small_dataset, output_dir=tmp_path / "run")
    assert (tmp_path / "run" / "best" / "manifest.json").exists()
    assert load_checkpoint(tmp_path / "run" / "checkpoint").epoch == small_config.epochs
    assert result.best_map == max(r.metrics["mAP"] for r in result.history)
    assert result.final_report == result.history[-1].metrics


def test_resume_keeps_a_better_stored_best(small_config, small_dataset, tmp_path):
    run = tmp_path / "run"
    first = train(small_config.replace(epochs=1), small_dataset, output_dir=run)
    assert load_checkpoint(run / "checkpoint").best_map == first.best_map
    manifest = json.loads((run / "best" / "manifest.json").read_text())
    manifest["best_map"] = 2.0
    (run / "best" / "manifest.json").write_text(json.dumps(manifest))

    resumed = train(small_config.replace(epochs=2), small_dataset, output_dir=run, resume=run / "checkpoint")
    assert resumed.best_map == 2.0
    best = load_checkpoint(run / "best")
    assert best.epoch == 1 and best.best_map == 2.0


def test_non_finite_loss_raises_divergence(small_config, small_dataset, monkeypatch):
    trainer = Trainer(small_config, small_dataset)
    monkeypatch.setattr(trainer.runner, "compute_loss", lambda batch, masks: (Tensor(np.nan), {}))
    with pytest.raises(DivergenceError) as info:
        trainer.fit()
    assert info.value.step == 0


def test_baseline_records_a_single_evaluated_row(small_config, small_dataset, tmp_path):
    result = train(small_config.replace(mode="baseline"), small_dataset, output_dir=tmp_path / "run")
    assert len(result.history) == 1 and result.step_losses == []
    rows = _read_metrics(tmp_path / "run" / "metrics.csv")
    assert len(rows) == 1 and float(rows[0]["L_total"]) == 0.0 and rows[0]["R1"] != ""


def test_ablation_suite_runs_every_mode_in_order(small_config, small_dataset, tmp_path):
    rows = train_ablation_suite(small_config.replace(epochs=1), small_dataset, output_dir=tmp_path / "ablate")
    assert [r.mode for r in rows] == list(ABLATION_MODES)
    for row in rows:
        assert row.R1 <= row.R5 <= row.R10
    path = write_ablation_csv(rows, tmp_path / "ablation.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "mode,mAP,R1,R5,R10" and len(lines) == 6


def test_ablation_suite_needs_eval_splits(small_config, small_dataset):
    with pytest.raises(ConfigurationError):
        train_ablation_suite(small_config, _subset(small_dataset, small_dataset.train))


# checkpoints
def test_checkpoint_save_load_save_is_byte_identical(small_config, small_dataset, tmp_path):
    result = train(small_config.replace(epochs=1, eval_every=0), small_dataset)
    first = save_checkpoint(tmp_path / "a", result.checkpoint)
    second = save_checkpoint(tmp_path / "b", load_checkpoint(first))
    for name in ("manifest.json", "params.bin"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_truncated_tensor_file_is_a_parse_error(small_config, small_dataset, tmp_path):
    result = train(small_config.replace(epochs=1, eval_every=0), small_dataset)
    path = save_checkpoint(tmp_path / "ckpt", result.checkpoint)
    blob = (path / "params.bin").read_bytes()
    (path / "params.bin").write_bytes(blob[:-4])
    with pytest.raises(ParseError):
        load_checkpoint(path)


def test_unknown_format_version_is_incompatible(small_config, small_dataset, tmp_path):
    result = train(small_config.replace(epochs=0), small_dataset)
    path = save_checkpoint(tmp_path / "ckpt", result.checkpoint)
    doc = json.loads((path / "manifest.json").read_text())
    doc["version"] = 2
    (path / "manifest.json").write_text(json.dumps(doc))
    with pytest.raises(IncompatibleCheckpointError):
        load_checkpoint(path)


def test_missing_manifest_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_checkpoint(tmp_path / "nowhere")


def test_resumed_training_matches_an_uninterrupted_run(small_config, small_dataset, tmp_path):
    config = small_config.replace(mode="sgt_ds", epochs=2)
    straight = train(config, small_dataset)
    train(config.replace(epochs=1), small_dataset, output_dir=tmp_path / "first")
    resumed = train(config, small_dataset, resume=tmp_path / "first" / "checkpoint")
    assert len(resumed.history) == 1 and resumed.history[0].epoch == 1
    for name, value in _params(straight.runner).items():
        np.testing.assert_allclose(resumed.runner.state[name].data, value, rtol=1e-6, atol=1e-9)


def test_resume_rejects_changed_settings(small_config, small_dataset, tmp_path):
    train(small_config.replace(epochs=1), small_dataset, output_dir=tmp_path / "first")
    with pytest.raises(ConfigurationError) as info:
        Trainer(small_config.replace(lr=0.5), small_dataset, resume=tmp_path / "first" / "checkpoint")
    assert any("lr" in v for v in info.value.violations)


def test_resume_rejects_a_different_skeleton(small_config, small_dataset, tmp_path):
    train(small_config.replace(epochs=0), small_dataset, output_dir=tmp_path / "first")
    other = load_dataset(write_small_dataset(tmp_path / "longer", frames=6))
    with pytest.raises(SchemaError):
        Trainer(small_config.replace(seq_len=6), other, resume=tmp_path / "first" / "checkpoint")


# clustering
def _dbscan_reference(distances, eps, min_pts):
    """Quadratic DBSCAN: clusters grow from unlabeled core points in index order."""
    n = distances.shape[0]
    neighbours = [np.flatnonzero(distances[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbours])
    labels = np.full(n, -1)
    cluster = 0
    for seed in range(n):
        if labels[seed] != -1 or not core[seed]:
            continue
        labels[seed] = cluster
        frontier = [seed]
        while frontier:
            point = frontier.pop()
            for nb in neighbours[point]:
                if labels[nb] == -1:
                    labels[nb] = cluster
                    if core[nb]:
                        frontier.append(nb)
        cluster += 1
    return labels


@pytest.mark.parametrize("fixture", range(10))
def test_pseudo_labels_match_a_reference_dbscan(fixture):
    generator = np.random.default_rng(100 + fixture)
    centers = generator.normal(size=(int(generator.integers(2, 5)), 4))
    points = np.concatenate([c + 0.15 * generator.normal(size=(int(generator.integers(3, 9)), 4)) for c in centers])
    points = np.concatenate([points, generator.normal(size=(3, 4))])
    eps = float(generator.uniform(0.2, 0.6))
    min_pts = int(generator.integers(2, 5))
    expected = _dbscan_reference(normalized_distances(points), eps, min_pts)
    np.testing.assert_array_equal(pseudo_label(points, eps, min_pts), expected)


def test_pseudo_label_edge_cases():
    points = SeededRng(0).normal(size=(5, 3))
    np.testing.assert_array_equal(pseudo_label(points, 0.5, 6), -1)
    np.testing.assert_array_equal(pseudo_label(points[:1], 0.5, 1), [0])
    assert pseudo_label(np.zeros((0, 3)), 0.5, 2).shape == (0,)
    with pytest.raises(ConfigurationError):
        pseudo_label(points, 0.0, 2)


def test_two_separated_blobs_give_two_clusters():
    generator = np.random.default_rng(1)
    blobs = np.concatenate([[5.0, 0.0, 0.0] + 0.01 * generator.normal(size=(6, 3)), [0.0, 5.0, 0.0] + 0.01 * generator.normal(size=(6, 3))])
    labels = pseudo_label(blobs, 0.3, 2)
    assert labels.tolist() == [0] * 6 + [1] * 6


def test_unsupervised_training_ignores_ground_truth_labels(small_config, small_dataset):
    config = small_config.replace(mode="unsupervised", epochs=2, eval_every=0)
    relabel = {1: 3, 2: 1, 3: 4, 4: 2}
    shuffled = _subset(
        small_dataset,
        [SkeletonSequence(s.frames, identity=relabel[s.identity], source_id=s.source_id, split=s.split) for s in small_dataset.train],
    )
    a = train(config, _subset(small_dataset, small_dataset.train))
    b = train(config, shuffled)
    assert a.step_losses == b.step_losses


def test_all_noise_epoch_skips_contrast_and_keeps_training(small_config, small_dataset, caplog):
    config = small_config.replace(mode="unsupervised", epochs=1, eval_every=0, dbscan_min_pts=1000)
    with caplog.at_level(logging.WARNING):
        result = train(config, small_dataset)
    assert "skipping prototype contrast" in caplog.text
    assert result.step_losses and all(np.isfinite(result.step_losses))
    assert result.history[0].losses.gpc_seq == 0.0
    assert result.history[0].losses.stpr_st > 0.0


# convergence
@pytest.mark.slow
def test_training_loss_drops_by_half(small_config, small_dataset):
    result = train(small_config.replace(epochs=60, eval_every=0), small_dataset)
    losses = result.step_losses
    assert np.mean(losses[-4:]) < 0.5 * np.mean(losses[:4])


@pytest.mark.slow
def test_desk_scale_synthetic_identities_are_recognized(tmp_path):
    topology = get_topology("kinect20")
    graph = build_graph(topology.num_joints, topology.edges)
    splits = generate_splits(10, {"train": 20, "probe": 5, "gallery": 5}, 6, graph, SeededRng(0))
    dataset = load_dataset(write_dataset(tmp_path / "desk", "desk", topology.edges, 6, splits))
    config = TrainConfig.from_dict(json.loads((ROOT / "configs" / "desk.json").read_text())).replace(eval_every=0)
    result = train(config, dataset)
    report = evaluate_sequences(result.runner, dataset.probe, dataset.gallery)
    assert report.rank1 >= 0.9
    assert report.mAP >= 0.6
