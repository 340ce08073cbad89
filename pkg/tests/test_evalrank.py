import csv
import json

import numpy as np
import pytest

from transg.core.errors import ContractViolation, DimensionError, SchemaError
from transg.core.evalrank import RANKS, average_precision, embed_split, match, pairwise_distances
from transg.core.skeledata import SkeletonSequence
from transg.core.trainer import train


def _brute_force(probe, gallery, probe_ids, gallery_ids):
    """Loop-level CMC and mAP over probes with at least one true match."""
    n_gallery = gallery.shape[0]
    cmc_hits = np.zeros(n_gallery)
    aps = []
    for i in range(probe.shape[0]):
        distances = [float(np.sqrt(sum((probe[i, c] - gallery[j, c]) ** 2 for c in range(probe.shape[1])))) for j in range(n_gallery)]
        ranked = sorted(range(n_gallery), key=lambda j: (distances[j], j))
        correct = [gallery_ids[j] == probe_ids[i] for j in ranked]
        if not any(correct):
            continue
        first = correct.index(True)
        cmc_hits[first:] += 1
        found, precisions = 0, []
        for position, hit in enumerate(correct, start=1):
            if hit:
                found += 1
                precisions.append(found / position)
        aps.append(sum(precisions) / len(precisions))
    return cmc_hits / len(aps), float(np.mean(aps))


def test_average_precision_of_hits_at_one_and_three():
    assert average_precision(np.array([True, False, True, False])) == pytest.approx(5.0 / 6.0)
    assert np.isnan(average_precision(np.zeros(3, dtype=bool)))


def test_exact_duplicate_is_a_rank_one_hit():
    gallery = np.array([[0.0, 1.0], [5.0, 5.0], [2.0, 2.0]])
    report = match(gallery[[1]], gallery, [7], [3, 7, 9])
    assert report.rank1 == 1.0
    assert report.rankings[0].first_hit == 1
    assert report.rankings[0].distances[0] == 0.0


@pytest.mark.parametrize("instance", range(20))
def test_match_agrees_with_brute_force(instance):
    generator = np.random.default_rng(instance)
    n_probe = int(generator.integers(1, 51))
    n_gallery = int(generator.integers(1, 201))
    dim = int(generator.integers(1, 6))
    n_ids = int(generator.integers(1, 8))
    probe = generator.normal(size=(n_probe, dim))
    gallery = generator.normal(size=(n_gallery, dim))
    probe_ids = generator.integers(0, n_ids, size=n_probe)
    gallery_ids = generator.integers(0, n_ids, size=n_gallery)
    if not np.isin(probe_ids, gallery_ids).any():
        gallery_ids[0] = probe_ids[0]

    cmc, mAP = _brute_force(probe, gallery, probe_ids, gallery_ids)
    report = match(probe, gallery, probe_ids, gallery_ids)
    np.testing.assert_allclose(report.cmc, cmc, atol=1e-12)
    assert report.mAP == pytest.approx(mAP, abs=1e-12)
    assert report.num_probes + len(report.excluded) == n_probe


def test_cmc_is_monotone_and_clipped():
    generator = np.random.default_rng(5)
    report = match(generator.normal(size=(12, 3)), generator.normal(size=(7, 3)), np.arange(12) % 3, np.arange(7) % 3)
    assert report.rank1 <= report.rank5 <= report.rank10
    assert np.all(np.diff(report.cmc) >= 0)
    # gallery of 7: Rank-10 is Rank-7
    assert report.rank10 == report.rank(7) == 1.0
    with pytest.raises(ContractViolation):
        report.rank(0)


def test_map_is_invariant_under_gallery_permutation():
    generator = np.random.default_rng(9)
    probe, gallery = generator.normal(size=(15, 4)), generator.normal(size=(40, 4))
    probe_ids, gallery_ids = np.arange(15) % 5, np.arange(40) % 5
    perm = generator.permutation(40)
    a = match(probe, gallery, probe_ids, gallery_ids)
    b = match(probe, gallery[perm], probe_ids, gallery_ids[perm])
    assert a.mAP == pytest.approx(b.mAP, abs=1e-12)
    np.testing.assert_allclose(a.cmc, b.cmc)


def test_ties_keep_gallery_order():
    report = match(np.zeros((1, 2)), np.zeros((3, 2)), [2], [1, 2, 2])
    assert report.rankings[0].order.tolist() == [0, 1, 2]
    assert report.rankings[0].average_precision == pytest.approx((1 / 2 + 2 / 3) / 2)


def test_probes_without_gallery_identity_are_excluded(caplog):
    report = match(np.eye(3), np.eye(3), [0, 1, 8], [0, 1, 2])
    assert report.excluded == [2]
    assert report.num_probes == 2 and report.rank1 == 1.0
    assert "1 probe(s)" in caplog.text


def test_all_probes_excluded_is_an_error():
    with pytest.raises(ContractViolation):
        match(np.eye(2), np.eye(2), [5, 6], [0, 1])


def test_empty_inputs_are_rejected():
    with pytest.raises(ContractViolation):
        match(np.zeros((2, 3)), np.zeros((0, 3)), [0, 1], [])
    with pytest.raises(ContractViolation):
        match(np.zeros((0, 3)), np.zeros((2, 3)), [], [0, 1])


def test_dimension_mismatch_is_rejected():
    with pytest.raises(DimensionError):
        pairwise_distances(np.zeros((2, 3)), np.zeros((2, 4)))
    with pytest.raises(DimensionError):
        match(np.zeros((2, 3)), np.zeros((2, 3)), [0], [0, 1])


def test_cosine_matching_ignores_vector_length():
    probe = np.array([[1.0, 0.0]])
    gallery = np.array([[0.5, 0.5], [10.0, 0.1]])
    assert match(probe, gallery, [1], [0, 1]).rank1 == 0.0
    assert match(probe, gallery, [1], [0, 1], cosine=True).rank1 == 1.0


def test_worker_count_does_not_change_distances(monkeypatch):
    generator = np.random.default_rng(2)
    probe, gallery = generator.normal(size=(30, 6)), generator.normal(size=(50, 6))
    monkeypatch.setenv("TRANSG_THREADS", "1")
    single = pairwise_distances(probe, gallery)
    monkeypatch.setenv("TRANSG_THREADS", "4")
    np.testing.assert_array_equal(pairwise_distances(probe, gallery), single)


def test_report_writers(tmp_path):
    report = match(np.eye(3), np.eye(3), [0, 1, 8], [0, 1, 2])
    with open(report.write_csv(tmp_path / "report.csv"), newline="") as f:
        rows = list(csv.DictReader(f))
    assert rows == [{"mAP": "100.0000", "R1": "100.0000", "R5": "100.0000", "R10": "100.0000", "probes": "2", "excluded": "1"}]
    assert list(report.metrics()) == ["mAP"] + [f"R{k}" for k in RANKS]
    lines = report.write_rankings(tmp_path / "rankings.jsonl").read_text().splitlines()
    assert [json.loads(line)["probe"] for line in lines] == [0, 1]
    document = json.loads(report.write_report(tmp_path / "report.json", {"mode": "baseline"}).read_text())
    assert document["metrics"]["R1"] == 100.0 and document["config"] == {"mode": "baseline"}


# embedding with a checkpoint
@pytest.fixture
def trained(small_config, small_dataset):
    return train(small_config.replace(epochs=1, eval_every=0), small_dataset).checkpoint


def test_embedding_is_deterministic(trained, small_dataset):
    a = embed_split(trained, small_dataset.probe)
    b = embed_split(trained, small_dataset.probe)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (len(small_dataset.probe), trained.config.d)


def test_embedding_does_not_depend_on_batch_size(trained, small_dataset):
    one = embed_split(trained, small_dataset.gallery, batch_size=1)
    many = embed_split(trained, small_dataset.gallery, batch_size=64)
    np.testing.assert_allclose(one, many, atol=1e-9)


def test_embedding_rejects_another_skeleton(trained):
    other = SkeletonSequence(np.zeros((4, 6, 3)), identity=1, source_id="other:1:0")
    with pytest.raises(SchemaError):
        embed_split(trained, [other])


def test_empty_split_embeds_to_no_rows(trained):
    assert embed_split(trained, []).shape == (0, trained.config.d)
