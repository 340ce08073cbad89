"""Probe-gallery matching and CMC / mAP scoring."""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..errors import ContractViolation, DimensionError, SchemaError
from ..skeledata import SkeletonSequence
from ..utils import make_json_serializable, worker_count

if TYPE_CHECKING:
    from ..trainer.checkpoint import Checkpoint

logger = logging.getLogger(__name__)

RANKS = (1, 5, 10)
REPORT_COLUMNS = ["mAP"] + [f"R{k}" for k in RANKS] + ["probes", "excluded"]


@dataclass
class ProbeRanking:
    """One probe's gallery ordering, nearest first."""

    probe_index: int
    identity: int
    order: np.ndarray  # gallery indices
    distances: np.ndarray  # ascending
    matches: np.ndarray  # bool, aligned with order
    average_precision: float

    @property
    def first_hit(self) -> int:
        """1-based rank of the first correct gallery item."""
        return int(np.argmax(self.matches)) + 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "probe": self.probe_index,
            "identity": self.identity,
            "gallery": self.order.tolist(),
            "distances": self.distances.tolist(),
            "matches": self.matches.astype(int).tolist(),
            "ap": self.average_precision,
        }


@dataclass
class RankingReport:
    """Per-probe rankings plus aggregates, all fractions in [0, 1]."""

    rankings: List[ProbeRanking]
    cmc: np.ndarray  # cmc[k - 1] = Rank-k
    mAP: float
    excluded: List[int] = field(default_factory=list)

    @property
    def num_probes(self) -> int:
        return len(self.rankings)

    def rank(self, k: int) -> float:
        """Rank-k; k beyond the gallery size is clipped to it."""
        if k < 1:
            raise ContractViolation(f"rank needs k >= 1, got {k}")
        return float(self.cmc[min(k, self.cmc.size) - 1])

    @property
    def rank1(self) -> float:
        return self.rank(1)

    @property
    def rank5(self) -> float:
        return self.rank(5)

    @property
    def rank10(self) -> float:
        return self.rank(10)

    def metrics(self) -> Dict[str, float]:
        return {"mAP": self.mAP, **{f"R{k}": self.rank(k) for k in RANKS}}

    def percent(self) -> Dict[str, float]:
        return {k: 100.0 * v for k, v in self.metrics().items()}

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        row = {k: f"{v:.4f}" for k, v in self.percent().items()}
        row.update(probes=self.num_probes, excluded=len(self.excluded))
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS)
            writer.writeheader()
            writer.writerow(row)
        return path

    def write_rankings(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, "w") as f:
            for ranking in self.rankings:
                f.write(json.dumps(ranking.to_dict()) + "\n")
        return path

    def write_report(self, path: Union[str, Path], config: Optional[Dict[str, Any]] = None) -> Path:
        path = Path(path)
        document = {
            "metrics": self.percent(),
            "probes": self.num_probes,
            "excluded": self.excluded,
            "config": config or {},
        }
        path.write_text(json.dumps(make_json_serializable(document), indent=2, sort_keys=True) + "\n")
        return path


def _check_matrix(name: str, reps) -> np.ndarray:
    reps = np.asarray(reps, dtype=np.float64)
    if reps.ndim != 2:
        raise DimensionError("match", reps.shape, message=f"{name} must be an (N, d) matrix, got {reps.shape}")
    return reps


def _unit_rows(reps: np.ndarray) -> np.ndarray:
    return reps / np.maximum(np.linalg.norm(reps, axis=1, keepdims=True), 1e-12)


def pairwise_distances(probe_reps, gallery_reps, cosine: bool = False) -> np.ndarray:
    """(N2, N3) Euclidean distances, one worker task per probe row.

    With ``cosine`` the rows are L2-normalized first.
    """
    probe = _check_matrix("probe_reps", probe_reps)
    gallery = _check_matrix("gallery_reps", gallery_reps)
    if probe.shape[1] != gallery.shape[1]:
        raise DimensionError("match", probe.shape, gallery.shape)
    if cosine:
        probe, gallery = _unit_rows(probe), _unit_rows(gallery)
    if probe.shape[0] == 0:
        return np.zeros((0, gallery.shape[0]))

    def row(i: int) -> np.ndarray:
        return np.sqrt(np.sum((gallery - probe[i]) ** 2, axis=1))

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows = list(pool.map(row, range(probe.shape[0])))
    return np.stack(rows)


def average_precision(matches: np.ndarray) -> float:
    """Mean over correct positions r of (correct within top r) / r."""
    hits = np.flatnonzero(matches)
    if hits.size == 0:
        return float("nan")
    return float(np.mean(np.arange(1, hits.size + 1) / (hits + 1)))


def match(
    probe_reps,
    gallery_reps,
    probe_ids: Sequence[int],
    gallery_ids: Sequence[int],
    cosine: bool = False,
) -> RankingReport:
    """Rank the gallery for every probe by ascending distance.

    Equal distances keep gallery order. Probes whose identity is absent from
    the gallery are left out of every aggregate and listed in ``excluded``.
    """
    probe_ids = np.asarray(probe_ids, dtype=np.int64)
    gallery_ids = np.asarray(gallery_ids, dtype=np.int64)
    distances = pairwise_distances(probe_reps, gallery_reps, cosine=cosine)
    n_probe, n_gallery = distances.shape
    if n_gallery == 0:
        raise ContractViolation("match needs at least one gallery item")
    if n_probe == 0:
        raise ContractViolation("match needs at least one probe")
    if probe_ids.shape != (n_probe,) or gallery_ids.shape != (n_gallery,):
        raise DimensionError("match", probe_ids.shape, gallery_ids.shape, message="identity vectors do not match the rep matrices")

    order = np.argsort(distances, axis=1, kind="stable")
    matches = gallery_ids[order] == probe_ids[:, None]

    rankings, excluded = [], []
    for i in range(n_probe):
        if not matches[i].any():
            excluded.append(i)
            continue
        rankings.append(
            ProbeRanking(
                probe_index=i,
                identity=int(probe_ids[i]),
                order=order[i],
                distances=distances[i, order[i]],
                matches=matches[i],
                average_precision=average_precision(matches[i]),
            )
        )
    if excluded:
        logger.warning(f"{len(excluded)} probe(s) have no matching gallery identity and were excluded")
    if not rankings:
        raise ContractViolation(
            "no probe identity appears in the gallery", {"excluded": len(excluded)}
        )

    hit_matrix = np.stack([r.matches for r in rankings])
    cmc = (np.cumsum(hit_matrix, axis=1) > 0).mean(axis=0)
    mAP = float(np.mean([r.average_precision for r in rankings]))
    report = RankingReport(rankings=rankings, cmc=cmc, mAP=mAP, excluded=excluded)
    logger.info(
        f"Matched {report.num_probes} probe(s) against {n_gallery} gallery item(s): "
        f"mAP {100 * mAP:.2f}, R1 {100 * report.rank1:.2f}, R5 {100 * report.rank5:.2f}, R10 {100 * report.rank10:.2f}"
    )
    return report


def embed_split(
    checkpoint: "Checkpoint", sequences: Sequence[SkeletonSequence], batch_size: int = 64
) -> np.ndarray:
    """Inference-mode sequence vectors for ``sequences`` under ``checkpoint``."""
    from ..trainer.factory import restore_runner

    for seq in sequences:
        if seq.num_joints != checkpoint.num_joints or seq.num_frames != checkpoint.seq_len:
            raise SchemaError(
                f"sequence {seq.source_id} has shape (f={seq.num_frames}, J={seq.num_joints}), "
                f"checkpoint expects (f={checkpoint.seq_len}, J={checkpoint.num_joints})",
                {"sequence": seq.source_id},
            )
    runner = restore_runner(checkpoint)
    return runner.embed(sequences, batch_size)


def evaluate_sequences(
    runner, probe: Sequence[SkeletonSequence], gallery: Sequence[SkeletonSequence], cosine: bool = False
) -> RankingReport:
    """Embed probe and gallery with ``runner`` and match them."""
    batch_size = runner.config.eval_batch_size
    return match(
        runner.embed(probe, batch_size),
        runner.embed(gallery, batch_size),
        [s.identity for s in probe],
        [s.identity for s in gallery],
        cosine=cosine,
    )


__all__ = [
    "RANKS",
    "ProbeRanking",
    "RankingReport",
    "pairwise_distances",
    "average_precision",
    "match",
    "embed_split",
    "evaluate_sequences",
]
