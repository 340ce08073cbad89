import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from platformdirs import user_data_dir

from ..config import LABELED_MODES, TrainConfig
from ..errors import ConfigurationError, DivergenceError, SchemaError
from ..evalrank import RANKS, RankingReport, evaluate_sequences
from ..numerics import Adam, AdamState, SeededRng, Tape
from ..objectives import LossBreakdown, sample_mask_plan
from ..skeledata import Dataset, balanced_shape, identity_index, sample_batch
from .base import ModeRunner
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint, stored_best_map
from .factory import create_runner, restore_runner

logger = logging.getLogger(__name__)

EVAL_COLUMNS = ["mAP"] + [f"R{k}" for k in RANKS]
METRIC_COLUMNS = ["epoch", "L_total", "L_gpc_seq", "L_gpc_ske", "L_stpr_st", "L_stpr_tr"] + EVAL_COLUMNS

# settings that may change between a checkpoint and the run resuming it
RESUMABLE_KEYS = ("epochs", "eval_every", "eval_batch_size")


def default_output_dir() -> Path:
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    return Path(user_data_dir("transg")) / "runs" / stamp


@dataclass
class EpochRecord:
    epoch: int
    losses: LossBreakdown
    metrics: Optional[Dict[str, float]] = None

    def row(self) -> Dict[str, str]:
        row = {
            "epoch": str(self.epoch),
            "L_total": repr(self.losses.total),
            "L_gpc_seq": repr(self.losses.gpc_seq),
            "L_gpc_ske": repr(self.losses.gpc_ske),
            "L_stpr_st": repr(self.losses.stpr_st),
            "L_stpr_tr": repr(self.losses.stpr_tr),
        }
        for key in EVAL_COLUMNS:
            row[key] = f"{100.0 * self.metrics[key]:.4f}" if self.metrics else ""
        return row


class MetricsLog:
    """metrics.csv, appended one row per epoch."""

    def __init__(self, path: Optional[Path]):
        self.path = path
        if path is not None and not path.exists():
            with open(path, "w", newline="") as f:
                csv.DictWriter(f, fieldnames=METRIC_COLUMNS).writeheader()

    def append(self, record: EpochRecord):
        if self.path is None:
            return
        with open(self.path, "a", newline="") as f:
            csv.DictWriter(f, fieldnames=METRIC_COLUMNS).writerow(record.row())


@dataclass
class TrainResult:
    runner: ModeRunner
    checkpoint: Optional[Checkpoint] = None
    history: List[EpochRecord] = field(default_factory=list)
    step_losses: List[float] = field(default_factory=list)
    best_map: Optional[float] = None
    output_dir: Optional[Path] = None

    @property
    def final_report(self) -> Optional[Dict[str, float]]:
        evaluated = [r.metrics for r in self.history if r.metrics]
        return evaluated[-1] if evaluated else None


class Trainer:
    """Runs one configuration on one dataset: sampling, masking, Adam steps,
    periodic probe/gallery evaluation and checkpointing.
    """

    def __init__(
        self,
        config: TrainConfig,
        dataset: Dataset,
        output_dir: Optional[Union[str, Path]] = None,
        resume: Optional[Union[str, Path, Checkpoint]] = None,
    ):
        self.dataset = dataset
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.rng = SeededRng(config.seed)
        self.start_epoch = 0
        self.best_map: Optional[float] = None

        if resume is not None:
            checkpoint = resume if isinstance(resume, Checkpoint) else load_checkpoint(resume)
            config = self._resumed_config(checkpoint, config)

        config.validate(**self._dataset_limits(config))
        self.config = config
        self._check_labels()
        self.class_ids = dataset.identities("train")

        if resume is not None:
            self.runner = restore_runner(checkpoint)
            self.runner.config = config
            adam_state = checkpoint.adam
            self.rng.set_state(checkpoint.rng_state)
            self.start_epoch = checkpoint.epoch
            self.best_map = self._resumed_best(checkpoint)
        else:
            self.runner = create_runner(config, dataset.graph, self.class_ids, rng=self.rng)
            adam_state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, epsilon=config.adam_eps)
        self.optimizer = Adam(self.runner.state.parameters(), adam_state)

    def _dataset_limits(self, config: TrainConfig) -> Dict[str, Optional[int]]:
        # mask and PE limits only bind the encoder modes
        num_joints = self.dataset.num_joints if config.mode not in ("baseline", "pc") else None
        return {"num_joints": num_joints, "seq_len": self.dataset.seq_len}

    def _resumed_best(self, checkpoint: Checkpoint) -> Optional[float]:
        """Best mAP so far: the resumed checkpoint's record or the run's best/ manifest."""
        found = [checkpoint.best_map]
        if self.output_dir is not None:
            found.append(stored_best_map(self.output_dir / "best"))
        found = [value for value in found if value is not None]
        if found:
            logger.info(f"Resuming with best mAP {100 * max(found):.2f}")
        return max(found) if found else None

    def _resumed_config(self, checkpoint: Checkpoint, config: TrainConfig) -> TrainConfig:
        if checkpoint.num_joints != self.dataset.num_joints or checkpoint.seq_len != self.dataset.seq_len:
            raise SchemaError(
                f"checkpoint was trained on (f={checkpoint.seq_len}, J={checkpoint.num_joints}), "
                f"dataset has (f={self.dataset.seq_len}, J={self.dataset.num_joints})"
            )
        saved, given = checkpoint.config.to_dict(), config.to_dict()
        changed = [k for k in saved if k not in RESUMABLE_KEYS and saved[k] != given[k]]
        if changed:
            raise ConfigurationError.from_violations(
                [f"{k} differs from the checkpoint ({saved[k]!r} != {given[k]!r})" for k in changed]
            )
        return checkpoint.config.replace(**{k: given[k] for k in RESUMABLE_KEYS})

    def _check_labels(self):
        if self.config.mode in LABELED_MODES:
            ids = identity_index(self.dataset.train)
            if len(ids) < 2:
                raise ConfigurationError(
                    f"mode {self.config.mode} needs at least 2 labeled training identities, found {len(ids)}"
                )

    @property
    def steps_per_epoch(self) -> int:
        pool = self.dataset.train
        if self.runner.sampling == "supervised":
            balanced_shape(len(identity_index(pool)), self.config.batch_size, self.config.instances_per_id)
            return max(1, len(pool) // self.config.batch_size)
        return max(1, len(pool) // min(self.config.batch_size, len(pool)))

    def snapshot(self, epoch: int) -> Checkpoint:
        return Checkpoint(
            config=self.config,
            state=self.runner.state,
            adam=self.optimizer.state,
            epoch=epoch,
            rng_state=self.rng.get_state(),
            num_joints=self.dataset.num_joints,
            edges=list(self.dataset.graph.edges),
            seq_len=self.dataset.seq_len,
            class_ids=self.class_ids,
            manifest=str(self.dataset.manifest.path) if self.dataset.manifest.path else None,
            best_map=self.best_map,
        )

    def evaluate(self) -> Optional[RankingReport]:
        if not self.dataset.has_eval_split:
            return None
        return evaluate_sequences(self.runner, self.dataset.probe, self.dataset.gallery)

    def _eval_due(self, epoch: int) -> bool:
        every = self.config.eval_every
        if every <= 0 or not self.dataset.has_eval_split:
            return False
        return (epoch + 1) % every == 0 or epoch + 1 == self.config.epochs

    def train_step(self, global_step: int) -> LossBreakdown:
        cfg, runner = self.config, self.runner
        batch = sample_batch(self.dataset.train, cfg.batch_size, runner.sampling, self.rng, cfg.instances_per_id)
        masks = None
        if runner.uses_masks:
            masks = sample_mask_plan(
                batch.size, cfg.seq_len, self.dataset.num_joints, cfg.mask_nodes, cfg.mask_frames, self.rng
            )
        self.optimizer.zero_grad()
        with Tape() as tape:
            loss, terms = runner.compute_loss(batch, masks)
        value = loss.item()
        if not np.isfinite(value):
            raise DivergenceError(global_step, value)
        tape.backward(loss)
        self.optimizer.step()
        return runner.breakdown(loss, terms)

    def fit(self) -> TrainResult:
        cfg = self.config
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            (self.output_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
        log = MetricsLog(self.output_dir / "metrics.csv" if self.output_dir is not None else None)
        result = TrainResult(runner=self.runner, best_map=self.best_map, output_dir=self.output_dir)

        if not self.runner.trainable:
            report = self.evaluate()
            record = EpochRecord(0, LossBreakdown(), report.metrics() if report else None)
            result.history.append(record)
            log.append(record)
            result.best_map = self.best_map = report.mAP if report else None
            result.checkpoint = self._finish(cfg.epochs)
            return result

        steps = self.steps_per_epoch
        logger.info(
            f"Training mode {cfg.mode} for epochs {self.start_epoch}..{cfg.epochs - 1}, "
            f"{steps} step(s) per epoch on {len(self.dataset.train)} sequence(s)"
        )
        global_step = self.start_epoch * steps
        for epoch in range(self.start_epoch, cfg.epochs):
            self.runner.begin_epoch(epoch, self.dataset.train)
            totals = LossBreakdown()
            for _ in range(steps):
                breakdown = self.train_step(global_step)
                result.step_losses.append(breakdown.total)
                totals = totals + breakdown
                global_step += 1
            means = totals.scaled(1.0 / steps)

            report = self.evaluate() if self._eval_due(epoch) else None
            record = EpochRecord(epoch, means, report.metrics() if report else None)
            result.history.append(record)
            log.append(record)
            message = (
                f"Epoch {epoch}: L_total {means.total:.4f} (gpc_seq {means.gpc_seq:.4f}, gpc_ske {means.gpc_ske:.4f}, "
                f"stpr_st {means.stpr_st:.4f}, stpr_tr {means.stpr_tr:.4f})"
            )
            if report is not None:
                message += f" mAP {100 * report.mAP:.2f} R1 {100 * report.rank1:.2f}"
            logger.info(message)

            if report is not None and (result.best_map is None or report.mAP > result.best_map):
                result.best_map = self.best_map = report.mAP
                if self.output_dir is not None:
                    logger.info(f"New best mAP {100 * report.mAP:.2f} at epoch {epoch}")
                    save_checkpoint(self.output_dir / "best", self.snapshot(epoch + 1))

        result.checkpoint = self._finish(cfg.epochs)
        return result

    def _finish(self, epoch: int) -> Checkpoint:
        checkpoint = self.snapshot(epoch)
        if self.output_dir is not None:
            save_checkpoint(self.output_dir / "checkpoint", checkpoint)
        return checkpoint


def train(
    config: TrainConfig,
    dataset: Dataset,
    output_dir: Optional[Union[str, Path]] = None,
    resume: Optional[Union[str, Path, Checkpoint]] = None,
) -> TrainResult:
    return Trainer(config, dataset, output_dir=output_dir, resume=resume).fit()
