import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from ..config import ABLATION_MODES, TrainConfig
from ..errors import ConfigurationError
from ..evalrank import evaluate_sequences
from ..skeledata import Dataset
from .loop import train

logger = logging.getLogger(__name__)

ABLATION_COLUMNS = ["mode", "mAP", "R1", "R5", "R10"]


@dataclass
class AblationRow:
    mode: str
    mAP: float
    R1: float
    R5: float
    R10: float

    def to_dict(self) -> Dict[str, object]:
        return {"mode": self.mode, "mAP": self.mAP, "R1": self.R1, "R5": self.R5, "R10": self.R10}


def train_ablation_suite(
    config: TrainConfig, dataset: Dataset, output_dir: Optional[Union[str, Path]] = None
) -> List[AblationRow]:
    """Train and score every ablation mode on the same splits, one row each."""
    if not dataset.has_eval_split:
        raise ConfigurationError("the ablation suite needs probe and gallery splits")
    rows = []
    for mode in ABLATION_MODES:
        run_dir = Path(output_dir) / mode if output_dir is not None else None
        # score the final parameters, not the best epoch
        result = train(config.replace(mode=mode, eval_every=0), dataset, output_dir=run_dir)
        report = evaluate_sequences(result.runner, dataset.probe, dataset.gallery)
        row = AblationRow(mode=mode, **report.metrics())
        logger.info(f"Ablation {mode}: mAP {100 * row.mAP:.2f} R1 {100 * row.R1:.2f}")
        rows.append(row)
    return rows


def write_ablation_csv(rows: List[AblationRow], path: Union[str, Path]) -> Path:
    """Percent values, one row per mode."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=ABLATION_COLUMNS)
        writer.writeheader()
        for row in rows:
            values = row.to_dict()
            writer.writerow({k: v if k == "mode" else f"{100.0 * v:.4f}" for k, v in values.items()})
    return path
