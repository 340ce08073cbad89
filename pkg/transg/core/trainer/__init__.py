from .ablation import ABLATION_COLUMNS, AblationRow, train_ablation_suite, write_ablation_csv
from .base import ModeRunner, SgtRunner, dataset_prototypes, prototype_centroids
from .checkpoint import CHECKPOINT_VERSION, Checkpoint, load_checkpoint, save_checkpoint
from .clustering import normalized_distances, pseudo_label
from .diagnostics import active_terms, check_gradients, tiny_config
from .factory import create_runner, restore_runner
from .loop import METRIC_COLUMNS, EpochRecord, Trainer, TrainResult, default_output_dir, train

__all__ = [
    "ModeRunner",
    "SgtRunner",
    "create_runner",
    "restore_runner",
    "prototype_centroids",
    "dataset_prototypes",
    "pseudo_label",
    "normalized_distances",
    "Checkpoint",
    "CHECKPOINT_VERSION",
    "save_checkpoint",
    "load_checkpoint",
    "Trainer",
    "TrainResult",
    "EpochRecord",
    "METRIC_COLUMNS",
    "default_output_dir",
    "train",
    "AblationRow",
    "ABLATION_COLUMNS",
    "train_ablation_suite",
    "write_ablation_csv",
    "active_terms",
    "check_gradients",
    "tiny_config",
]
