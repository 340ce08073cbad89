from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from ..config import TrainConfig

_TRAIN_DEFAULTS = TrainConfig()


# Dataset manifest (JSON)
class SplitFiles(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train: List[str] = Field(default_factory=list)
    probe: List[str] = Field(default_factory=list)
    gallery: List[str] = Field(default_factory=list)


class ManifestDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    J: int = Field(gt=0)
    f: int = Field(gt=0)
    edges: List[Tuple[int, int]]
    root_joint: int = 0
    root_centering: bool = True
    scale: Literal["joint", "part", "body"] = "joint"
    files: SplitFiles = Field(default_factory=SplitFiles)


# One recording per JSON Lines row
class SequenceRecord(BaseModel):
    model_config = ConfigDict(extra="ignore")

    id: int
    frames: List[List[Tuple[float, float, float]]]


# Checkpoint manifest.json
class TensorEntry(BaseModel):
    name: str
    kind: Literal["param", "buffer", "adam_m", "adam_v"]
    shape: List[int]
    offset: int
    count: int


class CheckpointDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: Literal["transg-checkpoint"] = "transg-checkpoint"
    version: int
    epoch: int
    config: Dict[str, Any]
    manifest: Optional[str] = None
    num_joints: int
    edges: List[Tuple[int, int]]
    seq_len: int
    class_ids: List[int] = Field(default_factory=list)
    best_map: Optional[float] = None
    adam_step: int = 0
    rng_state: Dict[str, Any]
    tensors: List[TensorEntry]


# JSON run-config file; flat TrainConfig keys plus paths
class RunConfigFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    manifest: Optional[str] = None
    output_dir: Optional[str] = None

    mode: str = _TRAIN_DEFAULTS.mode
    seed: int = _TRAIN_DEFAULTS.seed
    epochs: int = _TRAIN_DEFAULTS.epochs
    batch_size: int = _TRAIN_DEFAULTS.batch_size
    instances_per_id: int = _TRAIN_DEFAULTS.instances_per_id
    lr: float = _TRAIN_DEFAULTS.lr
    beta1: float = _TRAIN_DEFAULTS.beta1
    beta2: float = _TRAIN_DEFAULTS.beta2
    adam_eps: float = _TRAIN_DEFAULTS.adam_eps
    d: int = _TRAIN_DEFAULTS.d
    heads: int = _TRAIN_DEFAULTS.heads
    d_k: int = _TRAIN_DEFAULTS.d_k
    layers: int = _TRAIN_DEFAULTS.layers
    pe_dim: int = _TRAIN_DEFAULTS.pe_dim
    use_pe: bool = _TRAIN_DEFAULTS.use_pe
    alpha: float = _TRAIN_DEFAULTS.alpha
    beta: float = _TRAIN_DEFAULTS.beta
    lam: float = _TRAIN_DEFAULTS.lam
    tau1: float = _TRAIN_DEFAULTS.tau1
    tau2: float = _TRAIN_DEFAULTS.tau2
    mask_nodes: int = _TRAIN_DEFAULTS.mask_nodes
    mask_frames: int = _TRAIN_DEFAULTS.mask_frames
    seq_len: int = _TRAIN_DEFAULTS.seq_len
    normalize_contrastive: bool = _TRAIN_DEFAULTS.normalize_contrastive
    detach_prototypes: bool = _TRAIN_DEFAULTS.detach_prototypes
    full_prototype_refresh: bool = _TRAIN_DEFAULTS.full_prototype_refresh
    dbscan_eps: float = _TRAIN_DEFAULTS.dbscan_eps
    dbscan_min_pts: int = _TRAIN_DEFAULTS.dbscan_min_pts
    eval_every: int = _TRAIN_DEFAULTS.eval_every
    eval_batch_size: int = _TRAIN_DEFAULTS.eval_batch_size

    def to_train_config(self) -> TrainConfig:
        values = self.model_dump(exclude={"manifest", "output_dir"})
        return TrainConfig.from_dict(values)


class CliError(BaseModel):
    error: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)
