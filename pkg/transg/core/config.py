from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

from .errors import ConfigurationError

MODES = ("baseline", "pc", "sgt_ds", "sgt_gpc", "sgt_gpc_stpr", "unsupervised")

# row order of the ablation report
ABLATION_MODES = ("baseline", "pc", "sgt_ds", "sgt_gpc", "sgt_gpc_stpr")

# modes that need identity labels on the training split
LABELED_MODES = ("pc", "sgt_ds", "sgt_gpc", "sgt_gpc_stpr")


@dataclass
class SgtConfig:
    """Shape of the skeleton graph transformer encoder."""

    d: int = 128
    heads: int = 8
    d_k: int = 16
    layers: int = 2
    pe_dim: int = 8
    use_pe: bool = True

    def violations(self) -> List[str]:
        problems = []
        for name in ("d", "heads", "d_k", "layers"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")
        if self.pe_dim < 0:
            problems.append(f"pe_dim must be >= 0, got {self.pe_dim}")
        if self.d != self.heads * self.d_k:
            problems.append(
                f"d must equal heads * d_k ({self.heads} * {self.d_k} = {self.heads * self.d_k}), got d={self.d}"
            )
        return problems

    def validate(self) -> "SgtConfig":
        problems = self.violations()
        if problems:
            raise ConfigurationError.from_violations(problems)
        return self


@dataclass
class TrainConfig:
    """Everything that determines a training run, with the published defaults."""

    mode: str = "sgt_gpc_stpr"
    seed: int = 0
    epochs: int = 150
    batch_size: int = 256
    instances_per_id: int = 4

    # Adam
    lr: float = 3.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    # encoder
    d: int = 128
    heads: int = 8
    d_k: int = 16
    layers: int = 2
    pe_dim: int = 8
    use_pe: bool = True

    # objectives
    alpha: float = 0.5
    beta: float = 0.5
    lam: float = 0.5
    tau1: float = 0.07
    tau2: float = 14.0
    mask_nodes: int = 10
    mask_frames: int = 2
    seq_len: int = 6
    normalize_contrastive: bool = True
    detach_prototypes: bool = False
    full_prototype_refresh: bool = False

    # unsupervised transfer
    dbscan_eps: float = 0.6
    dbscan_min_pts: int = 2

    # evaluation during training; 0 disables
    eval_every: int = 1
    eval_batch_size: int = 64

    @property
    def sgt(self) -> SgtConfig:
        return SgtConfig(
            d=self.d,
            heads=self.heads,
            d_k=self.d_k,
            layers=self.layers,
            pe_dim=self.pe_dim,
            use_pe=self.use_pe,
        )

    @property
    def uses_stpr(self) -> bool:
        return self.mode in ("sgt_gpc_stpr", "unsupervised") and self.lam < 1.0

    def violations(
        self, num_joints: Optional[int] = None, seq_len: Optional[int] = None
    ) -> List[str]:
        """Every violated constraint, optionally checked against a dataset's J and f."""
        problems = self.sgt.violations()
        if self.mode not in MODES:
            problems.append(f"mode must be one of {list(MODES)}, got {self.mode!r}")
        if self.epochs < 0:
            problems.append(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 2:
            problems.append(f"batch_size must be >= 2, got {self.batch_size}")
        if self.instances_per_id < 2:
            problems.append(f"instances_per_id must be >= 2, got {self.instances_per_id}")
        if self.mode in LABELED_MODES and self.batch_size < 4:
            problems.append(
                f"mode {self.mode} needs batch_size >= 4 (2 identities x 2 instances), got {self.batch_size}"
            )
        if self.lr <= 0:
            problems.append(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            problems.append(f"beta1, beta2 must lie in [0, 1), got {self.beta1}, {self.beta2}")
        for name in ("alpha", "beta", "lam"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                problems.append(f"{name} must lie in [0, 1], got {value}")
        for name in ("tau1", "tau2"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")
        if self.mask_nodes < 0 or self.mask_frames < 0:
            problems.append(
                f"mask counts must be >= 0, got mask_nodes={self.mask_nodes}, mask_frames={self.mask_frames}"
            )
        if self.seq_len < 1:
            problems.append(f"seq_len must be >= 1, got {self.seq_len}")
        elif self.mask_frames >= self.seq_len:
            problems.append(
                f"mask_frames ({self.mask_frames}) must be smaller than seq_len ({self.seq_len})"
            )
        if self.dbscan_eps <= 0:
            problems.append(f"dbscan_eps must be positive, got {self.dbscan_eps}")
        if self.dbscan_min_pts < 1:
            problems.append(f"dbscan_min_pts must be >= 1, got {self.dbscan_min_pts}")
        if self.eval_every < 0:
            problems.append(f"eval_every must be >= 0, got {self.eval_every}")
        if self.eval_batch_size < 1:
            problems.append(f"eval_batch_size must be >= 1, got {self.eval_batch_size}")
        if self.mode == "unsupervised" and self.full_prototype_refresh:
            problems.append("full_prototype_refresh is implied by unsupervised mode; leave it off")

        if num_joints is not None:
            if self.mask_nodes >= num_joints:
                problems.append(
                    f"mask_nodes ({self.mask_nodes}) must be smaller than J ({num_joints})"
                )
            if self.use_pe and self.pe_dim > num_joints - 1:
                problems.append(f"pe_dim ({self.pe_dim}) must be <= J - 1 ({num_joints - 1})")
        if seq_len is not None and seq_len != self.seq_len:
            problems.append(f"seq_len ({self.seq_len}) does not match the dataset f ({seq_len})")
        return problems

    def validate(
        self, num_joints: Optional[int] = None, seq_len: Optional[int] = None
    ) -> "TrainConfig":
        problems = self.violations(num_joints, seq_len)
        if problems:
            raise ConfigurationError.from_violations(problems)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigurationError.from_violations(
                [f"unknown config key {key!r}" for key in unknown]
            )
        return cls(**values)

    def replace(self, **overrides) -> "TrainConfig":
        values = self.to_dict()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return TrainConfig.from_dict(values)
