from .fusion import LossBreakdown, recombine, total_loss
from .gpc import (
    NOISE,
    PrototypeSet,
    ProjectionHeads,
    compute_prototypes,
    cross_entropy,
    fixed_prototypes,
    gpc_loss,
    gpc_seq_loss,
    gpc_ske_loss,
    prototype_contrast,
)
from .masks import MaskPlan, check_mask_counts, sample_mask_plan, visible_plan
from .stpr import (
    ReconHeads,
    l1_per_sequence,
    stpr_structure,
    stpr_trajectory,
    structure_context,
    trajectory_context,
)

__all__ = [
    "NOISE",
    "PrototypeSet",
    "ProjectionHeads",
    "compute_prototypes",
    "fixed_prototypes",
    "cross_entropy",
    "prototype_contrast",
    "gpc_seq_loss",
    "gpc_ske_loss",
    "gpc_loss",
    "MaskPlan",
    "sample_mask_plan",
    "visible_plan",
    "check_mask_counts",
    "ReconHeads",
    "structure_context",
    "trajectory_context",
    "l1_per_sequence",
    "stpr_structure",
    "stpr_trajectory",
    "LossBreakdown",
    "total_loss",
    "recombine",
]
