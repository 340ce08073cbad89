import numpy as np

from ..objectives import (
    ProjectionHeads,
    ReconHeads,
    compute_prototypes,
    gpc_loss,
    gpc_seq_loss,
    gpc_ske_loss,
    stpr_structure,
    stpr_trajectory,
    total_loss,
)
from .base import LossTerms, SgtRunner, dataset_prototypes


class PrototypeContrastSgtRunner(SgtRunner):
    """Encoder trained with the sequence- and skeleton-level prototype contrast only."""

    mode = "sgt_gpc"

    def __init__(self, *args, **kwargs):
        self.epoch_prototypes = None
        super().__init__(*args, **kwargs)

    @property
    def lam(self) -> float:
        return 1.0

    def register_heads(self, state, rng):
        if self.config.alpha < 1.0:
            ProjectionHeads.register(state, rng)

    def begin_epoch(self, epoch, pool):
        if self.config.full_prototype_refresh:
            self.epoch_prototypes = dataset_prototypes(self, pool, np.array([s.identity for s in pool]))

    def batch_prototypes(self, reps, labels):
        if self.epoch_prototypes is not None:
            return self.epoch_prototypes
        return compute_prototypes(reps.sequence_reps, labels, detach=self.config.detach_prototypes)

    def gpc_terms(self, reps, labels) -> LossTerms:
        cfg = self.config
        prototypes = self.batch_prototypes(reps, labels)
        if prototypes is None:
            return {"gpc": None, "gpc_seq": None, "gpc_ske": None}
        seq = gpc_seq_loss(reps.sequence_reps, labels, prototypes, cfg.tau1, cfg.normalize_contrastive)
        ske = None
        if cfg.alpha < 1.0:
            ske = gpc_ske_loss(
                reps.skeleton_reps,
                labels,
                prototypes,
                ProjectionHeads(self.state),
                cfg.tau2,
                cfg.normalize_contrastive,
            )
        return {"gpc": gpc_loss(seq, ske, cfg.alpha), "gpc_seq": seq, "gpc_ske": ske}

    def compute_loss(self, batch, masks):
        reps = self.encode(batch.frames, training=True)
        terms = self.gpc_terms(reps, self.batch_labels(batch))
        return total_loss(terms["gpc"], None, None, self.config.beta, self.lam), terms


class TranSGRunner(PrototypeContrastSgtRunner):
    """Prototype contrast fused with structure and trajectory reconstruction."""

    mode = "sgt_gpc_stpr"
    uses_masks = True

    @property
    def lam(self) -> float:
        return self.config.lam

    def register_heads(self, state, rng):
        super().register_heads(state, rng)
        ReconHeads.register(state, rng)

    def compute_loss(self, batch, masks):
        cfg = self.config
        reps = self.encode(batch.frames, training=True)
        terms: LossTerms = {"gpc": None, "gpc_seq": None, "gpc_ske": None}
        if self.lam > 0.0:
            terms = self.gpc_terms(reps, self.batch_labels(batch))
        heads = ReconHeads(self.state)
        terms["stpr_st"] = terms["stpr_tr"] = None
        if self.lam < 1.0 and cfg.beta > 0.0:
            terms["stpr_st"] = stpr_structure(reps.node_reps, masks, heads, batch.frames)
        if self.lam < 1.0 and cfg.beta < 1.0:
            terms["stpr_tr"] = stpr_trajectory(reps.node_reps, masks, heads, batch.frames)
        loss = total_loss(terms["gpc"], terms["stpr_st"], terms["stpr_tr"], cfg.beta, self.lam)
        return loss, terms
