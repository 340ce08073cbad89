"""Graph prototype contrastive objective.

Sequence-level representations are pulled toward the prototype (class mean)
of their identity against all other prototypes in the pool; skeleton-level
representations do the same through two linear projection heads.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, ContractViolation, DimensionError
from ..numerics import SeededRng, Tensor, ops
from ..sgt import EncoderState

NOISE = -1


@dataclass(eq=False)
class PrototypeSet:
    class_ids: np.ndarray  # (C,)
    prototypes: Tensor  # (C, d)
    counts: np.ndarray  # (C,)

    @property
    def num_classes(self) -> int:
        return int(self.class_ids.shape[0])

    def targets(self, labels: np.ndarray) -> np.ndarray:
        """Prototype row per label; noise labels map to -1."""
        labels = np.asarray(labels)
        lookup = {int(c): k for k, c in enumerate(self.class_ids)}
        missing = sorted({int(l) for l in labels if l != NOISE and int(l) not in lookup})
        if missing:
            raise ContractViolation(f"labels {missing} have no prototype")
        return np.array([lookup[int(l)] if l != NOISE else -1 for l in labels], dtype=np.int64)


def compute_prototypes(
    sequence_reps: Tensor, labels: Sequence[int], detach: bool = False
) -> PrototypeSet:
    """Per-class mean of ``sequence_reps``; noise (-1) rows are left out.

    The mean is an assignment-matrix product, so gradients reach the encoder
    unless ``detach``.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != sequence_reps.shape[0]:
        raise DimensionError("compute_prototypes", sequence_reps.shape, labels.shape)
    valid = labels != NOISE
    classes, counts = np.unique(labels[valid], return_counts=True)
    if classes.size < 2:
        raise ContractViolation(
            f"prototype contrast needs at least 2 classes, got {classes.tolist()}"
        )
    assign = np.zeros((classes.size, labels.shape[0]))
    for k, c in enumerate(classes):
        members = labels == c
        assign[k, members] = 1.0 / members.sum()
    reps = Tensor(sequence_reps.data) if detach else sequence_reps
    return PrototypeSet(classes, ops.matmul(Tensor(assign), reps), counts)


def fixed_prototypes(class_ids: np.ndarray, centroids: np.ndarray, counts: np.ndarray) -> PrototypeSet:
    """Prototypes computed elsewhere (dataset pass, clustering); no gradient."""
    if class_ids.size < 2:
        raise ContractViolation(f"prototype contrast needs at least 2 classes, got {class_ids.tolist()}")
    return PrototypeSet(np.asarray(class_ids), Tensor(centroids), np.asarray(counts))


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean of -log softmax(logits)[target] over rows with a target >= 0."""
    targets = np.asarray(targets)
    valid = targets >= 0
    if not valid.any():
        raise ContractViolation("cross_entropy needs at least one labeled row")
    onehot = np.zeros(logits.shape)
    onehot[np.flatnonzero(valid), targets[valid]] = 1.0
    log_probs = ops.log_softmax(logits)
    return ops.scale(ops.sum(ops.mul(log_probs, onehot)), -1.0 / valid.sum())


def _check_temperature(name: str, tau: float):
    if tau <= 0:
        raise ConfigurationError(f"{name} must be positive, got {tau}")


def prototype_contrast(
    queries: Tensor, keys: Tensor, targets: np.ndarray, tau: float, normalize: bool = True
) -> Tensor:
    if normalize:
        queries, keys = ops.l2_normalize(queries), ops.l2_normalize(keys)
    logits = ops.scale(ops.matmul(queries, ops.swapaxes(keys, -1, -2)), 1.0 / tau)
    return cross_entropy(logits, targets)


def gpc_seq_loss(
    sequence_reps: Tensor,
    labels: Sequence[int],
    prototypes: PrototypeSet,
    tau1: float,
    normalize: bool = True,
) -> Tensor:
    _check_temperature("tau1", tau1)
    return prototype_contrast(
        sequence_reps, prototypes.prototypes, prototypes.targets(labels), tau1, normalize
    )


class ProjectionHeads:
    """F_1 for skeleton-level reps and F_2 for prototypes, both d -> d with bias."""

    SKELETON = "heads.proj_skeleton"
    PROTOTYPE = "heads.proj_prototype"

    def __init__(self, state: EncoderState):
        self.state = state

    @classmethod
    def register(cls, state: EncoderState, rng: SeededRng) -> "ProjectionHeads":
        d = state.config.d
        state.add_linear(cls.SKELETON, d, d, rng)
        state.add_linear(cls.PROTOTYPE, d, d, rng)
        return cls(state)

    def skeleton(self, reps: Tensor) -> Tensor:
        return ops.linear(reps, self.state[f"{self.SKELETON}.weight"], self.state[f"{self.SKELETON}.bias"])

    def prototype(self, reps: Tensor) -> Tensor:
        return ops.linear(reps, self.state[f"{self.PROTOTYPE}.weight"], self.state[f"{self.PROTOTYPE}.bias"])


def gpc_ske_loss(
    skeleton_reps: Tensor,
    labels: Sequence[int],
    prototypes: PrototypeSet,
    heads: ProjectionHeads,
    tau2: float,
    normalize: bool = True,
) -> Tensor:
    """Every frame's skeleton rep against the projected prototypes, averaged over B*f terms."""
    _check_temperature("tau2", tau2)
    B, f, d = skeleton_reps.shape
    queries = ops.reshape(heads.skeleton(skeleton_reps), (B * f, d))
    targets = np.repeat(prototypes.targets(labels), f)
    keys = heads.prototype(prototypes.prototypes)
    return prototype_contrast(queries, keys, targets, tau2, normalize)


def gpc_loss(seq_term: Tensor, ske_term: Optional[Tensor], alpha: float) -> Tensor:
    """alpha * seq + (1 - alpha) * ske; alpha = 1 ignores the skeleton term."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1.0 or ske_term is None:
        if ske_term is None and alpha != 1.0:
            raise ContractViolation(f"alpha={alpha} needs the skeleton-level term")
        return seq_term
    return ops.add(ops.scale(seq_term, alpha), ops.scale(ske_term, 1.0 - alpha))
