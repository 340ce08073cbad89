import logging
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import TrainConfig
from ..errors import ContractViolation
from ..graphpe import SkeletonGraphSpec, compute_pe
from ..numerics import SeededRng, Tensor, no_record
from ..objectives import LossBreakdown, MaskPlan, PrototypeSet, fixed_prototypes
from ..sgt import EncoderState, encode, new_encoder_state
from ..skeledata import Batch, SkeletonSequence

logger = logging.getLogger(__name__)

LossTerms = Dict[str, Optional[Tensor]]


class ModeRunner(ABC):
    """One training mode: which parameters exist, how a batch is scored, how
    sequences are embedded for matching.
    """

    mode: str
    sampling: str = "supervised"
    trainable: bool = True
    uses_masks: bool = False

    def __init__(
        self,
        config: TrainConfig,
        graph: SkeletonGraphSpec,
        class_ids: Sequence[int],
        rng: Optional[SeededRng] = None,
        state: Optional[EncoderState] = None,
    ):
        self.config = config
        self.graph = graph
        self.class_ids = [int(c) for c in class_ids]
        if state is None:
            if rng is None:
                raise ContractViolation("a runner without a restored state needs an RNG to initialize")
            state = self.build_state(rng)
        self.state = state

    @property
    def num_joints(self) -> int:
        return self.graph.num_joints

    @abstractmethod
    def build_state(self, rng: SeededRng) -> EncoderState:
        pass

    @abstractmethod
    def represent(self, frames: np.ndarray, training: bool) -> Tensor:
        """(B, d) sequence vectors used for matching."""

    @abstractmethod
    def compute_loss(self, batch: Batch, masks: Optional[MaskPlan]) -> Tuple[Tensor, LossTerms]:
        pass

    def begin_epoch(self, epoch: int, pool: Sequence[SkeletonSequence]):
        """Hook run before the first step of every epoch."""

    def batch_labels(self, batch: Batch) -> np.ndarray:
        return batch.labels

    def breakdown(self, total: Tensor, terms: LossTerms) -> LossBreakdown:
        values = {k: float(v.item()) for k, v in terms.items() if v is not None}
        return LossBreakdown(total=float(total.item()), **values)

    def embed(self, sequences: Sequence[SkeletonSequence], batch_size: int = 64) -> np.ndarray:
        """Inference-mode representations, one row per sequence."""
        if not sequences:
            return np.zeros((0, self.embedding_dim))
        rows = []
        with no_record():
            for start in range(0, len(sequences), batch_size):
                chunk = sequences[start : start + batch_size]
                frames = np.stack([s.frames for s in chunk])
                rows.append(self.represent(frames, training=False).data)
        return np.concatenate(rows, axis=0)

    @property
    def embedding_dim(self) -> int:
        return self.config.d


class SgtRunner(ModeRunner):
    """Shared plumbing for the modes built on the graph transformer encoder."""

    def __init__(self, config, graph, class_ids, rng=None, state=None):
        if config.use_pe and config.pe_dim > 0 and graph.pe_dim != config.pe_dim:
            graph = compute_pe(graph, config.pe_dim)
        super().__init__(config, graph, class_ids, rng=rng, state=state)

    def build_state(self, rng: SeededRng) -> EncoderState:
        state = new_encoder_state(self.config.sgt, self.graph.num_joints, self.config.seq_len, rng)
        self.register_heads(state, rng)
        return state

    def register_heads(self, state: EncoderState, rng: SeededRng):
        """Add mode-specific heads after the encoder parameters."""

    def encode(self, frames: np.ndarray, training: bool):
        return encode(frames, self.graph, self.state, training=training)

    def represent(self, frames: np.ndarray, training: bool) -> Tensor:
        return self.encode(frames, training).sequence_reps


def prototype_centroids(
    reps: np.ndarray, labels: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(class ids, per-class mean rows, counts) over labels != -1."""
    valid = labels != -1
    classes, counts = np.unique(labels[valid], return_counts=True)
    if classes.size == 0:
        return classes, np.zeros((0, reps.shape[1])), counts
    centroids = np.stack([reps[labels == c].mean(axis=0) for c in classes])
    return classes, centroids, counts


def dataset_prototypes(
    runner: ModeRunner, pool: Sequence[SkeletonSequence], labels: np.ndarray
) -> Optional[PrototypeSet]:
    """Fixed prototypes from one inference pass over ``pool``; None with fewer than 2 classes."""
    reps = runner.embed(pool, runner.config.eval_batch_size)
    classes, centroids, counts = prototype_centroids(reps, np.asarray(labels))
    if classes.size < 2:
        return None
    return fixed_prototypes(classes, centroids, counts)
