import numpy as np

from ..errors import ContractViolation
from ..numerics import Tensor
from ..sgt import EncoderState
from .base import ModeRunner


class RawFeatureRunner(ModeRunner):
    """Nearest-neighbour matching on the flattened f x J x 3 coordinates; nothing is trained."""

    mode = "baseline"
    trainable = False

    def build_state(self, rng) -> EncoderState:
        return EncoderState(config=self.config.sgt, num_joints=self.num_joints, seq_len=self.config.seq_len)

    def represent(self, frames: np.ndarray, training: bool) -> Tensor:
        return Tensor(frames.reshape(frames.shape[0], -1))

    def compute_loss(self, batch, masks):
        raise ContractViolation("the baseline mode has no training objective")

    @property
    def embedding_dim(self) -> int:
        return self.config.seq_len * self.num_joints * 3
