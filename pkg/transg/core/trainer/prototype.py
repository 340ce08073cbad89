import numpy as np

from ..numerics import Tensor, ops
from ..objectives import compute_prototypes, gpc_seq_loss
from ..sgt import EncoderState
from .base import ModeRunner, dataset_prototypes


class PrototypeContrastRunner(ModeRunner):
    """Prototype contrast on raw sequences through one linear map f*J*3 -> d."""

    mode = "pc"
    ENCODER = "pc.encoder"

    def __init__(self, *args, **kwargs):
        self.epoch_prototypes = None
        super().__init__(*args, **kwargs)

    def build_state(self, rng) -> EncoderState:
        state = EncoderState(config=self.config.sgt, num_joints=self.num_joints, seq_len=self.config.seq_len)
        state.add_linear(self.ENCODER, self.config.d, self.config.seq_len * self.num_joints * 3, rng)
        return state

    def represent(self, frames: np.ndarray, training: bool) -> Tensor:
        flat = Tensor(frames.reshape(frames.shape[0], -1))
        return ops.linear(flat, self.state[f"{self.ENCODER}.weight"], self.state[f"{self.ENCODER}.bias"])

    def begin_epoch(self, epoch, pool):
        if self.config.full_prototype_refresh:
            self.epoch_prototypes = dataset_prototypes(self, pool, np.array([s.identity for s in pool]))

    def compute_loss(self, batch, masks):
        reps = self.represent(batch.frames, training=True)
        labels = self.batch_labels(batch)
        prototypes = self.epoch_prototypes
        if prototypes is None:
            prototypes = compute_prototypes(reps, labels, detach=self.config.detach_prototypes)
        seq = gpc_seq_loss(reps, labels, prototypes, self.config.tau1, self.config.normalize_contrastive)
        return seq, {"gpc": seq, "gpc_seq": seq}
