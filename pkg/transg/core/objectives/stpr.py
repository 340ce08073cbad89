"""Structure-trajectory prompted reconstruction.

Structure: per frame, the mean of the visible joints' reps predicts the whole
J x 3 skeleton. Trajectory: per joint, the mean over visible frames predicts
the joint's f x 3 track. Both are scored by the l1 distance summed over all
coordinates of a sequence and averaged over sequences.
"""

import numpy as np

from ..errors import ConfigurationError, DimensionError
from ..numerics import SeededRng, Tensor, ops
from ..sgt import EncoderState
from .masks import MaskPlan


class ReconHeads:
    """f_s: d -> 2d -> J*3 and f_t: d -> 2d -> f*3, one ReLU hidden layer each."""

    STRUCTURE = "heads.structure"
    TRAJECTORY = "heads.trajectory"

    def __init__(self, state: EncoderState):
        self.state = state

    @classmethod
    def register(cls, state: EncoderState, rng: SeededRng) -> "ReconHeads":
        d = state.config.d
        state.add_linear(f"{cls.STRUCTURE}.fc1", 2 * d, d, rng)
        state.add_linear(f"{cls.STRUCTURE}.fc2", state.num_joints * 3, 2 * d, rng)
        state.add_linear(f"{cls.TRAJECTORY}.fc1", 2 * d, d, rng)
        state.add_linear(f"{cls.TRAJECTORY}.fc2", state.seq_len * 3, 2 * d, rng)
        return cls(state)

    def _mlp(self, x: Tensor, prefix: str) -> Tensor:
        s = self.state
        hidden = ops.relu(ops.linear(x, s[f"{prefix}.fc1.weight"], s[f"{prefix}.fc1.bias"]))
        return ops.linear(hidden, s[f"{prefix}.fc2.weight"], s[f"{prefix}.fc2.bias"])

    def structure(self, context: Tensor) -> Tensor:
        return self._mlp(context, self.STRUCTURE)

    def trajectory(self, context: Tensor) -> Tensor:
        return self._mlp(context, self.TRAJECTORY)


def structure_context(node_reps: Tensor, masks: MaskPlan) -> Tensor:
    """(B, f, d): mean of visible joints per frame."""
    B, f, J, _ = node_reps.shape
    if masks.node_mask.shape != (B, f, J):
        raise DimensionError("structure_context", node_reps.shape, masks.node_mask.shape)
    if masks.masked_nodes >= J:
        raise ConfigurationError(f"masked joints a={masks.masked_nodes} must be smaller than J={J}")
    return ops.masked_mean(node_reps, masks.node_mask[..., None], axis=2)


def trajectory_context(node_reps: Tensor, masks: MaskPlan) -> Tensor:
    """(B, J, d): mean over visible frames per joint; one frame mask per item."""
    B, f, J, _ = node_reps.shape
    if masks.frame_mask.shape != (B, f):
        raise DimensionError("trajectory_context", node_reps.shape, masks.frame_mask.shape)
    if masks.masked_frames >= f:
        raise ConfigurationError(f"masked frames b={masks.masked_frames} must be smaller than f={f}")
    return ops.masked_mean(node_reps, masks.frame_mask[:, :, None, None], axis=1)


def l1_per_sequence(prediction: Tensor, ground_truth: np.ndarray) -> Tensor:
    if prediction.shape != ground_truth.shape:
        raise DimensionError("l1_per_sequence", prediction.shape, ground_truth.shape)
    return ops.scale(ops.abs_sum(ops.sub(prediction, ground_truth)), 1.0 / prediction.shape[0])


def stpr_structure(
    node_reps: Tensor, masks: MaskPlan, heads: ReconHeads, ground_truth: np.ndarray
) -> Tensor:
    B, f, J, _ = node_reps.shape
    prediction = ops.reshape(heads.structure(structure_context(node_reps, masks)), (B, f, J, 3))
    return l1_per_sequence(prediction, ground_truth)


def stpr_trajectory(
    node_reps: Tensor, masks: MaskPlan, heads: ReconHeads, ground_truth: np.ndarray
) -> Tensor:
    B, f, J, _ = node_reps.shape
    tracks = ops.reshape(heads.trajectory(trajectory_context(node_reps, masks)), (B, J, f, 3))
    prediction = ops.transpose(tracks, (0, 2, 1, 3))
    return l1_per_sequence(prediction, ground_truth)
