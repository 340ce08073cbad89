from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..numerics import SeededRng


@dataclass(eq=False)
class MaskPlan:
    """Visibility masks for one step (1 = visible, 0 = masked).

    ``node_mask`` is drawn per (item, frame); ``frame_mask`` per item and
    shared by all joints of that item.
    """

    node_mask: np.ndarray  # (B, f, J)
    frame_mask: np.ndarray  # (B, f)

    @property
    def masked_nodes(self) -> int:
        return int(self.node_mask.shape[-1] - self.node_mask[0, 0].sum()) if self.node_mask.size else 0

    @property
    def masked_frames(self) -> int:
        return int(self.frame_mask.shape[-1] - self.frame_mask[0].sum()) if self.frame_mask.size else 0


def check_mask_counts(num_joints: int, seq_len: int, a: int, b: int):
    problems = []
    if not 0 <= a < num_joints:
        problems.append(f"masked joints a={a} must satisfy 0 <= a < J={num_joints}")
    if not 0 <= b < seq_len:
        problems.append(f"masked frames b={b} must satisfy 0 <= b < f={seq_len}")
    if problems:
        raise ConfigurationError.from_violations(problems)


def sample_mask_plan(
    batch_size: int, seq_len: int, num_joints: int, a: int, b: int, rng: SeededRng
) -> MaskPlan:
    """Exactly ``a`` masked joints per frame and ``b`` masked frames per item, uniformly."""
    check_mask_counts(num_joints, seq_len, a, b)
    node_mask = np.ones((batch_size, seq_len, num_joints))
    frame_mask = np.ones((batch_size, seq_len))
    for i in range(batch_size):
        for t in range(seq_len):
            node_mask[i, t, rng.choice(num_joints, size=a, replace=False)] = 0.0
        frame_mask[i, rng.choice(seq_len, size=b, replace=False)] = 0.0
    return MaskPlan(node_mask=node_mask, frame_mask=frame_mask)


def visible_plan(batch_size: int, seq_len: int, num_joints: int) -> MaskPlan:
    return MaskPlan(np.ones((batch_size, seq_len, num_joints)), np.ones((batch_size, seq_len)))
