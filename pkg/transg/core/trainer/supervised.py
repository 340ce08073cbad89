import numpy as np

from ..numerics import ops
from ..objectives import cross_entropy
from .base import SgtRunner


class DirectSupervisionRunner(SgtRunner):
    """Encoder plus a linear identity classifier trained with cross-entropy."""

    mode = "sgt_ds"
    CLASSIFIER = "heads.classifier"

    def register_heads(self, state, rng):
        state.add_linear(self.CLASSIFIER, len(self.class_ids), self.config.d, rng)

    def compute_loss(self, batch, masks):
        reps = self.encode(batch.frames, training=True)
        logits = ops.linear(
            reps.sequence_reps, self.state[f"{self.CLASSIFIER}.weight"], self.state[f"{self.CLASSIFIER}.bias"]
        )
        lookup = {c: k for k, c in enumerate(self.class_ids)}
        targets = np.array([lookup.get(int(l), -1) for l in self.batch_labels(batch)])
        return cross_entropy(logits, targets), {}
