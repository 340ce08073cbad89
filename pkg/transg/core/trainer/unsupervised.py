import logging

import numpy as np

from ..objectives import fixed_prototypes
from .base import prototype_centroids
from .clustering import pseudo_label
from .transg import TranSGRunner

logger = logging.getLogger(__name__)


class PseudoLabelRunner(TranSGRunner):
    """TranSG objective with DBSCAN cluster ids standing in for identities.

    Every epoch the training pool is encoded once; its clusters give the
    pseudo-labels and the (fixed) prototypes for that epoch. Ground-truth
    labels are never read.
    """

    mode = "unsupervised"
    sampling = "unsupervised"

    def __init__(self, *args, **kwargs):
        self.pseudo_labels = np.zeros(0, dtype=np.int64)
        super().__init__(*args, **kwargs)

    def begin_epoch(self, epoch, pool):
        cfg = self.config
        reps = self.embed(pool, cfg.eval_batch_size)
        self.pseudo_labels = pseudo_label(reps, cfg.dbscan_eps, cfg.dbscan_min_pts)
        classes, centroids, counts = prototype_centroids(reps, self.pseudo_labels)
        if classes.size < 2:
            logger.warning(
                f"Epoch {epoch}: {classes.size} cluster(s) found, "
                "skipping prototype contrast; reconstruction still trains"
            )
            self.epoch_prototypes = None
        else:
            self.epoch_prototypes = fixed_prototypes(classes, centroids, counts)

    def batch_labels(self, batch):
        return self.pseudo_labels[batch.indices]

    def batch_prototypes(self, reps, labels):
        if self.epoch_prototypes is None or np.all(labels == -1):
            return None
        return self.epoch_prototypes
