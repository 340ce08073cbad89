import logging

import numpy as np
from sklearn.cluster import DBSCAN

from ..errors import ConfigurationError, ContractViolation

logger = logging.getLogger(__name__)


def normalized_distances(reps: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between L2-normalized rows."""
    norms = np.maximum(np.linalg.norm(reps, axis=1, keepdims=True), 1e-12)
    unit = reps / norms
    return np.stack([np.sqrt(np.sum((unit - row) ** 2, axis=1)) for row in unit])


def pseudo_label(reps: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """DBSCAN cluster ids on L2-normalized reps; -1 marks noise."""
    reps = np.asarray(reps, dtype=np.float64)
    if eps <= 0:
        raise ConfigurationError(f"DBSCAN eps must be positive, got {eps}")
    if min_pts < 1:
        raise ConfigurationError(f"DBSCAN min_pts must be >= 1, got {min_pts}")
    if reps.ndim != 2:
        raise ContractViolation(f"pseudo_label needs an (n, d) matrix, got {reps.shape}")
    if reps.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if not np.all(np.isfinite(reps)):
        raise ContractViolation("pseudo_label needs finite representations")

    distances = normalized_distances(reps)
    labels = DBSCAN(eps=eps, min_samples=min_pts, metric="precomputed").fit_predict(distances)
    labels = labels.astype(np.int64)
    clusters = int(labels.max()) + 1 if labels.size else 0
    noise = int(np.sum(labels == -1))
    logger.info(f"DBSCAN(eps={eps}, min_pts={min_pts}): {clusters} cluster(s), {noise} noise of {labels.size}")
    return labels
