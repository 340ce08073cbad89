import logging
from collections import defaultdict
from typing import Dict, List, Sequence

import numpy as np

from ..errors import ConfigurationError, SamplingError
from ..numerics import SeededRng
from .model import Batch, SkeletonSequence

logger = logging.getLogger(__name__)

DEFAULT_INSTANCES = 4
MIN_INSTANCES = 2


def identity_index(pool: Sequence[SkeletonSequence]) -> Dict[int, List[int]]:
    """Pool positions per labeled identity; unlabeled sequences are left out."""
    groups: Dict[int, List[int]] = defaultdict(list)
    for position, seq in enumerate(pool):
        if seq.labeled:
            groups[seq.identity].append(position)
    return dict(groups)


def balanced_shape(n_ids: int, batch_size: int, instances: int):
    """(P identities, K instances) with P >= 2, K >= 2 and P * K <= batch_size.

    Slots left over (batch_size - P * K) go to the chosen identities in turn,
    see ``instance_counts``.
    """
    requested = instances
    identities = max(2, min(n_ids, batch_size // max(instances, 1)))
    if identities * instances > batch_size:
        instances = batch_size // identities
    if instances < MIN_INSTANCES:
        raise ConfigurationError(
            f"supervised batches need {MIN_INSTANCES} identities x {MIN_INSTANCES} instances; "
            f"batch_size={batch_size}, instances_per_id={requested} cannot hold that"
        )
    return identities, instances


def instance_counts(identities: int, batch_size: int) -> np.ndarray:
    """Per-identity draw counts summing to ``batch_size``, differing by at most one."""
    counts = np.full(identities, batch_size // identities)
    counts[: batch_size % identities] += 1
    return counts


def sample_batch(
    pool: Sequence[SkeletonSequence],
    batch_size: int,
    mode: str,
    rng: SeededRng,
    instances_per_id: int = DEFAULT_INSTANCES,
) -> Batch:
    """Draw one batch.

    ``supervised``: P identities chosen uniformly without replacement and
    ``batch_size`` sequences spread over them, at least K each (without
    replacement while the identity has enough).
    ``unsupervised``: ``batch_size`` sequences uniformly without replacement,
    labels ignored.
    """
    if not pool:
        raise SamplingError("cannot sample from an empty pool")
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")

    if mode == "unsupervised":
        count = min(batch_size, len(pool))
        chosen = rng.choice(len(pool), size=count, replace=False)
    elif mode == "supervised":
        groups = identity_index(pool)
        if len(groups) < 2:
            raise SamplingError(
                f"supervised sampling needs at least 2 labeled identities, pool has {len(groups)}",
                {"identities": sorted(groups)},
            )
        ids = sorted(groups)
        p, _ = balanced_shape(len(ids), batch_size, instances_per_id)
        picked_ids = rng.choice(len(ids), size=p, replace=False)
        chosen = []
        for i, count in zip(picked_ids, instance_counts(p, batch_size)):
            members = groups[ids[i]]
            draw = rng.choice(len(members), size=int(count), replace=len(members) < count)
            chosen.extend(members[j] for j in draw)
        chosen = np.asarray(chosen)
    else:
        raise ConfigurationError(f"sampling mode must be supervised or unsupervised, got {mode!r}")

    return Batch.from_sequences([pool[i] for i in chosen], indices=np.asarray(chosen))
