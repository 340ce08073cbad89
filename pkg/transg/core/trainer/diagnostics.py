import logging
from typing import List, Optional

import numpy as np

from ..config import TrainConfig
from ..errors import ConfigurationError
from ..graphpe import build_graph
from ..numerics import GradCheckRow, SeededRng, gradient_check, no_record
from ..objectives import fixed_prototypes, sample_mask_plan
from ..skeledata import Batch
from .base import prototype_centroids
from .factory import create_runner

logger = logging.getLogger(__name__)

TINY_JOINTS = 4


def tiny_config(**overrides) -> TrainConfig:
    """J=4, f=2, d=8, H=2, d_k=4, L=1, B=4 over 2 classes, a=1, b=1."""
    values = dict(
        mode="sgt_gpc_stpr",
        d=8,
        heads=2,
        d_k=4,
        layers=1,
        pe_dim=2,
        seq_len=2,
        batch_size=4,
        instances_per_id=2,
        mask_nodes=1,
        mask_frames=1,
        epochs=1,
    )
    values.update(overrides)
    return TrainConfig(**values)


def active_terms(terms) -> List[str]:
    """Names of the loss terms a runner actually computed."""
    return sorted(name for name, value in terms.items() if value is not None)


def check_gradients(
    config: Optional[TrainConfig] = None,
    num_joints: int = TINY_JOINTS,
    num_classes: int = 2,
    step: float = 1e-5,
    tolerance: float = 1e-4,
) -> List[GradCheckRow]:
    """Finite-difference check of the full training loss, one row per module.

    The batch, labels and masks are drawn once so the loss is a fixed
    function of the parameters. The graph is a path over ``num_joints``.
    """
    config = config or tiny_config()
    config.validate(num_joints=num_joints)
    if config.mode == "baseline":
        raise ConfigurationError("baseline mode has no parameters to check")

    rng = SeededRng(config.seed)
    graph = build_graph(num_joints, [(j, j + 1) for j in range(num_joints - 1)])
    runner = create_runner(config, graph, list(range(num_classes)), rng=rng)

    size = config.batch_size
    frames = rng.normal(size=(size, config.seq_len, num_joints, 3))
    labels = np.arange(size) % num_classes
    batch = Batch(frames=frames, labels=labels, indices=np.arange(size))
    if config.mode == "unsupervised":
        # stand-in cluster ids and their fixed centroids
        runner.pseudo_labels = labels
        with no_record():
            reps = runner.represent(frames, training=False).data
        runner.epoch_prototypes = fixed_prototypes(*prototype_centroids(reps, labels))
    masks = None
    if runner.uses_masks:
        masks = sample_mask_plan(size, config.seq_len, num_joints, config.mask_nodes, config.mask_frames, rng)

    def loss_fn():
        return runner.compute_loss(batch, masks)[0]

    with no_record():
        terms = active_terms(runner.compute_loss(batch, masks)[1])
    logger.info(
        f"Gradient check of mode {config.mode}: {runner.state.parameter_count()} parameter value(s), "
        f"terms {', '.join(terms) or 'total'}"
    )
    return gradient_check(
        loss_fn, runner.state.parameters(), step=step, tolerance=tolerance, groups=runner.state.groups()
    )
