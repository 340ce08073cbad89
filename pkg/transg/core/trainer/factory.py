from typing import Optional, Sequence

from ..config import TrainConfig
from ..errors import ConfigurationError
from ..graphpe import SkeletonGraphSpec, build_graph
from ..numerics import SeededRng
from ..sgt import EncoderState
from .base import ModeRunner
from .checkpoint import Checkpoint


def create_runner(
    config: TrainConfig,
    graph: SkeletonGraphSpec,
    class_ids: Sequence[int],
    rng: Optional[SeededRng] = None,
    state: Optional[EncoderState] = None,
) -> ModeRunner:
    """Create the runner for ``config.mode``; a restored ``state`` skips initialization."""
    kwargs = dict(rng=rng, state=state)
    if config.mode == "baseline":
        from .baseline import RawFeatureRunner

        return RawFeatureRunner(config, graph, class_ids, **kwargs)
    elif config.mode == "pc":
        from .prototype import PrototypeContrastRunner

        return PrototypeContrastRunner(config, graph, class_ids, **kwargs)
    elif config.mode == "sgt_ds":
        from .supervised import DirectSupervisionRunner

        return DirectSupervisionRunner(config, graph, class_ids, **kwargs)
    elif config.mode == "sgt_gpc":
        from .transg import PrototypeContrastSgtRunner

        return PrototypeContrastSgtRunner(config, graph, class_ids, **kwargs)
    elif config.mode == "sgt_gpc_stpr":
        from .transg import TranSGRunner

        return TranSGRunner(config, graph, class_ids, **kwargs)
    elif config.mode == "unsupervised":
        from .unsupervised import PseudoLabelRunner

        return PseudoLabelRunner(config, graph, class_ids, **kwargs)
    else:
        raise ConfigurationError(f"Unsupported training mode: {config.mode}")


def restore_runner(checkpoint: Checkpoint) -> ModeRunner:
    graph = build_graph(checkpoint.num_joints, checkpoint.edges)
    return create_runner(checkpoint.config, graph, checkpoint.class_ids, state=checkpoint.state)
