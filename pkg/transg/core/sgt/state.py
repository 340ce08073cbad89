import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import SgtConfig
from ..errors import ConfigurationError, SchemaError
from ..numerics import Parameter, RunningStats, SeededRng

logger = logging.getLogger(__name__)


def uniform_init(rng: SeededRng, shape: Sequence[int], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=tuple(shape))


@dataclass(eq=False)
class EncoderState:
    """Every learnable tensor of a run, by name, plus batch-norm running stats.

    Encoder, projection heads, reconstruction heads and ablation encoders all
    register here so one registry is optimized and checkpointed.
    """

    config: SgtConfig
    num_joints: int
    seq_len: int
    params: "OrderedDict[str, Parameter]" = field(default_factory=OrderedDict)
    buffers: "OrderedDict[str, RunningStats]" = field(default_factory=OrderedDict)

    # registration
    def add_tensor(self, name: str, shape: Sequence[int], fan_in: int, rng: SeededRng) -> Parameter:
        return self._register(name, uniform_init(rng, shape, fan_in))

    def add_constant(self, name: str, value: np.ndarray) -> Parameter:
        return self._register(name, np.array(value, dtype=np.float64))

    def add_linear(
        self, name: str, out_features: int, in_features: int, rng: SeededRng, bias: bool = True
    ) -> None:
        self.add_tensor(f"{name}.weight", (out_features, in_features), in_features, rng)
        if bias:
            self.add_constant(f"{name}.bias", np.zeros(out_features))

    def add_norm(self, name: str, channels: int) -> None:
        self.add_constant(f"{name}.weight", np.ones(channels))
        self.add_constant(f"{name}.bias", np.zeros(channels))
        self.buffers[name] = RunningStats.initial(channels)

    def _register(self, name: str, value: np.ndarray) -> Parameter:
        if name in self.params:
            raise ConfigurationError(f"parameter {name!r} is already registered")
        param = Parameter(value, name=name)
        self.params[name] = param
        return param

    # access
    def __getitem__(self, name: str) -> Parameter:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def get(self, name: str) -> Optional[Parameter]:
        return self.params.get(name)

    def parameters(self, prefix: Optional[str] = None) -> List[Parameter]:
        return [p for n, p in self.params.items() if prefix is None or n.startswith(prefix)]

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def groups(self) -> Dict[str, List[str]]:
        """Parameter names grouped by module (name without its last component)."""
        grouped: Dict[str, List[str]] = OrderedDict()
        for name in self.params:
            module = name.rsplit(".", 1)[0] if "." in name else name
            grouped.setdefault(module, []).append(name)
        return grouped

    # flat views for checkpoints
    def buffer_arrays(self) -> "OrderedDict[str, np.ndarray]":
        arrays = OrderedDict()
        for name, stats in self.buffers.items():
            arrays[f"{name}.running_mean"] = stats.mean
            arrays[f"{name}.running_var"] = stats.var
        return arrays

    def load_arrays(self, params: Dict[str, np.ndarray], buffers: Dict[str, np.ndarray]):
        """Overwrite values in place; names and shapes must match exactly."""
        expected = set(self.params) | set(self.buffer_arrays())
        provided = set(params) | set(buffers)
        if expected != provided:
            raise SchemaError(
                "tensor names differ: "
                f"missing {sorted(expected - provided)}, unexpected {sorted(provided - expected)}"
            )
        for name, value in params.items():
            if value.shape != self.params[name].shape:
                raise SchemaError(
                    f"{name}: stored shape {value.shape}, expected {self.params[name].shape}"
                )
            self.params[name].data = np.array(value, dtype=np.float64)
        for name, stats in self.buffers.items():
            stats.mean = np.array(buffers[f"{name}.running_mean"], dtype=np.float64)
            stats.var = np.array(buffers[f"{name}.running_var"], dtype=np.float64)

    @classmethod
    def from_arrays(
        cls,
        config: SgtConfig,
        num_joints: int,
        seq_len: int,
        params: "OrderedDict[str, np.ndarray]",
        buffers: "OrderedDict[str, np.ndarray]",
    ) -> "EncoderState":
        state = cls(config=config, num_joints=num_joints, seq_len=seq_len)
        for name, value in params.items():
            state.add_constant(name, value)
        norms = [n[: -len(".running_mean")] for n in buffers if n.endswith(".running_mean")]
        for name in norms:
            state.buffers[name] = RunningStats(
                mean=np.array(buffers[f"{name}.running_mean"], dtype=np.float64),
                var=np.array(buffers[f"{name}.running_var"], dtype=np.float64),
            )
        return state


def init_encoder(state: EncoderState, rng: SeededRng) -> EncoderState:
    """Register the embedding and every full-relation layer on ``state``."""
    cfg = state.config.validate()
    d = cfg.d
    state.add_linear("embed.value", d, 3, rng)
    if cfg.use_pe and cfg.pe_dim > 0:
        state.add_linear("embed.position", d, cfg.pe_dim, rng)
    for layer in range(cfg.layers):
        prefix = f"layers.{layer}"
        for role in ("query", "key", "value"):
            state.add_tensor(f"{prefix}.attn.{role}", (cfg.heads, cfg.d_k, d), d, rng)
        state.add_tensor(f"{prefix}.attn.out", (d, d), d, rng)
        state.add_norm(f"{prefix}.norm1", d)
        state.add_tensor(f"{prefix}.ffn.w1", (2 * d, d), d, rng)
        state.add_tensor(f"{prefix}.ffn.w2", (d, 2 * d), 2 * d, rng)
        state.add_norm(f"{prefix}.norm2", d)
    logger.debug(
        f"Initialized encoder: {cfg.layers} layer(s), {cfg.heads} head(s), d={d}, "
        f"{state.parameter_count()} parameters"
    )
    return state


def new_encoder_state(
    config: SgtConfig, num_joints: int, seq_len: int, rng: SeededRng
) -> EncoderState:
    return init_encoder(EncoderState(config=config, num_joints=num_joints, seq_len=seq_len), rng)
