"""Skeleton graph transformer forward pass.

Attention is spatial only: each head relates all J joints of one frame to
each other (no adjacency mask), frames never attend to other frames.
Temporal structure enters through pooling and the reconstruction objectives.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from ..errors import DimensionError
from ..graphpe import SkeletonGraphSpec
from ..numerics import Tensor, ops
from ..skeledata import Batch
from .state import EncoderState


@dataclass(eq=False)
class GraphRepresentations:
    node_reps: Tensor  # (B, f, J, d)
    skeleton_reps: Tensor  # (B, f, d)
    sequence_reps: Tensor  # (B, d)
    attention: Optional[List[np.ndarray]] = None  # per layer (B, f, H, J, J)


def _frames_of(batch: Union[Batch, np.ndarray, Tensor]) -> Tensor:
    if isinstance(batch, Batch):
        return Tensor(batch.frames)
    if isinstance(batch, Tensor):
        return batch
    return Tensor(batch)


def embed_nodes(
    batch: Union[Batch, np.ndarray, Tensor],
    spec: Optional[SkeletonGraphSpec],
    state: EncoderState,
) -> Tensor:
    """h_i = (W_v v_i + b_v) + (W_p lambda_i + b_p); the PE term is skipped when disabled."""
    x = _frames_of(batch)
    if x.ndim != 4 or x.shape[-1] != 3:
        raise DimensionError("embed_nodes", x.shape, message=f"frames must be (B, f, J, 3), got {x.shape}")
    h = ops.linear(x, state["embed.value.weight"], state["embed.value.bias"])
    if "embed.position.weight" in state:
        if spec is None:
            raise DimensionError("embed_nodes", x.shape, message="positional encoding needs a graph")
        pe = spec.pe_matrix
        if pe.shape[0] != x.shape[2]:
            raise DimensionError("embed_nodes", x.shape, pe.shape)
        if pe.shape[1] != state["embed.position.weight"].shape[1]:
            raise DimensionError("embed_nodes", pe.shape, state["embed.position.weight"].shape)
        h = ops.add(h, ops.linear(Tensor(pe), state["embed.position.weight"], state["embed.position.bias"]))
    elif spec is not None and spec.num_joints != x.shape[2]:
        raise DimensionError("embed_nodes", x.shape, (spec.num_joints,))
    return h


def full_relation_attention(h: Tensor, layer: int, state: EncoderState) -> Tuple[Tensor, np.ndarray]:
    """All H heads of one layer before O: (B, f, J, d) concatenated head outputs and weights.

    Head k fills channels k*d_k .. (k+1)*d_k of the concatenation.
    """
    cfg = state.config
    B, f, J, d = h.shape
    prefix = f"layers.{layer}.attn"
    x = ops.reshape(h, (B * f, 1, J, d))
    q = ops.matmul(x, ops.swapaxes(state[f"{prefix}.query"], -1, -2))  # (N, H, J, d_k)
    k = ops.matmul(x, ops.swapaxes(state[f"{prefix}.key"], -1, -2))
    v = ops.matmul(x, ops.swapaxes(state[f"{prefix}.value"], -1, -2))
    scores = ops.scale(ops.matmul(q, ops.swapaxes(k, -1, -2)), 1.0 / np.sqrt(cfg.d_k))
    weights = ops.softmax(scores)  # (N, H, J, J)
    heads = ops.matmul(weights, v)
    merged = ops.reshape(ops.transpose(heads, (0, 2, 1, 3)), (B, f, J, cfg.heads * cfg.d_k))
    return merged, weights.data.reshape(B, f, cfg.heads, J, J)


def fr_layer(
    h: Tensor,
    layer: int,
    state: EncoderState,
    training: bool = True,
    return_attention: bool = False,
):
    """One full-relation layer: attention, residual + norm, FFN, residual + norm."""
    cfg = state.config
    if h.ndim != 4 or h.shape[-1] != cfg.d:
        raise DimensionError("fr_layer", h.shape, (cfg.d,))
    prefix = f"layers.{layer}"
    merged, weights = full_relation_attention(h, layer, state)
    h_hat = ops.linear(merged, state[f"{prefix}.attn.out"])
    h_bar = ops.batch_norm(
        ops.add(h, h_hat),
        state[f"{prefix}.norm1.weight"],
        state[f"{prefix}.norm1.bias"],
        state.buffers[f"{prefix}.norm1"],
        training,
    )
    ffn = ops.linear(ops.relu(ops.linear(h_bar, state[f"{prefix}.ffn.w1"])), state[f"{prefix}.ffn.w2"])
    out = ops.batch_norm(
        ops.add(h_bar, ffn),
        state[f"{prefix}.norm2.weight"],
        state[f"{prefix}.norm2.bias"],
        state.buffers[f"{prefix}.norm2"],
        training,
    )
    if return_attention:
        return out, weights
    return out


def encode(
    batch: Union[Batch, np.ndarray, Tensor],
    spec: Optional[SkeletonGraphSpec],
    state: EncoderState,
    training: bool = True,
    return_attention: bool = False,
) -> GraphRepresentations:
    """Embed, run every layer, then mean-pool joints per frame and frames per sequence."""
    h = embed_nodes(batch, spec, state)
    attention = [] if return_attention else None
    for layer in range(state.config.layers):
        if return_attention:
            h, weights = fr_layer(h, layer, state, training, return_attention=True)
            attention.append(weights)
        else:
            h = fr_layer(h, layer, state, training)
    skeleton = ops.mean(h, axis=2)
    sequence = ops.mean(skeleton, axis=1)
    return GraphRepresentations(h, skeleton, sequence, attention)
