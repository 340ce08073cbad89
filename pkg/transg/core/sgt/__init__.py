from .encoder import GraphRepresentations, embed_nodes, encode, fr_layer, full_relation_attention
from .state import EncoderState, init_encoder, new_encoder_state, uniform_init

__all__ = [
    "EncoderState",
    "GraphRepresentations",
    "init_encoder",
    "new_encoder_state",
    "uniform_init",
    "embed_nodes",
    "fr_layer",
    "full_relation_attention",
    "encode",
]
