"""Checkpoint directories.

``manifest.json`` holds the config snapshot, graph, RNG state and one entry
per tensor; ``params.bin`` holds every tensor as little-endian float32,
concatenated in manifest order (parameters, buffers, Adam first moments,
Adam second moments).
"""

import json
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ..config import TrainConfig
from ..errors import IncompatibleCheckpointError, ParseError
from ..formatters import CheckpointDocument, TensorEntry
from ..numerics import AdamState
from ..sgt import EncoderState

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
MANIFEST_NAME = "manifest.json"
PARAMS_NAME = "params.bin"
STORAGE_DTYPE = np.dtype("<f4")


@dataclass(eq=False)
class Checkpoint:
    config: TrainConfig
    state: EncoderState
    adam: AdamState
    epoch: int
    rng_state: Dict[str, Any]
    num_joints: int
    edges: List[Tuple[int, int]]
    seq_len: int
    class_ids: List[int] = field(default_factory=list)
    manifest: Optional[str] = None
    best_map: Optional[float] = None


def _tensors(checkpoint: Checkpoint) -> List[Tuple[str, str, np.ndarray]]:
    state, adam = checkpoint.state, checkpoint.adam
    tensors = [(name, "param", p.data) for name, p in state.params.items()]
    tensors += [(name, "buffer", value) for name, value in state.buffer_arrays().items()]
    for kind, moments in (("adam_m", adam.m), ("adam_v", adam.v)):
        tensors += [
            (name, kind, moments.get(name, np.zeros_like(p.data))) for name, p in state.params.items()
        ]
    return tensors


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries, chunks, offset = [], [], 0
    for name, kind, value in _tensors(checkpoint):
        stored = np.ascontiguousarray(value, dtype=STORAGE_DTYPE).reshape(-1)
        entries.append(
            TensorEntry(name=name, kind=kind, shape=list(value.shape), offset=offset, count=int(stored.size))
        )
        chunks.append(stored.tobytes())
        offset += int(stored.size)

    doc = CheckpointDocument(
        version=CHECKPOINT_VERSION,
        epoch=checkpoint.epoch,
        config=checkpoint.config.to_dict(),
        manifest=checkpoint.manifest,
        num_joints=checkpoint.num_joints,
        edges=[tuple(e) for e in checkpoint.edges],
        seq_len=checkpoint.seq_len,
        class_ids=list(checkpoint.class_ids),
        best_map=checkpoint.best_map,
        adam_step=checkpoint.adam.t,
        rng_state=checkpoint.rng_state,
        tensors=entries,
    )
    (path / PARAMS_NAME).write_bytes(b"".join(chunks))
    (path / MANIFEST_NAME).write_text(json.dumps(doc.model_dump(), indent=2, sort_keys=True) + "\n")
    logger.info(f"Saved checkpoint (epoch {checkpoint.epoch}, {offset} values) to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Read a checkpoint directory; nothing is built unless every byte is accounted for."""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    try:
        raw = json.loads(manifest_path.read_text())
    except FileNotFoundError:
        raise ParseError("checkpoint manifest not found", path=str(manifest_path)) from None
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=str(manifest_path), line=e.lineno) from None

    version = raw.get("version") if isinstance(raw, dict) else None
    if version != CHECKPOINT_VERSION:
        raise IncompatibleCheckpointError(
            f"checkpoint format version {version!r} is not supported (expected {CHECKPOINT_VERSION})",
            {"found": version, "expected": CHECKPOINT_VERSION},
        )
    try:
        doc = CheckpointDocument.model_validate(raw)
    except ValidationError as e:
        raise ParseError(f"invalid checkpoint manifest: {e.error_count()} error(s)", path=str(manifest_path)) from None

    params_path = path / PARAMS_NAME
    try:
        blob = params_path.read_bytes()
    except FileNotFoundError:
        raise ParseError("checkpoint tensor file not found", path=str(params_path)) from None
    expected = sum(entry.count for entry in doc.tensors)
    if len(blob) != expected * STORAGE_DTYPE.itemsize:
        raise ParseError(
            f"tensor file holds {len(blob)} bytes, manifest needs {expected * STORAGE_DTYPE.itemsize}",
            path=str(params_path),
        )
    values = np.frombuffer(blob, dtype=STORAGE_DTYPE).astype(np.float64)

    groups: Dict[str, "OrderedDict[str, np.ndarray]"] = {
        kind: OrderedDict() for kind in ("param", "buffer", "adam_m", "adam_v")
    }
    for entry in doc.tensors:
        if int(np.prod(entry.shape, dtype=np.int64)) != entry.count:
            raise ParseError(f"tensor {entry.name}: shape {entry.shape} does not hold {entry.count} values", path=str(manifest_path))
        chunk = values[entry.offset : entry.offset + entry.count]
        groups[entry.kind][entry.name] = chunk.reshape(entry.shape).copy()

    config = TrainConfig.from_dict(doc.config)
    state = EncoderState.from_arrays(config.sgt, doc.num_joints, doc.seq_len, groups["param"], groups["buffer"])
    adam = AdamState(
        lr=config.lr,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.adam_eps,
        t=doc.adam_step,
        m=dict(groups["adam_m"]),
        v=dict(groups["adam_v"]),
    )
    logger.info(f"Loaded checkpoint (epoch {doc.epoch}, mode {config.mode}) from {path}")
    return Checkpoint(
        config=config,
        state=state,
        adam=adam,
        epoch=doc.epoch,
        rng_state=doc.rng_state,
        num_joints=doc.num_joints,
        edges=[tuple(e) for e in doc.edges],
        seq_len=doc.seq_len,
        class_ids=list(doc.class_ids),
        manifest=doc.manifest,
        best_map=doc.best_map,
    )


def stored_best_map(path: Union[str, Path]) -> Optional[float]:
    """The best mAP recorded in a checkpoint manifest, or None when absent or unreadable."""
    manifest_path = Path(path) / MANIFEST_NAME
    try:
        raw = json.loads(manifest_path.read_text())
    except (FileNotFoundError, json.JSONDecodeError):
        return None
    value = raw.get("best_map") if isinstance(raw, dict) else None
    return float(value) if isinstance(value, (int, float)) else None
