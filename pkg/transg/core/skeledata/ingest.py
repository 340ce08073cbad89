import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ..errors import ConfigurationError, EmptyDatasetError, ParseError, SchemaError
from ..formatters import ManifestDocument, SequenceRecord
from ..graphpe import build_graph, coarsen, edge_violations, pool_coordinates
from ..utils import worker_count
from .model import SPLITS, Dataset, DatasetManifest, SkeletonSequence
from .topologies import match_topology

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _pydantic_summary(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in item['loc']) or '<root>'}: {item['msg']}"
        for item in error.errors()
    )


def load_manifest(path: PathLike) -> DatasetManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=str(path), line=e.lineno) from None
    try:
        doc = ManifestDocument.model_validate(raw)
    except ValidationError as e:
        raise SchemaError(f"{path}: invalid manifest: {_pydantic_summary(e)}") from None

    problems = edge_violations(doc.J, doc.edges)
    if not 0 <= doc.root_joint < doc.J:
        problems.append(f"root_joint {doc.root_joint} outside [0, {doc.J})")
    if problems:
        raise SchemaError(f"{path}: " + "; ".join(problems), {"violations": problems})
    return DatasetManifest.from_document(doc, path=path)


def window_recording(frames: np.ndarray, seq_len: int) -> List[np.ndarray]:
    """Consecutive non-overlapping windows of ``seq_len`` frames; a short tail is dropped."""
    count = frames.shape[0] // seq_len
    return [frames[w * seq_len : (w + 1) * seq_len] for w in range(count)]


def read_split_file(
    path: Path, manifest: DatasetManifest, split: str
) -> Tuple[List[SkeletonSequence], int]:
    """Parse one JSON Lines file into windows; returns (sequences, dropped recordings)."""
    sequences, dropped = [], 0
    try:
        handle = path.open()
    except FileNotFoundError:
        raise ConfigurationError(f"data file not found: {path}") from None

    with handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = SequenceRecord.model_validate(json.loads(line))
            except json.JSONDecodeError as e:
                raise ParseError(e.msg, path=str(path), line=line_no) from None
            except ValidationError as e:
                raise ParseError(_pydantic_summary(e), path=str(path), line=line_no) from None

            joint_counts = sorted({len(frame) for frame in record.frames})
            if any(count != manifest.num_joints for count in joint_counts):
                raise SchemaError(
                    f"{path}:{line_no}: record has {joint_counts} joints per frame, "
                    f"manifest J is {manifest.num_joints}",
                    {"path": str(path), "line": line_no},
                )
            frames = np.asarray(record.frames, dtype=np.float64).reshape(
                len(record.frames), manifest.num_joints, 3
            )
            if not np.all(np.isfinite(frames)):
                raise SchemaError(
                    f"{path}:{line_no}: non-finite coordinates", {"path": str(path), "line": line_no}
                )
            if frames.shape[0] < manifest.seq_len:
                dropped += 1
                continue
            if manifest.root_centering:
                root = manifest.root_joint
                frames = frames - frames[:, root : root + 1, :]
            for w, window in enumerate(window_recording(frames, manifest.seq_len)):
                sequences.append(
                    SkeletonSequence(
                        frames=window,
                        identity=record.id,
                        source_id=f"{path.stem}:{line_no}:{w}",
                        split=split,
                    )
                )
    return sequences, dropped


def load_dataset(manifest_path: PathLike) -> Dataset:
    """Load every split a manifest names.

    Files are read in parallel (up to TRANSG_THREADS); output order follows
    the manifest. With ``scale`` "part" or "body" the joints are pooled onto
    the coarse graph of the matching built-in layout.
    """
    manifest = load_manifest(manifest_path)
    graph = build_graph(manifest.num_joints, manifest.edges)
    pool = None
    if manifest.scale != "joint":
        topology = match_topology(manifest.num_joints, manifest.edges)
        if topology is None:
            raise ConfigurationError(
                f"scale {manifest.scale!r} needs a built-in layout; J={manifest.num_joints} "
                "with these edges matches none"
            )
        graph, pool = coarsen(graph, topology.partition(manifest.scale))

    jobs = [(split, manifest.resolve(name)) for split in SPLITS for name in manifest.files.get(split, [])]
    with ThreadPoolExecutor(max_workers=worker_count()) as executor:
        results = list(executor.map(lambda job: read_split_file(job[1], manifest, job[0]), jobs))

    splits: Dict[str, List[SkeletonSequence]] = {split: [] for split in SPLITS}
    dropped = 0
    for (split, _), (sequences, short) in zip(jobs, results):
        splits[split].extend(sequences)
        dropped += short

    if pool is not None:
        for sequences in splits.values():
            for seq in sequences:
                seq.frames = pool_coordinates(seq.frames, pool)

    total = sum(len(s) for s in splits.values())
    if dropped:
        logger.warning(f"Dropped {dropped} recording(s) shorter than f={manifest.seq_len}")
    if total == 0:
        raise EmptyDatasetError(path=str(manifest_path))

    probe_ids = {s.identity for s in splits["probe"]}
    gallery_ids = {s.identity for s in splits["gallery"]}
    if probe_ids and gallery_ids and not probe_ids & gallery_ids:
        raise SchemaError(
            "probe and gallery share no identity; evaluation would be vacuous",
            {"probe": sorted(probe_ids), "gallery": sorted(gallery_ids)},
        )

    logger.info(
        f"Loaded {manifest.name}: "
        + ", ".join(f"{split}={len(splits[split])}" for split in SPLITS)
        + f" sequences (J={graph.num_joints}, f={manifest.seq_len}, scale={manifest.scale})"
    )
    return Dataset(manifest=manifest, graph=graph, splits=splits, dropped=dropped)


def write_dataset(
    out_dir: PathLike,
    name: str,
    edges: Sequence[Sequence[int]],
    seq_len: int,
    splits: Dict[str, List[SkeletonSequence]],
    root_joint: int = 0,
    root_centering: bool = True,
    force: bool = False,
) -> Path:
    """Write ``manifest.json`` plus one ``<split>.jsonl`` per non-empty split.

    Output is byte-identical for identical inputs. A non-empty ``out_dir`` is
    refused unless ``force``.
    """
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise ConfigurationError(
            f"output directory {out_dir} is not empty; pass --force to overwrite"
        )
    out_dir.mkdir(parents=True, exist_ok=True)

    num_joints: Optional[int] = None
    files: Dict[str, List[str]] = {split: [] for split in SPLITS}
    for split in SPLITS:
        sequences = splits.get(split, [])
        if not sequences:
            continue
        filename = f"{split}.jsonl"
        with (out_dir / filename).open("w") as handle:
            for seq in sequences:
                num_joints = seq.num_joints
                handle.write(json.dumps({"id": int(seq.identity), "frames": seq.frames.tolist()}))
                handle.write("\n")
        files[split].append(filename)

    if num_joints is None:
        raise EmptyDatasetError()
    manifest = DatasetManifest(
        name=name,
        num_joints=num_joints,
        seq_len=seq_len,
        edges=[tuple(e) for e in edges],
        root_joint=root_joint,
        root_centering=root_centering,
        files=files,
    )
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest.to_document().model_dump(), indent=2, sort_keys=True) + "\n")
    logger.info(
        f"Wrote {name} to {out_dir}: "
        + ", ".join(f"{split}={len(splits.get(split, []))}" for split in SPLITS)
    )
    return path
