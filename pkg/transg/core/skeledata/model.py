from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import SchemaError
from ..formatters import ManifestDocument, SplitFiles
from ..graphpe import SkeletonGraphSpec

SPLITS = ("train", "probe", "gallery")
UNLABELED = -1


@dataclass(eq=False)
class SkeletonSequence:
    """One length-f window of a recording: frames (f, J, 3) in meters."""

    frames: np.ndarray
    identity: int
    source_id: str
    split: str = "train"

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[-1] != 3 or self.frames.shape[0] < 1:
            raise SchemaError(
                f"sequence {self.source_id}: frames must be (f>=1, J, 3), got {self.frames.shape}"
            )
        if not np.all(np.isfinite(self.frames)):
            raise SchemaError(f"sequence {self.source_id}: non-finite coordinates")

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def num_joints(self) -> int:
        return int(self.frames.shape[1])

    @property
    def labeled(self) -> bool:
        return self.identity != UNLABELED


@dataclass
class DatasetManifest:
    name: str
    num_joints: int
    seq_len: int
    edges: List[Tuple[int, int]]
    root_joint: int = 0
    root_centering: bool = True
    scale: str = "joint"
    files: Dict[str, List[str]] = field(default_factory=lambda: {s: [] for s in SPLITS})
    path: Optional[Path] = None

    @classmethod
    def from_document(cls, doc: ManifestDocument, path: Optional[Path] = None) -> "DatasetManifest":
        return cls(
            name=doc.name,
            num_joints=doc.J,
            seq_len=doc.f,
            edges=[tuple(e) for e in doc.edges],
            root_joint=doc.root_joint,
            root_centering=doc.root_centering,
            scale=doc.scale,
            files={s: list(getattr(doc.files, s)) for s in SPLITS},
            path=path,
        )

    def to_document(self) -> ManifestDocument:
        return ManifestDocument(
            name=self.name,
            J=self.num_joints,
            f=self.seq_len,
            edges=[list(e) for e in self.edges],
            root_joint=self.root_joint,
            root_centering=self.root_centering,
            scale=self.scale,
            files=SplitFiles(**{s: self.files.get(s, []) for s in SPLITS}),
        )

    def resolve(self, relative: str) -> Path:
        base = self.path.parent if self.path is not None else Path(".")
        return base / relative


@dataclass(eq=False)
class Batch:
    """B stacked sequences: frames (B, f, J, 3), labels (B,), pool indices (B,)."""

    frames: np.ndarray
    labels: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.frames.shape[0])

    @classmethod
    def from_sequences(
        cls, sequences: List[SkeletonSequence], indices: Optional[np.ndarray] = None
    ) -> "Batch":
        if indices is None:
            indices = np.arange(len(sequences))
        if not sequences:
            return cls(np.zeros((0, 0, 0, 3)), np.zeros(0, dtype=np.int64), np.asarray(indices))
        return cls(
            frames=np.stack([s.frames for s in sequences]),
            labels=np.array([s.identity for s in sequences], dtype=np.int64),
            indices=np.asarray(indices, dtype=np.int64),
        )


@dataclass
class Dataset:
    """A loaded manifest: graph, per-split sequences and ingestion counts.

    ``graph`` is the graph the sequences live on; with a coarse ``scale`` it is
    the pooled graph, not the manifest's joint graph.
    """

    manifest: DatasetManifest
    graph: SkeletonGraphSpec
    splits: Dict[str, List[SkeletonSequence]]
    dropped: int = 0

    @property
    def train(self) -> List[SkeletonSequence]:
        return self.splits.get("train", [])

    @property
    def probe(self) -> List[SkeletonSequence]:
        return self.splits.get("probe", [])

    @property
    def gallery(self) -> List[SkeletonSequence]:
        return self.splits.get("gallery", [])

    @property
    def sequences(self) -> List[SkeletonSequence]:
        return [s for split in SPLITS for s in self.splits.get(split, [])]

    @property
    def num_joints(self) -> int:
        return self.graph.num_joints

    @property
    def seq_len(self) -> int:
        return self.manifest.seq_len

    @property
    def has_eval_split(self) -> bool:
        return bool(self.probe) and bool(self.gallery)

    def identities(self, split: str = "train") -> List[int]:
        return sorted({s.identity for s in self.splits.get(split, []) if s.labeled})
