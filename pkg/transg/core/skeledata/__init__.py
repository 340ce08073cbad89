from .ingest import load_dataset, load_manifest, read_split_file, window_recording, write_dataset
from .model import SPLITS, UNLABELED, Batch, Dataset, DatasetManifest, SkeletonSequence
from .sampler import balanced_shape, identity_index, instance_counts, sample_batch
from .synthetic import (
    IdentityProfile,
    animate,
    generate_splits,
    generate_synthetic,
    sample_profiles,
    skeleton_tree,
)
from .topologies import TOPOLOGIES, Topology, get_topology, match_topology, tree_layout

__all__ = [
    "SPLITS",
    "UNLABELED",
    "SkeletonSequence",
    "DatasetManifest",
    "Dataset",
    "Batch",
    "load_dataset",
    "load_manifest",
    "read_split_file",
    "window_recording",
    "write_dataset",
    "sample_batch",
    "balanced_shape",
    "instance_counts",
    "identity_index",
    "generate_synthetic",
    "generate_splits",
    "sample_profiles",
    "animate",
    "skeleton_tree",
    "IdentityProfile",
    "TOPOLOGIES",
    "Topology",
    "get_topology",
    "match_topology",
    "tree_layout",
]
