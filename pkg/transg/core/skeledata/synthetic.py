"""Synthetic gait skeletons with identity-specific body shape and motion.

Each identity gets a bone-length profile and a gait signature (per-joint
sinusoids plus a walking frequency). A sequence animates the identity's
skeleton from a random phase and adds Gaussian coordinate noise.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError
from ..graphpe import SkeletonGraphSpec
from ..numerics import SeededRng
from .model import SPLITS, SkeletonSequence
from .topologies import match_topology, tree_layout

logger = logging.getLogger(__name__)

BONE_SCALE_RANGE = (0.85, 1.15)
AMPLITUDE_RANGE = (0.01, 0.06)
FREQUENCY_RANGE = (0.3, 0.7)  # radians per frame
DEFAULT_NOISE = 0.01


@dataclass(eq=False)
class IdentityProfile:
    identity: int
    bone_scale: np.ndarray  # (J,), scale of the bone to each joint's parent
    amplitude: np.ndarray  # (J, 3)
    phase: np.ndarray  # (J, 3)
    frequency: float


def skeleton_tree(
    num_joints: int, edges, root: int = 0
) -> Tuple[np.ndarray, List[int]]:
    """Breadth-first parents (-1 for component roots) and the visit order."""
    neighbors: List[List[int]] = [[] for _ in range(num_joints)]
    for i, j in edges:
        neighbors[i].append(j)
        neighbors[j].append(i)
    parents = np.full(num_joints, -1)
    visited = np.zeros(num_joints, dtype=bool)
    order: List[int] = []
    for start in [root] + [j for j in range(num_joints) if j != root]:
        if visited[start]:
            continue
        visited[start] = True
        queue = [start]
        while queue:
            node = queue.pop(0)
            order.append(node)
            for child in sorted(neighbors[node]):
                if not visited[child]:
                    visited[child] = True
                    parents[child] = node
                    queue.append(child)
    return parents, order


def sample_profiles(
    n_ids: int, num_joints: int, rng: SeededRng, first_identity: int = 1
) -> List[IdentityProfile]:
    profiles = []
    for k in range(n_ids):
        profiles.append(
            IdentityProfile(
                identity=first_identity + k,
                bone_scale=rng.uniform(*BONE_SCALE_RANGE, size=num_joints),
                amplitude=rng.uniform(*AMPLITUDE_RANGE, size=(num_joints, 3)),
                phase=rng.uniform(0.0, 2.0 * np.pi, size=(num_joints, 3)),
                frequency=float(rng.uniform(*FREQUENCY_RANGE)),
            )
        )
    return profiles


def animate(
    profile: IdentityProfile,
    rest_pose: np.ndarray,
    parents: np.ndarray,
    order: List[int],
    num_frames: int,
    offset: float,
) -> np.ndarray:
    """Noise-free frames (num_frames, J, 3) for one phase ``offset``."""
    t = np.arange(num_frames)[:, None, None]
    wave = profile.amplitude * np.sin(profile.frequency * t + profile.phase + offset)
    frames = np.zeros((num_frames, rest_pose.shape[0], 3))
    for joint in order:
        parent = parents[joint]
        if parent < 0:
            frames[:, joint] = rest_pose[joint] + wave[:, joint]
        else:
            bone = profile.bone_scale[joint] * (rest_pose[joint] - rest_pose[parent])
            frames[:, joint] = frames[:, parent] + bone + wave[:, joint]
    return frames


def _rest_pose(spec: SkeletonGraphSpec, root_joint: int, rest_pose: Optional[np.ndarray]):
    if rest_pose is not None:
        return np.asarray(rest_pose, dtype=np.float64)
    topology = match_topology(spec.num_joints, spec.edges)
    if topology is not None:
        return topology.rest_pose
    return tree_layout(spec.num_joints, spec.edges, root_joint)


def generate_splits(
    n_ids: int,
    counts: Dict[str, int],
    f: int,
    spec: SkeletonGraphSpec,
    rng: SeededRng,
    noise: float = DEFAULT_NOISE,
    root_joint: int = 0,
    rest_pose: Optional[np.ndarray] = None,
) -> Dict[str, List[SkeletonSequence]]:
    """Sequences for every split in ``counts`` (per identity), sharing identity profiles."""
    if n_ids < 2:
        raise ConfigurationError(f"re-identification needs at least 2 identities, got {n_ids}")
    if f < 1:
        raise ConfigurationError(f"sequence length must be >= 1, got {f}")
    unknown = sorted(set(counts) - set(SPLITS))
    if unknown:
        raise ConfigurationError(f"unknown split(s) {unknown}; expected {list(SPLITS)}")

    pose = _rest_pose(spec, root_joint, rest_pose)
    if pose.shape != (spec.num_joints, 3):
        raise ConfigurationError(
            f"rest pose has shape {pose.shape}, graph has {spec.num_joints} joints"
        )
    parents, order = skeleton_tree(spec.num_joints, spec.edges, root_joint)
    profiles = sample_profiles(n_ids, spec.num_joints, rng)

    splits: Dict[str, List[SkeletonSequence]] = {}
    for split in SPLITS:
        per_id = counts.get(split, 0)
        sequences = []
        for profile in profiles:
            for k in range(per_id):
                offset = float(rng.uniform(0.0, 2.0 * np.pi))
                frames = animate(profile, pose, parents, order, f, offset)
                if noise > 0:
                    frames = frames + rng.normal(0.0, noise, size=frames.shape)
                sequences.append(
                    SkeletonSequence(
                        frames=frames,
                        identity=profile.identity,
                        source_id=f"synth:{split}:{profile.identity}:{k}",
                        split=split,
                    )
                )
        splits[split] = sequences
    logger.debug(
        f"Generated {n_ids} identities: "
        + ", ".join(f"{split}={len(seqs)}" for split, seqs in splits.items())
    )
    return splits


def generate_synthetic(
    n_ids: int,
    seqs_per_id: int,
    f: int,
    spec: SkeletonGraphSpec,
    rng: SeededRng,
    noise: float = DEFAULT_NOISE,
    root_joint: int = 0,
    rest_pose: Optional[np.ndarray] = None,
) -> List[SkeletonSequence]:
    """``n_ids * seqs_per_id`` training sequences, identities 1..n_ids."""
    return generate_splits(
        n_ids, {"train": seqs_per_id}, f, spec, rng, noise, root_joint, rest_pose
    )["train"]
