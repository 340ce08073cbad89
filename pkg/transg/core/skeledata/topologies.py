"""Built-in skeleton layouts.

Joint order follows the sensor SDKs: Kinect v1 (20 joints, IAS-Lab / BIWI /
KGBD recordings), Kinect v2 (25 joints, KS20) and a 14-joint layout typical
of 2D-to-3D pose estimators on RGB gait video. Rest poses are in meters with
y up and the subject facing +z.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class Topology:
    name: str
    joint_names: Tuple[str, ...]
    edges: Tuple[Tuple[int, int], ...]
    root_joint: int
    rest_pose: np.ndarray = field(repr=False)
    # coarse scale -> joint groups
    partitions: Dict[str, Tuple[Tuple[int, ...], ...]] = field(default_factory=dict)

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    def partition(self, scale: str) -> Tuple[Tuple[int, ...], ...]:
        if scale not in self.partitions:
            raise ConfigurationError(
                f"topology {self.name!r} has no {scale!r} partition; "
                f"available: {sorted(self.partitions)}"
            )
        return self.partitions[scale]


_KINECT20_JOINTS = (
    "hip_center", "spine", "shoulder_center", "head",
    "shoulder_left", "elbow_left", "wrist_left", "hand_left",
    "shoulder_right", "elbow_right", "wrist_right", "hand_right",
    "hip_left", "knee_left", "ankle_left", "foot_left",
    "hip_right", "knee_right", "ankle_right", "foot_right",
)

_KINECT20_EDGES = (
    (0, 1), (1, 2), (2, 3), (2, 4), (4, 5), (5, 6), (6, 7),
    (2, 8), (8, 9), (9, 10), (10, 11),
    (0, 12), (12, 13), (13, 14), (14, 15),
    (0, 16), (16, 17), (17, 18), (18, 19),
)

_KINECT20_REST = np.array(
    [
        [0.00, 1.00, 0.00], [0.00, 1.20, 0.00], [0.00, 1.45, 0.00], [0.00, 1.65, 0.00],
        [-0.18, 1.42, 0.00], [-0.20, 1.15, 0.00], [-0.22, 0.90, 0.00], [-0.22, 0.82, 0.00],
        [0.18, 1.42, 0.00], [0.20, 1.15, 0.00], [0.22, 0.90, 0.00], [0.22, 0.82, 0.00],
        [-0.10, 0.95, 0.00], [-0.10, 0.52, 0.00], [-0.10, 0.10, 0.00], [-0.10, 0.05, 0.10],
        [0.10, 0.95, 0.00], [0.10, 0.52, 0.00], [0.10, 0.10, 0.00], [0.10, 0.05, 0.10],
    ]
)

_KINECT25_JOINTS = (
    "spine_base", "spine_mid", "neck", "head",
    "shoulder_left", "elbow_left", "wrist_left", "hand_left",
    "shoulder_right", "elbow_right", "wrist_right", "hand_right",
    "hip_left", "knee_left", "ankle_left", "foot_left",
    "hip_right", "knee_right", "ankle_right", "foot_right",
    "spine_shoulder", "hand_tip_left", "thumb_left", "hand_tip_right", "thumb_right",
)

_KINECT25_EDGES = (
    (0, 1), (1, 20), (20, 2), (2, 3),
    (20, 4), (4, 5), (5, 6), (6, 7), (7, 21), (6, 22),
    (20, 8), (8, 9), (9, 10), (10, 11), (11, 23), (10, 24),
    (0, 12), (12, 13), (13, 14), (14, 15),
    (0, 16), (16, 17), (17, 18), (18, 19),
)

_KINECT25_REST = np.array(
    [
        [0.00, 1.00, 0.00], [0.00, 1.20, 0.00], [0.00, 1.50, 0.00], [0.00, 1.65, 0.00],
        [-0.18, 1.42, 0.00], [-0.20, 1.15, 0.00], [-0.22, 0.90, 0.00], [-0.22, 0.82, 0.00],
        [0.18, 1.42, 0.00], [0.20, 1.15, 0.00], [0.22, 0.90, 0.00], [0.22, 0.82, 0.00],
        [-0.10, 0.95, 0.00], [-0.10, 0.52, 0.00], [-0.10, 0.10, 0.00], [-0.10, 0.05, 0.10],
        [0.10, 0.95, 0.00], [0.10, 0.52, 0.00], [0.10, 0.10, 0.00], [0.10, 0.05, 0.10],
        [0.00, 1.42, 0.00], [-0.22, 0.74, 0.00], [-0.19, 0.83, 0.03],
        [0.22, 0.74, 0.00], [0.19, 0.83, 0.03],
    ]
)

_POSE14_JOINTS = (
    "head", "neck",
    "shoulder_right", "elbow_right", "wrist_right",
    "shoulder_left", "elbow_left", "wrist_left",
    "hip_right", "knee_right", "ankle_right",
    "hip_left", "knee_left", "ankle_left",
)

_POSE14_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7),
    (1, 8), (8, 9), (9, 10), (1, 11), (11, 12), (12, 13),
)

_POSE14_REST = np.array(
    [
        [0.00, 1.65, 0.00], [0.00, 1.45, 0.00],
        [0.18, 1.42, 0.00], [0.20, 1.15, 0.00], [0.22, 0.90, 0.00],
        [-0.18, 1.42, 0.00], [-0.20, 1.15, 0.00], [-0.22, 0.90, 0.00],
        [0.10, 0.95, 0.00], [0.10, 0.52, 0.00], [0.10, 0.10, 0.00],
        [-0.10, 0.95, 0.00], [-0.10, 0.52, 0.00], [-0.10, 0.10, 0.00],
    ]
)

TOPOLOGIES: Dict[str, Topology] = {
    "kinect20": Topology(
        name="kinect20",
        joint_names=_KINECT20_JOINTS,
        edges=_KINECT20_EDGES,
        root_joint=0,
        rest_pose=_KINECT20_REST,
        partitions={
            "part": (
                (0, 1), (2, 3), (4, 5), (6, 7), (8, 9),
                (10, 11), (12, 13), (14, 15), (16, 17), (18, 19),
            ),
            "body": ((0, 1, 2, 3), (4, 5, 6, 7), (8, 9, 10, 11), (12, 13, 14, 15), (16, 17, 18, 19)),
        },
    ),
    "kinect25": Topology(
        name="kinect25",
        joint_names=_KINECT25_JOINTS,
        edges=_KINECT25_EDGES,
        root_joint=0,
        rest_pose=_KINECT25_REST,
        partitions={
            "part": (
                (0, 1), (20, 2, 3), (4, 5), (6, 7, 21, 22), (8, 9),
                (10, 11, 23, 24), (12, 13), (14, 15), (16, 17), (18, 19),
            ),
            "body": (
                (0, 1, 20, 2, 3), (4, 5, 6, 7, 21, 22), (8, 9, 10, 11, 23, 24),
                (12, 13, 14, 15), (16, 17, 18, 19),
            ),
        },
    ),
    "pose14": Topology(
        name="pose14",
        joint_names=_POSE14_JOINTS,
        edges=_POSE14_EDGES,
        root_joint=1,
        rest_pose=_POSE14_REST,
    ),
}


def get_topology(name: str) -> Topology:
    try:
        return TOPOLOGIES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown skeleton layout {name!r}; choose one of {sorted(TOPOLOGIES)}"
        ) from None


def _edge_set(edges: Sequence[Sequence[int]]):
    return {(min(int(i), int(j)), max(int(i), int(j))) for i, j in edges}


def match_topology(num_joints: int, edges: Sequence[Sequence[int]]) -> Optional[Topology]:
    """The built-in layout with exactly this joint count and edge set, if any."""
    wanted = _edge_set(edges)
    for topology in TOPOLOGIES.values():
        if topology.num_joints == num_joints and _edge_set(topology.edges) == wanted:
            return topology
    return None


def tree_layout(num_joints: int, edges: Sequence[Sequence[int]], root: int = 0) -> np.ndarray:
    """Deterministic rest pose for an arbitrary graph.

    Joints are placed breadth-first from ``root``; a child of a node sits 0.2 m
    away in a direction fanned out by its sibling index. Further components
    start 0.5 m to the side.
    """
    neighbors: List[List[int]] = [[] for _ in range(num_joints)]
    for i, j in edges:
        neighbors[i].append(j)
        neighbors[j].append(i)
    for row in neighbors:
        row.sort()

    pose = np.zeros((num_joints, 3))
    placed = np.zeros(num_joints, dtype=bool)
    starts = [root] + [j for j in range(num_joints) if j != root]
    component = 0
    for start in starts:
        if placed[start]:
            continue
        pose[start] = [0.5 * component, 1.0, 0.0]
        placed[start] = True
        component += 1
        frontier = [(start, 0)]
        while frontier:
            node, depth = frontier.pop(0)
            children = [c for c in neighbors[node] if not placed[c]]
            for k, child in enumerate(children):
                angle = 2.0 * np.pi * (k + 0.5) / len(children) + 0.7 * depth
                direction = np.array([np.cos(angle), -0.8, np.sin(angle)])
                pose[child] = pose[node] + 0.2 * direction / np.linalg.norm(direction)
                placed[child] = True
                frontier.append((child, depth + 1))
    return pose
