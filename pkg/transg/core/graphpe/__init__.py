"""Skeleton graphs and their Laplacian positional encodings.

A graph is built once per dataset from the manifest's joint count and edge
list; every skeleton of that dataset shares it.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, DimensionError
from ..numerics import sym_eig

logger = logging.getLogger(__name__)

TRIVIAL_EIGENVALUE_TOLERANCE = 1e-8

Edge = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class SkeletonGraphSpec:
    """Adjacency, degree and normalized Laplacian of a skeleton graph.

    ``pe_matrix`` is J x K; it is J x 0 until ``compute_pe`` fills it.
    """

    num_joints: int
    edges: Tuple[Edge, ...]
    adjacency: np.ndarray = field(repr=False)
    degree: np.ndarray = field(repr=False)
    laplacian: np.ndarray = field(repr=False)
    pe_matrix: np.ndarray = field(repr=False, default=None)
    pe_eigenvalues: np.ndarray = field(repr=False, default=None)
    spectrum: Optional[np.ndarray] = field(repr=False, default=None)

    def __post_init__(self):
        if self.pe_matrix is None:
            object.__setattr__(self, "pe_matrix", np.zeros((self.num_joints, 0)))
        if self.pe_eigenvalues is None:
            object.__setattr__(self, "pe_eigenvalues", np.zeros(0))

    @property
    def pe_dim(self) -> int:
        return int(self.pe_matrix.shape[1])

    @property
    def edge_list(self) -> List[List[int]]:
        return [[i, j] for i, j in self.edges]


def edge_violations(num_joints: int, edges: Sequence[Sequence[int]]) -> List[str]:
    """Every problem with an edge list: range, self-loops, duplicates."""
    problems = []
    seen = set()
    for edge in edges:
        if len(edge) != 2:
            problems.append(f"edge {list(edge)} must have exactly two endpoints")
            continue
        i, j = int(edge[0]), int(edge[1])
        if not (0 <= i < num_joints and 0 <= j < num_joints):
            problems.append(f"edge ({i}, {j}) references a joint outside [0, {num_joints})")
            continue
        if i == j:
            problems.append(f"edge ({i}, {j}) is a self-loop")
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            problems.append(f"edge ({i}, {j}) is a duplicate")
        seen.add(key)
    return problems


def build_graph(num_joints: int, edges: Sequence[Sequence[int]]) -> SkeletonGraphSpec:
    """Adjacency A, degree D and Laplacian I - D^-1/2 A D^-1/2 (no PE yet)."""
    if num_joints < 1:
        raise ConfigurationError(f"a skeleton graph needs at least one joint, got {num_joints}")
    problems = edge_violations(num_joints, edges)
    if problems:
        raise ConfigurationError.from_violations(problems)

    normalized = tuple(sorted((min(int(i), int(j)), max(int(i), int(j))) for i, j in edges))
    adjacency = np.zeros((num_joints, num_joints))
    for i, j in normalized:
        adjacency[i, j] = adjacency[j, i] = 1.0
    degrees = adjacency.sum(axis=1)

    isolated = [int(i) for i in np.flatnonzero(degrees == 0)]
    if isolated:
        raise ConfigurationError(
            f"isolated joint(s) {isolated}: D^-1/2 is undefined for degree 0",
            isolated=isolated,
        )

    inv_sqrt = 1.0 / np.sqrt(degrees)
    laplacian = np.eye(num_joints) - inv_sqrt[:, None] * adjacency * inv_sqrt[None, :]
    return SkeletonGraphSpec(
        num_joints=num_joints,
        edges=normalized,
        adjacency=adjacency,
        degree=np.diag(degrees),
        laplacian=laplacian,
    )


def compute_pe(spec: SkeletonGraphSpec, K: int, method: str = "eigh") -> SkeletonGraphSpec:
    """Attach the K smallest non-trivial Laplacian eigenvectors as node encodings.

    Eigenvalues at or below the trivial tolerance (one per connected
    component) are skipped. Row i of the result's ``pe_matrix`` is node i's
    encoding.
    """
    if K < 0:
        raise ConfigurationError(f"PE dimension must be >= 0, got {K}")
    values, vectors = sym_eig(spec.laplacian, method=method)
    keep = np.flatnonzero(values > TRIVIAL_EIGENVALUE_TOLERANCE)
    logger.debug(
        f"Laplacian spectrum (J={spec.num_joints}): {np.round(values, 6).tolist()}; "
        f"{spec.num_joints - keep.size} trivial"
    )
    if K > keep.size:
        raise ConfigurationError(
            f"PE dimension {K} exceeds the {keep.size} non-trivial eigenvalues of a "
            f"{spec.num_joints}-joint graph; spectrum: {np.round(values, 8).tolist()}",
            spectrum=values.tolist(),
        )
    chosen = keep[:K]
    return dataclasses.replace(
        spec,
        pe_matrix=vectors[:, chosen].copy(),
        pe_eigenvalues=values[chosen].copy(),
        spectrum=values,
    )


def pooling_matrix(num_joints: int, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """G x J averaging matrix; every joint must belong to exactly one group."""
    owner = np.full(num_joints, -1)
    problems = []
    for g, members in enumerate(groups):
        if not members:
            problems.append(f"group {g} is empty")
        for joint in members:
            if not 0 <= joint < num_joints:
                problems.append(f"group {g} references joint {joint} outside [0, {num_joints})")
            elif owner[joint] >= 0:
                problems.append(f"joint {joint} is in groups {owner[joint]} and {g}")
            else:
                owner[joint] = g
    missing = [int(j) for j in np.flatnonzero(owner < 0)]
    if missing and not problems:
        problems.append(f"joints {missing} belong to no group")
    if problems:
        raise ConfigurationError.from_violations(problems)

    pool = np.zeros((len(groups), num_joints))
    for g, members in enumerate(groups):
        pool[g, list(members)] = 1.0 / len(members)
    return pool


def coarsen(
    spec: SkeletonGraphSpec, groups: Sequence[Sequence[int]]
) -> Tuple[SkeletonGraphSpec, np.ndarray]:
    """Collapse joint groups into single nodes.

    Two groups are adjacent iff some original edge joins them. Returns the
    coarse graph (no PE) and the G x J pooling matrix for coordinates.
    """
    pool = pooling_matrix(spec.num_joints, groups)
    owner = np.argmax(pool > 0, axis=0)
    coarse_edges = sorted(
        {
            (min(owner[i], owner[j]), max(owner[i], owner[j]))
            for i, j in spec.edges
            if owner[i] != owner[j]
        }
    )
    coarse = build_graph(len(groups), [(int(i), int(j)) for i, j in coarse_edges])
    return coarse, pool


def pool_coordinates(frames: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """Group-mean coordinates: (..., J, 3) -> (..., G, 3)."""
    if frames.shape[-2] != pool.shape[1]:
        raise DimensionError("pool_coordinates", frames.shape, pool.shape)
    return np.einsum("gj,...jc->...gc", pool, frames)
