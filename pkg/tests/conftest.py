import numpy as np
import pytest

from transg.core.config import TrainConfig
from transg.core.graphpe import build_graph
from transg.core.numerics import SeededRng
from transg.core.skeledata import generate_splits, load_dataset, write_dataset

PATH_EDGES = [(0, 1), (1, 2), (2, 3), (3, 4)]


@pytest.fixture
def rng():
    return SeededRng(0)


@pytest.fixture
def path_graph():
    return build_graph(5, PATH_EDGES)


@pytest.fixture
def small_config():
    """Encoder small enough for a few epochs per test on the 5-joint path."""
    return TrainConfig(
        mode="sgt_gpc_stpr",
        seed=3,
        epochs=2,
        batch_size=8,
        instances_per_id=2,
        lr=1e-3,
        d=8,
        heads=2,
        d_k=4,
        layers=1,
        pe_dim=2,
        mask_nodes=1,
        mask_frames=1,
        seq_len=4,
        eval_every=1,
        eval_batch_size=16,
    )


def write_small_dataset(out_dir, seed=0, n_ids=4, train=4, probe=2, gallery=2, frames=4):
    graph = build_graph(5, PATH_EDGES)
    splits = generate_splits(
        n_ids, {"train": train, "probe": probe, "gallery": gallery}, frames, graph, SeededRng(seed)
    )
    return write_dataset(out_dir, "path5", PATH_EDGES, frames, splits)


@pytest.fixture
def small_manifest(tmp_path):
    return write_small_dataset(tmp_path / "data")


@pytest.fixture
def small_dataset(small_manifest):
    return load_dataset(small_manifest)


def random_connected_graph(rng: np.random.Generator, num_joints: int, extra: int):
    """A random spanning tree plus ``extra`` random chords."""
    edges = {(int(rng.integers(0, j)), j) for j in range(1, num_joints)}
    while extra > 0:
        i, j = sorted(int(v) for v in rng.choice(num_joints, size=2, replace=False))
        if (i, j) not in edges:
            edges.add((i, j))
            extra -= 1
    return sorted(edges)
