import numpy as np
import pytest

from transg.core.errors import ConfigurationError, DimensionError
from transg.core.graphpe import build_graph, coarsen, compute_pe, pool_coordinates, pooling_matrix
from transg.core.skeledata import get_topology

from conftest import random_connected_graph


def test_build_graph_matrices(path_graph):
    assert path_graph.num_joints == 5
    np.testing.assert_array_equal(np.diag(path_graph.degree), [1, 2, 2, 2, 1])
    np.testing.assert_allclose(path_graph.laplacian, path_graph.laplacian.T)
    np.testing.assert_allclose(np.diag(path_graph.laplacian), 1.0)
    assert path_graph.laplacian[0, 1] == pytest.approx(-1.0 / np.sqrt(2.0))
    assert path_graph.pe_dim == 0


def test_edges_are_normalized_and_sorted():
    spec = build_graph(3, [(2, 1), (1, 0)])
    assert spec.edges == ((0, 1), (1, 2))


def test_every_edge_problem_is_reported_at_once():
    with pytest.raises(ConfigurationError) as info:
        build_graph(4, [(0, 0), (0, 1), (1, 0), (2, 9)])
    violations = info.value.violations
    assert len(violations) == 3
    assert any("self-loop" in v for v in violations)
    assert any("duplicate" in v for v in violations)
    assert any("outside" in v for v in violations)


def test_isolated_joint_is_rejected():
    with pytest.raises(ConfigurationError) as info:
        build_graph(4, [(0, 1), (1, 2)])
    assert info.value.details["isolated"] == [3]


def test_pe_columns_satisfy_the_eigen_equation():
    generator = np.random.default_rng(2)
    for _ in range(5):
        num_joints = int(generator.integers(5, 26))
        spec = compute_pe(build_graph(num_joints, random_connected_graph(generator, num_joints, 2)), 4)
        L, U, values = spec.laplacian, spec.pe_matrix, spec.pe_eigenvalues
        assert U.shape == (num_joints, 4)
        np.testing.assert_allclose(L @ U, U * values[None, :], atol=1e-8)
        assert np.all(values > 1e-8)
        assert np.all(np.diff(values) >= 0)


def test_pe_skips_the_trivial_eigenvector(path_graph):
    spec = compute_pe(path_graph, 4)
    # the trivial vector is proportional to sqrt(degree); none of the PE columns is
    trivial = np.sqrt(np.diag(path_graph.degree))
    trivial /= np.linalg.norm(trivial)
    np.testing.assert_allclose(trivial @ spec.pe_matrix, 0.0, atol=1e-10)


def test_pe_skips_one_trivial_eigenvalue_per_component():
    # two triangles
    spec = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    assert compute_pe(spec, 4).pe_dim == 4
    with pytest.raises(ConfigurationError) as info:
        compute_pe(spec, 5)
    assert "spectrum" in info.value.details


def test_pe_dimension_too_large(path_graph):
    with pytest.raises(ConfigurationError):
        compute_pe(path_graph, 5)


def test_pe_dimension_zero_is_empty(path_graph):
    spec = compute_pe(path_graph, 0)
    assert spec.pe_matrix.shape == (5, 0)


def test_pe_is_deterministic_across_solvers(path_graph):
    a = compute_pe(path_graph, 3, method="eigh")
    b = compute_pe(path_graph, 3, method="jacobi")
    np.testing.assert_allclose(a.pe_matrix, b.pe_matrix, atol=1e-8)


def test_compute_pe_leaves_the_input_graph_untouched(path_graph):
    compute_pe(path_graph, 2)
    assert path_graph.pe_dim == 0


def test_pooling_matrix_rows_average_their_group():
    pool = pooling_matrix(4, [(0, 1), (2, 3)])
    np.testing.assert_allclose(pool, [[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]])


def test_pooling_matrix_rejects_overlaps_and_gaps():
    with pytest.raises(ConfigurationError):
        pooling_matrix(4, [(0, 1), (1, 2)])
    with pytest.raises(ConfigurationError):
        pooling_matrix(4, [(0, 1), (2,)])


@pytest.mark.parametrize("layout,scale,nodes", [("kinect20", "part", 10), ("kinect20", "body", 5), ("kinect25", "part", 10), ("kinect25", "body", 5)])
def test_builtin_partitions_coarsen_to_connected_graphs(layout, scale, nodes):
    topology = get_topology(layout)
    spec = build_graph(topology.num_joints, topology.edges)
    coarse, pool = coarsen(spec, topology.partition(scale))
    assert coarse.num_joints == nodes
    assert pool.shape == (nodes, topology.num_joints)
    np.testing.assert_allclose(pool.sum(axis=1), 1.0)
    # connected: exactly one trivial eigenvalue
    values = np.linalg.eigvalsh(coarse.laplacian)
    assert np.sum(values < 1e-8) == 1


def test_coarse_edges_follow_crossing_edges(path_graph):
    coarse, _ = coarsen(path_graph, [(0, 1), (2,), (3, 4)])
    assert coarse.edges == ((0, 1), (1, 2))


def test_pool_coordinates_takes_group_means():
    frames = np.arange(2 * 4 * 3, dtype=float).reshape(2, 4, 3)
    pooled = pool_coordinates(frames, pooling_matrix(4, [(0, 1), (2, 3)]))
    np.testing.assert_allclose(pooled[:, 0], frames[:, :2].mean(axis=1))
    np.testing.assert_allclose(pooled[:, 1], frames[:, 2:].mean(axis=1))
    with pytest.raises(DimensionError):
        pool_coordinates(frames, pooling_matrix(5, [(0, 1, 2, 3, 4)]))
