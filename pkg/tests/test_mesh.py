import numpy as np
import pytest

from conserva.errors import ConfigError
from conserva.mesh import EdgeFluxSet, element_graph, uniform_mesh


def test_uniform_mesh_nodes_and_volumes():
    mesh = uniform_mesh(-1.0, 1.0, 4, boundary="transmissive")
    np.testing.assert_allclose(mesh.nodes, [-1.0, -0.5, 0.0, 0.5, 1.0])
    np.testing.assert_allclose(mesh.volumes, [0.25, 0.5, 0.5, 0.5, 0.25])
    assert mesh.ndof == 5


def test_periodic_mesh_wraps_and_covers_domain():
    mesh = uniform_mesh(-1.0, 1.0, 4, boundary="periodic")
    assert mesh.ndof == 4
    np.testing.assert_allclose(mesh.volumes, 0.5)
    assert mesh.volumes.sum() == pytest.approx(2.0)
    # last cell connects back to DOF 0
    assert tuple(mesh.cell_dofs[-1]) == (3, 0)


def test_mesh_validation():
    with pytest.raises(ConfigError):
        uniform_mesh(0.0, 1.0, 1)
    with pytest.raises(ConfigError):
        uniform_mesh(1.0, 0.0, 4)


def test_segment_graph_incidence():
    g = element_graph("segment")
    np.testing.assert_array_equal(g.incidence, [[1.0], [-1.0]])


def test_triangle_graph_rows_sum_to_zero():
    g = element_graph("triangle")
    assert g.incidence.shape == (3, 3)
    np.testing.assert_array_equal(g.incidence.sum(axis=1), 0.0)
    assert g.epsilon(2, 0) == 1 and g.epsilon(0, 2) == -1 and g.epsilon(0, 0) == 0


def test_path_graph_middle_node_touches_both_edges():
    g = element_graph("path", 3)
    assert g.nedges == 2
    assert np.count_nonzero(g.incidence[1]) == 2


@pytest.mark.parametrize(
    "graph",
    [element_graph("segment"), element_graph("triangle")]
    + [element_graph("path", n) for n in range(2, 9)],
)
def test_incidence_columns_sum_to_zero(graph):
    np.testing.assert_array_equal(graph.incidence.sum(axis=0), 0.0)


@pytest.mark.parametrize(
    "graph",
    [element_graph("segment"), element_graph("triangle")]
    + [element_graph("path", n) for n in range(2, 9)],
)
def test_laplacian_has_one_zero_eigenvalue(graph):
    L = graph.incidence @ graph.incidence.T
    eig = np.sort(np.abs(np.linalg.eigvalsh(L)))
    assert eig[0] <= 1e-10
    assert eig[1] > 1e-10  # connected: single zero mode


def test_path_needs_two_dofs():
    with pytest.raises(ConfigError):
        element_graph("path", 1)
    with pytest.raises(ConfigError):
        element_graph("hexagon")


def test_edge_flux_antisymmetry_is_structural():
    g = element_graph("triangle")
    fluxes = EdgeFluxSet(g, np.array([[1.0], [2.0], [3.0]]))
    np.testing.assert_array_equal(fluxes.between(0, 1), [1.0])
    np.testing.assert_array_equal(fluxes.between(1, 0), [-1.0])
    np.testing.assert_array_equal(fluxes.between(0, 2), [-3.0])
    path_fluxes = EdgeFluxSet(element_graph("path", 4), np.zeros((3, 1)))
    with pytest.raises(ConfigError):
        path_fluxes.between(0, 2)
