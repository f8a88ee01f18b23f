import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slamstop.errors import DisconnectedGraphError, DomainError
from slamstop.graph import (EdgeKind, Pose2, PoseGraph, brute_force_spanning_trees,
                            log_weighted_spanning_trees, build_weighted_laplacian)
from slamstop.randgraph import random_pose_graph
from slamstop.toed import (assemble_fim, dopt_exact, dopt_graph, dopt_matrix, dump_matrix_csv,
                           edge_weight, edge_weights, spectrum)


def chain(infos):
    g = PoseGraph()
    g.add_node(Pose2())
    for i, info in enumerate(infos):
        g.add_node(Pose2(i + 1.0, 0, 0))
        g.add_edge(i, i + 1, Pose2(1, 0, 0), info)
    return g


def triangle(info=np.eye(3)):
    g = chain([info, info])
    g.add_edge(2, 0, Pose2(-2, 0, 0), info, EdgeKind.LOOP_CLOSURE)
    return g


# -- dopt_matrix -------------------------------------------------------------------

def test_dopt_matrix_examples():
    assert dopt_matrix(np.eye(3)) == pytest.approx(1.0, abs=1e-12)
    assert dopt_matrix(np.diag([1.0, 2.0, 4.0]), 3) == pytest.approx(2.0, abs=1e-12)
    assert dopt_matrix(np.diag([0.0, 1.0])) == 0.0


def test_dopt_matrix_errors():
    with pytest.raises(DomainError):
        dopt_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(DomainError):
        dopt_matrix(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(DomainError):
        dopt_matrix(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    with pytest.raises(DomainError):
        dopt_matrix(np.eye(3), 4)


def test_spectrum_clamps_roundoff():
    M = np.diag([1.0, 1e-17, 2.0])
    lam = spectrum(M).eigenvalues
    assert lam[0] == 0.0 and list(lam[1:]) == [1.0, 2.0]
    assert dopt_matrix(M) == 0.0
    with pytest.raises(DomainError):
        spectrum(np.diag([1.0, -0.5]))


@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=8))
def test_dopt_matrix_is_geometric_mean_of_diagonal(vals):
    expected = math.exp(sum(math.log(v) for v in vals) / len(vals))
    assert dopt_matrix(np.diag(vals)) == pytest.approx(expected, rel=1e-10)


@given(st.integers(1, 6), st.floats(0.01, 100), st.integers(0, 2**32 - 1))
def test_dopt_matrix_scale_equivariant(d, c, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    M = A @ A.T + 0.1 * np.eye(d)
    assert dopt_matrix(c * M) == pytest.approx(c * dopt_matrix(M), rel=1e-9)


# -- edge weights ------------------------------------------------------------------

def test_edge_weight_examples():
    assert edge_weight(4 * np.eye(3)) == pytest.approx(4.0, rel=1e-12)
    assert edge_weight(np.diag([9.0, 3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
    assert edge_weight(np.zeros((3, 3))) == 0.0


def test_batched_edge_weights_match_scalar(rng):
    infos = []
    for _ in range(20):
        A = rng.normal(size=(3, 3))
        infos.append(A @ A.T)
    infos.append(np.zeros((3, 3)))
    got = edge_weights(np.stack(infos))
    want = [edge_weight(m) for m in infos]
    np.testing.assert_allclose(got, want, rtol=1e-10)


# -- graph D-opt -------------------------------------------------------------------

def test_dopt_graph_examples():
    # t from the brute-force oracle, then (n t)^(1/n)
    g = chain([np.eye(3)])
    assert brute_force_spanning_trees(g, [1.0]) == 1
    assert dopt_graph(g) == pytest.approx(math.sqrt(2), rel=1e-12)
    g = triangle()
    assert brute_force_spanning_trees(g, [1.0] * 3) == 3
    assert dopt_graph(g) == pytest.approx(9 ** (1 / 3), rel=1e-12)
    g = triangle(4 * np.eye(3))
    assert brute_force_spanning_trees(g, [4.0] * 3) == 48
    assert dopt_graph(g) == pytest.approx(144 ** (1 / 3), rel=1e-12)


def test_dopt_graph_disconnected_by_zero_weight():
    g = chain([np.eye(3), np.zeros((3, 3))])
    with pytest.raises(DisconnectedGraphError):
        dopt_graph(g)


def test_dopt_graph_large_graph_is_finite():
    g = random_pose_graph(2000, 3, extra_edges=400, weight_range=(100, 1000))
    v = dopt_graph(g)
    assert math.isfinite(v) and v > 0


# -- FIM assembly and exact D-opt -----------------------------------------------------

def test_assemble_single_edge():
    Y = assemble_fim(chain([np.eye(3)]))
    np.testing.assert_array_equal(Y, np.eye(3))
    assert dopt_exact(chain([np.eye(3)])) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("gam", [1.0, 0.5, 3.0])
def test_assemble_triangle_determinant(gam):
    Y = assemble_fim(triangle(gam * np.eye(3)))
    assert Y.shape == (6, 6)
    # dense determinant oracle against (3 gam^2)^3
    assert np.linalg.det(Y) == pytest.approx((3 * gam**2) ** 3, rel=1e-10)


def test_dopt_exact_isotropic_triangle():
    # det(Y_red) = t^3 = 27 for the unit triangle, dimension 6
    assert dopt_exact(triangle()) == pytest.approx(27 ** (1 / 6), rel=1e-12)
    assert dopt_exact(triangle()) == pytest.approx(math.sqrt(3), rel=1e-12)


def test_dopt_exact_from_spanning_trees(rng):
    g = random_pose_graph(6, rng, loop_prob=0.4)
    w = edge_weights(g.infos())
    t = brute_force_spanning_trees(g, w)
    assert np.linalg.det(assemble_fim(g)) == pytest.approx(t**3, rel=1e-9)
    # dimension 3(n-1): exponent 3/(3(n-1))
    assert dopt_exact(g) == pytest.approx(t ** (1 / (g.n - 1)), rel=1e-9)


def test_fim_dimension():
    g = random_pose_graph(492, 0, extra_edges=50)
    assert assemble_fim(g).shape == (1473, 1473)


@given(st.integers(2, 25), st.integers(0, 2**32 - 1))
def test_isotropic_determinant_identity(n, seed):
    g = random_pose_graph(n, seed, loop_prob=0.3)
    Y = assemble_fim(g)
    sign, logdet = np.linalg.slogdet(Y)
    logt = log_weighted_spanning_trees(build_weighted_laplacian(g, edge_weights(g.infos())))
    assert sign > 0
    assert logdet == pytest.approx(3 * logt, rel=1e-6, abs=1e-9)


@given(st.integers(3, 15), st.integers(0, 2**32 - 1))
def test_adding_edge_never_decreases_exact(n, seed):
    rng = np.random.default_rng(seed)
    g = random_pose_graph(n, rng, loop_prob=0.2, isotropic=False)
    before = dopt_exact(g)
    a, b = sorted(rng.choice(n, 2, replace=False).tolist())
    A = rng.normal(size=(3, 3))
    g.add_edge(b, a, Pose2(), A @ A.T + 0.05 * np.eye(3), EdgeKind.LOOP_CLOSURE)
    assert dopt_exact(g) >= before * (1 - 1e-12)


@given(st.integers(2, 12), st.floats(0.1, 50), st.integers(0, 2**32 - 1))
def test_scaling_infos_scales_exact_and_weights(n, c, seed):
    g = random_pose_graph(n, seed, isotropic=False)
    h = PoseGraph(list(g.nodes), [])
    for e in g.edges:
        h.add_edge(e.from_id, e.to_id, e.measurement, c * e.info, e.kind)
    assert dopt_exact(h) == pytest.approx(c * dopt_exact(g), rel=1e-8)
    np.testing.assert_allclose(edge_weights(h.infos()), c * edge_weights(g.infos()), rtol=1e-9)


def test_dump_matrix_csv(tmp_path):
    Y = assemble_fim(triangle())
    p = tmp_path / "fim.csv"
    dump_matrix_csv(Y, p)
    back = np.loadtxt(p, delimiter=",")
    np.testing.assert_array_equal(back, Y)
