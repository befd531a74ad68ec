import csv
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xfrac.errors import OutOfElementError
from xfrac.mesh import (jacobian, parent_to_physical, perturb_mesh, physical_to_parent, shape_functions,
                        shape_gradients, structured_mesh)

FIXTURES = Path(__file__).parent / "fixtures"


def test_structured_counts():
    m = structured_mesh(1, 1)
    assert (m.n_nodes, m.n_elements) == (4, 1)
    m = structured_mesh(60, 60, (0, 0, 10, 10))
    assert (m.n_nodes, m.n_elements) == (3721, 3600)
    m = structured_mesh(72, 144, (0, 0, 1, 2))
    assert (m.n_nodes, m.n_elements) == (10585, 10368)


def test_structured_coordinates_are_exact_multiples():
    m = structured_mesh(7, 3, (0.0, 0.0, 0.7, 0.3))
    dx = 0.7 / 7
    assert np.array_equal(m.nodes[:7, 0], np.arange(7) * dx)
    assert m.spacing == pytest.approx((0.1, 0.1))


def test_elements_are_ccw_with_positive_jacobians():
    m = structured_mesh(5, 4, (0, 0, 2, 1))
    assert np.all(m.gauss_jacobians() > 0)
    assert np.allclose(m.element_areas, 0.1)


def test_perturb_zero_is_identity():
    m = structured_mesh(6, 6)
    assert np.array_equal(perturb_mesh(m, 0.0, 5).nodes, m.nodes)


def test_perturb_bounds_and_pinned_boundary():
    m = structured_mesh(10, 10)
    p = perturb_mesh(m, 0.4, 1)
    b = m.boundary_nodes()
    assert np.array_equal(p.nodes[b], m.nodes[b])
    assert np.max(np.abs(p.nodes - m.nodes)) <= 0.4 * 0.1 + 1e-15
    assert np.all(p.gauss_jacobians() > 0)
    assert np.all(p.corner_jacobians() > 0)


def test_perturb_is_deterministic_and_matches_fixture():
    m = structured_mesh(4, 4)
    a = perturb_mesh(m, 0.4, 7)
    b = perturb_mesh(m, 0.4, 7)
    assert np.array_equal(a.nodes, b.nodes)
    with open(FIXTURES / "perturbed_4x4_a04_s7_nodes.csv") as fh:
        rows = list(csv.DictReader(fh))
    stored = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    assert np.array_equal(a.nodes, stored)
    assert not np.array_equal(perturb_mesh(m, 0.4, 8).nodes, stored)


def test_perturb_rejects_large_alpha():
    with pytest.raises(ValueError):
        perturb_mesh(structured_mesh(3, 3), 0.5, 0)


def test_parent_map_examples():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert np.allclose(parent_to_physical(X, np.array([0.0, 0.0])), [0.5, 0.5])
    assert np.allclose(parent_to_physical(X, np.array([-1.0, -1.0])), X[0])
    assert np.allclose(physical_to_parent(X, X[2]), [1.0, 1.0])


def test_parallelogram_jacobian_is_quarter_area():
    X = np.array([[0.0, 0.0], [2.0, 0.0], [2.7, 1.3], [0.7, 1.3]])
    J = jacobian(X, np.array([0.0, 0.0]))
    assert np.linalg.det(J) == pytest.approx(2.0 * 1.3 / 4.0)
    assert np.allclose(physical_to_parent(X, X.mean(axis=0)), 0.0, atol=1e-14)


def test_outside_point_raises():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(OutOfElementError):
        physical_to_parent(X, np.array([1.5, 0.5]))


def test_shape_functions_partition_of_unity_and_gradients():
    rng = np.random.default_rng(0)
    xi = rng.uniform(-1, 1, (50, 2))
    N = shape_functions(xi)
    assert np.allclose(N.sum(axis=1), 1.0)
    dN = shape_gradients(xi)
    assert np.allclose(dN.sum(axis=1), 0.0)
    h = 1e-6
    for a in range(2):
        e = np.zeros(2)
        e[a] = h
        fd = (shape_functions(xi + e) - shape_functions(xi - e)) / (2 * h)
        assert np.allclose(fd, dN[:, :, a], atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_round_trip_on_perturbed_elements(seed):
    m = perturb_mesh(structured_mesh(5, 5), 0.4, seed)
    rng = np.random.default_rng(seed)
    for e in range(m.n_elements):
        X = m.element_vertices(e)
        xi = rng.uniform(-1, 1, (100, 2))
        back = physical_to_parent(X, parent_to_physical(X, xi))
        assert np.max(np.abs(back - xi)) < 1e-10


def test_locate_and_csv(tmp_path):
    m = structured_mesh(4, 2, (0, 0, 2, 1))
    e, xi = m.locate(np.array([1.3, 0.8]))
    assert np.allclose(parent_to_physical(m.element_vertices(e), xi), [1.3, 0.8])
    m.to_csv(tmp_path / "n.csv", tmp_path / "e.csv")
    head = (tmp_path / "e.csv").read_text().splitlines()[0]
    assert head == "id,n1,n2,n3,n4"
    assert (tmp_path / "n.csv").read_text().splitlines()[0] == "id,x,y"
