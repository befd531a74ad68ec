import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xfrac.geometry import CrackPath, Polygon, clip_element
from xfrac.mesh import Mesh, parent_to_physical, structured_mesh
from xfrac.quadrature import (TRIANGLE13_POINTS, TRIANGLE13_WEIGHTS, QuadratureConfig, dump_quadrature,
                              element_rule, rule_size, sccm_rule, standard_rule, subcell_rule, tip_point_budget)

UNIT = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
CHEB = QuadratureConfig(disk="chebyshev")


def _one_element(X=UNIT) -> Mesh:
    X = np.asarray(X, dtype=float)
    return Mesh(X, np.array([[0, 1, 2, 3]]), (*X.min(axis=0), *X.max(axis=0)), structured=False)


def _green(poly: Polygon, coeffs: dict) -> float:
    # sum_c c * integral x^p y^q from the boundary integral of x^(p+1) y^q / (p+1) dy
    x, w = np.polynomial.legendre.leggauss(10)
    s = 0.5 * (x + 1)
    v = poly.vertices
    total = 0.0
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        pts = a + s[:, None] * (b - a)
        for (p, q), c in coeffs.items():
            total += c * 0.5 * np.sum(w * pts[:, 0] ** (p + 1) * pts[:, 1] ** q) * (b[1] - a[1]) / (p + 1)
    return total


def _poly_eval(pts, coeffs):
    return sum(c * pts[:, 0] ** p * pts[:, 1] ** q for (p, q), c in coeffs.items())


SPLIT = CrackPath(np.array([[-1.0, 0.5], [2.0, 0.5]]), tips=(False, False))
SLANT = CrackPath(np.array([[-1.0, 0.1], [2.0, 0.8]]), tips=(False, False))
TIP = CrackPath(np.array([[-1.0, 0.5], [0.5, 0.5]]), tips=(False, True))


# ---------------------------------------------------------------- triangle rule


def test_triangle13_is_degree_seven():
    # integral of L1^a L2^b over the reference triangle, area 1/2: a! b! / (a + b + 2)!
    b = TRIANGLE13_POINTS
    for a in range(8):
        for c in range(8 - a):
            got = 0.5 * np.dot(TRIANGLE13_WEIGHTS, b[:, 0] ** a * b[:, 1] ** c)
            want = math.factorial(a) * math.factorial(c) / math.factorial(a + c + 2)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-15)
    assert TRIANGLE13_WEIGHTS.sum() == pytest.approx(1.0, abs=1e-15)


# ---------------------------------------------------------------- standard rule


def test_standard_rule_unit_square():
    qs = standard_rule(_one_element(), 0)
    g = 1 / math.sqrt(3)
    assert sorted(map(tuple, np.round(qs.parent, 15))) == sorted(
        map(tuple, np.round(np.array([[-g, -g], [g, -g], [g, g], [-g, g]]), 15)))
    assert qs.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert qs.scheme == "standard"


def test_standard_rule_parallelogram_area_and_xy():
    X = np.array([[0.0, 0.0], [2.0, 0.0], [2.7, 1.3], [0.7, 1.3]])
    qs = standard_rule(_one_element(X), 0)
    assert qs.weights.sum() == pytest.approx(2.6, rel=1e-14)
    sq = standard_rule(_one_element(UNIT * 2.0), 0)
    assert sq.integrate(sq.points[:, 0] * sq.points[:, 1]) == pytest.approx(4.0, rel=1e-14)


# ---------------------------------------------------------------- subcell rule


def test_subcell_split_two_rectangles():
    m = _one_element()
    qs = subcell_rule(m, 0, clip_element(UNIT, SPLIT))
    assert len(qs) == 52
    assert qs.weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert set(np.unique(qs.sides)) == {-1, 1}


def test_subcell_tip_element_has_78_points():
    qs = subcell_rule(_one_element(), 0, clip_element(UNIT, TIP))
    assert len(qs) == 78
    assert qs.weights.sum() == pytest.approx(1.0, rel=1e-12)


def test_subcell_degree_five_matches_green():
    m = _one_element()
    clip = clip_element(UNIT, SLANT)
    qs = subcell_rule(m, 0, clip)
    coeffs = {(5, 0): 1.0, (2, 3): -2.0, (1, 1): 0.5, (0, 4): 3.0}
    want = sum(_green(p, coeffs) for p in clip.polygons)
    assert qs.integrate(_poly_eval(qs.points, coeffs)) == pytest.approx(want, rel=1e-12)


# ---------------------------------------------------------------- sccm rule


def test_uncut_element_bypasses_sccm():
    m = _one_element()
    a = element_rule(m, 0, clip_element(UNIT, CrackPath(np.array([[3.0, 3.0], [4.0, 3.0]]))), QuadratureConfig())
    b = standard_rule(m, 0)
    assert a.scheme == "standard"
    assert np.array_equal(a.weights, b.weights)


def test_sccm_points_inside_element_and_positive_weights():
    m = _one_element()
    for crack in (SPLIT, SLANT, TIP):
        qs = sccm_rule(m, 0, clip_element(UNIT, crack), fallback=False)
        assert np.all(qs.weights > 0)
        assert np.all(np.abs(qs.parent) <= 1 + 1e-12)
        assert np.allclose(parent_to_physical(UNIT, qs.parent), qs.points, atol=1e-10)


def test_sccm_split_area_midpoint():
    qs = sccm_rule(_one_element(), 0, clip_element(UNIT, SPLIT), fallback=False)
    assert qs.weights.sum() == pytest.approx(1.0, rel=1e-3)


def test_sccm_split_area_chebyshev():
    qs = sccm_rule(_one_element(), 0, clip_element(UNIT, SPLIT), CHEB, fallback=False)
    assert qs.weights.sum() == pytest.approx(1.0, rel=1e-6)


def test_scheme_equivalence_cubic():
    m = _one_element()
    clip = clip_element(UNIT, SLANT)
    coeffs = {(3, 0): 1.0, (1, 2): -1.0, (0, 1): 2.0, (0, 0): 1.0}
    a = subcell_rule(m, 0, clip)
    b = sccm_rule(m, 0, clip, CHEB, fallback=False)
    assert b.integrate(_poly_eval(b.points, coeffs)) == pytest.approx(a.integrate(_poly_eval(a.points, coeffs)),
                                                                      rel=1e-6)


def test_sccm_falls_back_on_crowded_piece(caplog):
    # crack grazing the bottom edge leaves a sliver that cannot be mapped
    crack = CrackPath(np.array([[-1.0, 0.001], [2.0, 0.03]]), tips=(False, False))
    clip = clip_element(UNIT, crack)
    with caplog.at_level("WARNING"):
        qs = sccm_rule(_one_element(), 0, clip)
    assert qs.fallback
    assert qs.weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert "subcells" in caplog.text


# ---------------------------------------------------------------- point budget


def test_tip_budget_examples():
    sizes = tip_point_budget(78, [0.5, 0.5])
    for n_r, n_t in sizes:
        assert 31 <= n_r * n_t <= 47
    n_r, n_t = tip_point_budget(4, [1.0])[0]
    assert n_r * n_t >= 4
    assert n_r * n_t == min(a * b for a in range(1, 5) for b in range(2, 9) if a * b >= 4 and a <= b <= max(8, 4 * a))


@settings(max_examples=100, deadline=None)
@given(n=st.integers(4, 400), frac=st.floats(0.05, 0.95))
def test_tip_budget_total_close_and_monotone(n, frac):
    areas = [frac, 1 - frac]
    total = sum(a * b for a, b in tip_point_budget(n, areas))
    assert n <= total <= 1.2 * n + 8
    bigger = sum(a * b for a, b in tip_point_budget(n + 1, areas))
    assert bigger >= total


def test_rule_size_monotone():
    counts = [np.prod(rule_size(n)) for n in range(1, 300)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert all(c >= n for n, c in zip(range(1, 300), counts))


# ---------------------------------------------------------------- mesh-wide


@settings(max_examples=25, deadline=None)
@given(y0=st.floats(0.03, 0.97), y1=st.floats(0.03, 0.97))
def test_parent_round_trip_on_cut_elements(y0, y1):
    m = structured_mesh(3, 3)
    crack = CrackPath(np.array([[-0.5, y0], [1.5, y1]]), tips=(False, False))
    for e in range(m.n_elements):
        X = m.element_vertices(e)
        clip = clip_element(X, crack)
        qs = element_rule(m, e, clip, QuadratureConfig())
        assert np.all(np.abs(qs.parent) <= 1 + 1e-10)
        assert np.max(np.abs(parent_to_physical(X, qs.parent) - qs.points)) < 1e-10


def test_dump_quadrature(tmp_path):
    m = _one_element()
    sets = [subcell_rule(m, 0, clip_element(UNIT, SPLIT))]
    dump_quadrature(sets, tmp_path / "q.csv")
    lines = (tmp_path / "q.csv").read_text().splitlines()
    assert lines[0] == "element,scheme,x,y,xi,eta,weight,side"
    assert len(lines) == 53


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(scheme="gauss")
    with pytest.raises(ValueError):
        QuadratureConfig(n_r=4)
