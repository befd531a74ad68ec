"""Element quadrature: tensor Gauss, triangle subcells and conformal-map rules."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CrowdingError, SolverFailureError
from .geometry import ClipResult, Polygon, triangulate
from .mesh import Mesh, jacobian, parent_to_physical, physical_to_parent
from .sccm import disk_rule, polygon_quadrature, solve_parameter_problem

log = logging.getLogger(__name__)

# 13-point degree-7 rule on the triangle (Dunavant); barycentric pairs, weights sum to 1
_T13_A1, _T13_A2 = 0.260345966079040, 0.065130102902216
_T13_C, _T13_D = 0.048690315425316, 0.312865496004874


def _triangle13():
    pts = [(1 / 3, 1 / 3)]
    w = [-0.149570044467682]
    for wt, a in ((0.175615257433208, _T13_A1), (0.053347235608838, _T13_A2)):
        pts += [(a, a), (a, 1 - 2 * a), (1 - 2 * a, a)]
        w += [wt] * 3
    c, d = _T13_C, _T13_D
    e = 1 - c - d
    pts += [(c, d), (d, c), (c, e), (e, c), (d, e), (e, d)]
    w += [0.077113760890257] * 6
    w = np.array(w)
    return np.array(pts), w / w.sum()


TRIANGLE13_POINTS, TRIANGLE13_WEIGHTS = _triangle13()


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule on [-1, 1]^2 with ``order`` points per direction."""
    x, w = np.polynomial.legendre.leggauss(order)
    X, Y = np.meshgrid(x, x, indexing="xy")
    W = np.outer(w, w)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


@dataclass(frozen=True)
class QuadratureConfig:
    """How cut elements are integrated.

    ``scheme`` is "sccm" or "subcell"; ``disk`` selects the rule on the unit
    disk. ``tip_points`` is the total budget for a tip element, shared among
    its pieces in proportion to area. Split pieces receive
    ``points_per_triangle * (n_vertices - 2)`` points unless ``n_r``/``n_t``
    fix the disk rule outright.
    """

    scheme: str = "sccm"
    disk: str = "midpoint"
    tip_points: int = 78
    points_per_triangle: int = 13
    n_r: int | None = None
    n_t: int | None = None
    uncut_order: int = 2
    enriched_order: int = 2
    sc_tol: float = 1e-10

    def __post_init__(self):
        if self.scheme not in ("sccm", "subcell"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.disk not in ("midpoint", "chebyshev"):
            raise ValueError(f"unknown disk rule {self.disk!r}")
        if (self.n_r is None) != (self.n_t is None):
            raise ValueError("n_r and n_t must be given together")


@dataclass
class QuadratureSet:
    """Points and weights for one element, in physical and parent coordinates.

    ``sides`` labels the piece each point came from (0 for an uncut element).
    """

    element: int
    scheme: str
    points: np.ndarray
    parent: np.ndarray
    weights: np.ndarray
    sides: np.ndarray
    fallback: bool = False
    polygons: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


# --------------------------------------------------------------------------- rule sizing


@lru_cache(maxsize=None)
def _size_candidates(limit: int = 4096) -> tuple[tuple[int, int, int], ...]:
    out = []
    for n_r in range(1, 65):
        for n_t in range(max(2, n_r), max(8, 4 * n_r) + 1):
            c = n_r * n_t
            if c <= limit:
                out.append((c, abs(math.log(n_t / (2.0 * n_r))), -n_t, n_r, n_t))
    out.sort()
    return tuple((c, n_r, n_t) for c, _, _, n_r, n_t in out)


def rule_size(n_points: int) -> tuple[int, int]:
    """Smallest (n_r, n_t) disk grid with at least ``n_points`` points.

    Grids keep n_r <= n_t <= max(8, 4 n_r); ties prefer n_t close to 2 n_r.
    The count is non-decreasing in ``n_points``.
    """
    n_points = max(1, int(n_points))
    for c, n_r, n_t in _size_candidates():
        if c >= n_points:
            return n_r, n_t
    raise ValueError(f"no disk rule with {n_points} points")


def tip_point_budget(target: int, areas) -> list[tuple[int, int]]:
    """Distribute a point budget among polygons in proportion to their areas."""
    areas = np.asarray(areas, dtype=float)
    if target < 1 or len(areas) == 0 or np.any(areas <= 0):
        raise ValueError("need a positive target and positive areas")
    share = np.ceil(target * areas / areas.sum()).astype(int)
    return [rule_size(max(1, s)) for s in share]


# --------------------------------------------------------------------------- element rules


def standard_rule(mesh: Mesh, e: int, order: int = 2) -> QuadratureSet:
    X = mesh.element_vertices(e)
    xi, w = gauss_rule(order)
    J = jacobian(X, xi)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    return QuadratureSet(e, "standard", parent_to_physical(X, xi), xi, w * det,
                         np.zeros(len(w), dtype=np.int64))


def _fan(poly: Polygon, apex=None) -> list[np.ndarray]:
    """Triangles covering ``poly``; a fan from ``apex`` when that vertex keeps them all positive."""
    v = poly.vertices
    if apex is not None:
        d = np.linalg.norm(v - apex, axis=1)
        k = int(np.argmin(d))
        if d[k] <= 1e-12 * poly.diameter:
            order = np.roll(np.arange(len(v)), -k)
            tris = [v[[order[0], order[i], order[i + 1]]] for i in range(1, len(v) - 1)]
            areas = [0.5 * ((t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1]) - (t[2, 0] - t[0, 0]) * (t[1, 1] - t[0, 1]))
                     for t in tris]
            tol = 1e-14 * poly.diameter ** 2
            if all(a > -tol for a in areas):
                return [t for t, a in zip(tris, areas) if a > tol]
    return [v[list(t)] for t in triangulate(poly)]


def subcell_rule(mesh: Mesh, e: int, clip: ClipResult) -> QuadratureSet:
    """13 points on every triangle of a fan triangulation of each piece (fans start at the tip)."""
    X = mesh.element_vertices(e)
    apex = clip.tip_points[0] if clip.tip_points else None
    pts, wts, sides = [], [], []
    for poly, side in zip(clip.polygons, clip.sides):
        for tri in _fan(poly, apex):
            a = 0.5 * abs((tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
                          - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1]))
            b = TRIANGLE13_POINTS
            p = tri[0] + b[:, :1] * (tri[1] - tri[0]) + b[:, 1:] * (tri[2] - tri[0])
            pts.append(p)
            wts.append(TRIANGLE13_WEIGHTS * a)
            sides.append(np.full(len(b), side, dtype=np.int64))
    points = np.vstack(pts)
    return QuadratureSet(e, "subcell", points, physical_to_parent(X, points), np.concatenate(wts),
                         np.concatenate(sides), polygons=list(clip.polygons))


def _split_sizes(clip: ClipResult, cfg: QuadratureConfig) -> list[tuple[int, int]]:
    if cfg.n_r is not None:
        return [(cfg.n_r, cfg.n_t)] * len(clip.polygons)
    if clip.kind == "tip":
        return tip_point_budget(cfg.tip_points, [p.area for p in clip.polygons])
    return [rule_size(cfg.points_per_triangle * max(1, len(p) - 2)) for p in clip.polygons]


def sccm_rule(mesh: Mesh, e: int, clip: ClipResult, cfg: QuadratureConfig = QuadratureConfig(),
              fallback: bool = True) -> QuadratureSet:
    """Map a disk rule onto every piece of a cut element.

    When the conformal map cannot be computed the element falls back to the
    subcell rule (flagged through ``QuadratureSet.fallback``).
    """
    X = mesh.element_vertices(e)
    pts, wts, sides = [], [], []
    try:
        for poly, side, (n_r, n_t) in zip(clip.polygons, clip.sides, _split_sizes(clip, cfg)):
            cmap = solve_parameter_problem(poly, cfg.sc_tol)
            p, w = polygon_quadrature(poly, disk_rule(cfg.disk, n_r, n_t), cmap=cmap)
            pts.append(p)
            wts.append(w)
            sides.append(np.full(len(w), side, dtype=np.int64))
    except (SolverFailureError, CrowdingError) as exc:
        if not fallback:
            raise
        log.warning("element %d: conformal map failed (%s); using subcells", e, exc)
        qs = subcell_rule(mesh, e, clip)
        qs.fallback = True
        return qs
    points = np.vstack(pts)
    return QuadratureSet(e, "sccm", points, physical_to_parent(X, points), np.concatenate(wts),
                         np.concatenate(sides), polygons=list(clip.polygons))


def element_rule(mesh: Mesh, e: int, clip: ClipResult | None, cfg: QuadratureConfig,
                 enriched: bool = False) -> QuadratureSet:
    if clip is None or not clip.is_cut:
        return standard_rule(mesh, e, cfg.enriched_order if enriched else cfg.uncut_order)
    if cfg.scheme == "subcell":
        return subcell_rule(mesh, e, clip)
    return sccm_rule(mesh, e, clip, cfg)


def dump_quadrature(sets, path) -> None:
    """CSV with one row per point: element, scheme, x, y, xi, eta, weight, side."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["element", "scheme", "x", "y", "xi", "eta", "weight", "side"])
        for qs in sets:
            for p, q, wt, s in zip(qs.points, qs.parent, qs.weights, qs.sides):
                w.writerow([qs.element, qs.scheme, repr(float(p[0])), repr(float(p[1])),
                            repr(float(q[0])), repr(float(q[1])), repr(float(wt)), int(s)])
