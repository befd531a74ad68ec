"""Planar polygon and polyline predicates.

Everything here works on plain ``(n, 2)`` float arrays. Tolerances are relative:
``EPS_REL`` times a characteristic length (an element diagonal, a polygon
bounding-box diagonal, ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometryError, OnDiscontinuityError, UnsupportedGeometryError

EPS_REL = 1e-8


def _as_points(pts) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of points, got shape {arr.shape}")
    return arr


def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def bbox_diagonal(pts) -> float:
    v = np.asarray(pts, dtype=float)
    return float(np.hypot(*(v.max(axis=0) - v.min(axis=0))))


def cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple polygon given by its vertex loop (no repeated closing vertex)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = _as_points(self.vertices).copy()
        if len(v) < 3:
            raise DegenerateGeometryError(f"polygon needs at least 3 vertices, got {len(v)}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return _shoelace(self.vertices)

    @property
    def is_ccw(self) -> bool:
        return self.area > 0.0

    @property
    def diameter(self) -> float:
        return bbox_diagonal(self.vertices)

    def normalized(self) -> "Polygon":
        """Counter-clockwise copy (self if already CCW)."""
        return self if self.is_ccw else Polygon(self.vertices[::-1])

    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        c = cross2(v, w)
        a = 0.5 * c.sum()
        if abs(a) < (EPS_REL * self.diameter) ** 2:
            return v.mean(axis=0)
        return np.array([((v[:, 0] + w[:, 0]) * c).sum(), ((v[:, 1] + w[:, 1]) * c).sum()]) / (6.0 * a)

    def side_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)

    def interior_angles(self) -> np.ndarray:
        """Interior angle at each vertex, radians in (0, 2*pi), for the CCW orientation."""
        if not self.is_ccw:
            return self.normalized().interior_angles()[::-1]
        v = self.vertices
        incoming = v - np.roll(v, 1, axis=0)
        outgoing = np.roll(v, -1, axis=0) - v
        turn = np.arctan2(cross2(incoming, outgoing), np.einsum("ij,ij->i", incoming, outgoing))
        return math.pi - turn

    def contains(self, pts) -> np.ndarray:
        """Even-odd point-in-polygon test (boundary points are unspecified)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        px, py = p[:, 0:1], p[:, 1:2]
        cond = (v[:, 1] > py) != (w[:, 1] > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = v[:, 0] + (py - v[:, 1]) * (w[:, 0] - v[:, 0]) / (w[:, 1] - v[:, 1])
        inside = np.logical_and(cond, px < xcross)
        return np.count_nonzero(inside, axis=1) % 2 == 1

    def boundary_distance(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        d = np.full(len(p), np.inf)
        v = self.vertices
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            d = np.minimum(d, _point_segment_distance(p, a, b))
        return d


def signed_area(poly: Polygon | Sequence) -> float:
    """Shoelace area, positive for counter-clockwise vertex order."""
    v = poly.vertices if isinstance(poly, Polygon) else _as_points(poly)
    a = _shoelace(v)
    if abs(a) < (EPS_REL * bbox_diagonal(v)) ** 2:
        raise DegenerateGeometryError(f"polygon area {a:g} is below the degeneracy threshold")
    return a


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    L2 = float(d @ d)
    if L2 == 0.0:
        return np.linalg.norm(p - a, axis=1)
    t = np.clip(((p - a) @ d) / L2, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * d), axis=1)


@dataclass(frozen=True)
class TipFrame:
    """Local crack-tip frame: origin at the tip, x axis along the outward tangent."""

    point: np.ndarray
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(2))
        object.__setattr__(self, "angle", float(self.angle))

    @property
    def rotation(self) -> np.ndarray:
        """Matrix whose rows are the local axes expressed in global coordinates."""
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, s], [-s, c]])

    @property
    def tangent(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    def to_local(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.point) @ self.rotation.T

    def polar(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(r, theta) of global point(s) x; theta in (-pi, pi]."""
        loc = np.atleast_2d(self.to_local(x))
        r = np.hypot(loc[:, 0], loc[:, 1])
        theta = np.arctan2(loc[:, 1], loc[:, 0])
        theta = np.where(theta == -math.pi, math.pi, theta)
        return r, theta


@dataclass(frozen=True, eq=False)
class CrackPath:
    """Crack polyline. ``tips[0]``/``tips[1]`` flag whether the start/end vertex is an active tip."""

    vertices: np.ndarray
    tips: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        v = _as_points(self.vertices).copy()
        if len(v) < 2:
            raise DegenerateGeometryError("a crack path needs at least two vertices")
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(seg <= EPS_REL * max(bbox_diagonal(v), 1e-300)):
            raise DegenerateGeometryError("crack path has a zero-length segment")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "tips", (bool(self.tips[0]), bool(self.tips[1])))

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum())

    def end_frame(self, end: int) -> TipFrame:
        """Frame at the start (end=0) or last (end=1) vertex, tangent pointing away from the crack."""
        v = self.vertices
        d = v[0] - v[1] if end == 0 else v[-1] - v[-2]
        return TipFrame(v[0] if end == 0 else v[-1], math.atan2(d[1], d[0]))

    @property
    def tip_frames(self) -> list[TipFrame]:
        return [self.end_frame(k) for k in (0, 1) if self.tips[k]]

    def active_ends(self) -> list[int]:
        return [k for k in (0, 1) if self.tips[k]]

    def extended(self, distance: float, ends: Sequence[int] = (0, 1)) -> np.ndarray:
        """Vertex array with an extra vertex beyond each chosen end, along its tangent."""
        v = np.array(self.vertices)
        if 0 in ends:
            v = np.vstack([v[0] + distance * self.end_frame(0).tangent, v])
        if 1 in ends:
            v = np.vstack([v, v[-1] + distance * self.end_frame(1).tangent])
        return v

    def with_vertex(self, point, end: int = 1) -> "CrackPath":
        p = np.asarray(point, dtype=float).reshape(1, 2)
        v = np.vstack([p, self.vertices]) if end == 0 else np.vstack([self.vertices, p])
        return CrackPath(v, self.tips)


def side_of_points(points, path: CrackPath, eps: float | None = None, on_path: str = "raise") -> np.ndarray:
    """Vectorised :func:`side_of_path`. ``on_path='zero'`` returns 0 instead of raising."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    v = path.vertices
    scale = bbox_diagonal(np.vstack([v, p]))
    if eps is None:
        eps = EPS_REL * bbox_diagonal(v)
    # virtual extension beyond both ends along the end tangents
    ext = np.array(v)
    reach = 10.0 * scale + 1.0
    ext[0] = ext[0] + reach * path.end_frame(0).tangent
    ext[-1] = ext[-1] + reach * path.end_frame(1).tangent

    a = ext[:-1]
    d = ext[1:] - a
    L2 = np.einsum("ij,ij->i", d, d)
    rel = p[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / L2, 0.0, 1.0)
    foot = a[None] + t[..., None] * d[None]
    dist = np.linalg.norm(p[:, None, :] - foot, axis=2)
    k = np.argmin(dist, axis=1)
    idx = np.arange(len(p))
    dmin = dist[idx, k]
    tk = t[idx, k]

    unit_n = np.stack([-d[:, 1], d[:, 0]], axis=1) / np.sqrt(L2)[:, None]
    seg_sign = np.sign(cross2(d[k], rel[idx, k]))

    nseg = len(d)
    sign = seg_sign.copy()
    # nearest point at a shared vertex: use the pseudo-normal of the two adjacent segments
    at_start = (tk <= 0.0) & (k > 0)
    at_end = (tk >= 1.0) & (k < nseg - 1)
    for mask, vi, left, right in ((at_start, k, k - 1, k), (at_end, k + 1, k, k + 1)):
        m = np.nonzero(mask)[0]
        if len(m):
            pn = unit_n[left[m]] + unit_n[right[m]]
            s = np.sign(np.einsum("ij,ij->i", p[m] - ext[vi[m]], pn))
            sign[m] = np.where(s != 0, s, sign[m])

    on = dmin <= eps
    if np.any(on):
        if on_path == "raise":
            raise OnDiscontinuityError(f"point(s) within {eps:g} of the crack path")
        sign = np.where(on, 0.0, sign)
    return sign.astype(int)


def side_of_path(x, path: CrackPath, eps: float | None = None) -> int:
    """+1 if x lies to the left of the (virtually extended) path, -1 to the right.

    Left means the side the path tangent points to after a 90 degree
    counter-clockwise rotation.
    """
    return int(side_of_points(np.asarray(x, dtype=float).reshape(1, 2), path, eps)[0])


@dataclass(frozen=True)
class InterfaceLine:
    """Straight material interface through p0 and p1.

    ``labels[1]`` is the region on the positive (left of p0 -> p1) side,
    ``labels[0]`` the region on the negative side.
    """

    p0: np.ndarray
    p1: np.ndarray
    labels: tuple[int, int] = (1, 2)

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float).reshape(2)
        p1 = np.asarray(self.p1, dtype=float).reshape(2)
        if np.linalg.norm(p1 - p0) <= 0.0:
            raise DegenerateGeometryError("interface points coincide")
        if self.labels[0] == self.labels[1]:
            raise ValueError("interface region labels must differ")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @property
    def normal(self) -> np.ndarray:
        d = (self.p1 - self.p0) / np.linalg.norm(self.p1 - self.p0)
        return np.array([-d[1], d[0]])

    def as_path(self, reach: float) -> CrackPath:
        d = (self.p1 - self.p0) / np.linalg.norm(self.p1 - self.p0)
        return CrackPath(np.array([self.p0 - reach * d, self.p1 + reach * d]), tips=(False, False))

    def label_of(self, x) -> np.ndarray:
        phi = signed_distance(x, self)
        return np.where(np.asarray(phi) >= 0.0, self.labels[1], self.labels[0])


def signed_distance(x, iface: InterfaceLine):
    """Perpendicular signed distance, positive on the ``labels[1]`` side. Vectorised over x."""
    x = np.asarray(x, dtype=float)
    return (x - iface.p0) @ iface.normal


# --------------------------------------------------------------------------- clipping


@dataclass
class ClipResult:
    kind: str  # "uncut" | "split" | "tip"
    polygons: list[Polygon]
    sides: list[int]
    tip_points: list[np.ndarray] = field(default_factory=list)

    @property
    def is_cut(self) -> bool:
        return self.kind != "uncut"


def _edge_data(quad: np.ndarray):
    a = quad
    b = np.roll(quad, -1, axis=0)
    d = b - a
    lengths = np.linalg.norm(d, axis=1)
    inward = np.stack([-d[:, 1], d[:, 0]], axis=1) / lengths[:, None]
    return a, d, lengths, inward


def _is_tip_element(quad: np.ndarray, frame: TipFrame, eps: float) -> bool:
    a, _, _, inward = _edge_data(quad)
    dist = np.einsum("ij,ij->i", frame.point - a, inward)
    if np.min(dist) > eps:
        return True
    if np.min(dist) < -eps:
        return False
    on = np.abs(dist) <= eps
    # tip on the element boundary: the element is the tip element only if the tangent points inside
    return bool(np.all(inward[on] @ frame.tangent > 1e-9))


def _snap_to_quad(p: np.ndarray, quad: np.ndarray, eps: float) -> np.ndarray:
    dn = np.linalg.norm(quad - p, axis=1)
    if dn.min() <= eps:
        return quad[int(np.argmin(dn))].copy()
    a, d, lengths, inward = _edge_data(quad)
    for j in range(4):
        off = float((p - a[j]) @ inward[j])
        t = float((p - a[j]) @ d[j]) / lengths[j] ** 2
        if abs(off) <= eps and -1e-12 <= t <= 1 + 1e-12:
            return p - off * inward[j]
    return p


def _inside_runs(quad: np.ndarray, verts: np.ndarray, eps: float) -> list[np.ndarray]:
    a, _, _, inward = _edge_data(quad)
    pieces = []
    for i in range(len(verts) - 1):
        p, q = verts[i], verts[i + 1]
        seg_len = float(np.linalg.norm(q - p))
        t0, t1 = 0.0, 1.0
        dp = np.einsum("ij,ij->i", p - a, inward)
        dq = np.einsum("ij,ij->i", q - a, inward)
        ok = True
        for j in range(4):
            if dp[j] < 0.0 and dq[j] < 0.0:
                ok = False
                break
            if dp[j] >= 0.0 and dq[j] >= 0.0:
                continue
            t = dp[j] / (dp[j] - dq[j])
            if dp[j] < 0.0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
        if not ok or (t1 - t0) * seg_len <= eps:
            continue
        pieces.append((i, t0, t1, p + t0 * (q - p), p + t1 * (q - p)))

    runs: list[list[np.ndarray]] = []
    prev = None
    for i, t0, t1, s, e in pieces:
        if prev is not None and prev[0] == i - 1 and prev[2] >= 1.0 and t0 <= 0.0:
            runs[-1].append(e)
        else:
            runs.append([s, e])
        prev = (i, t0, t1)
    return [np.array(r) for r in runs]


def _boundary_param(p: np.ndarray, quad: np.ndarray) -> float:
    a, d, lengths, inward = _edge_data(quad)
    best, s_best = np.inf, 0.0
    for j in range(4):
        t = float((p - a[j]) @ d[j]) / lengths[j] ** 2
        tc = min(max(t, 0.0), 1.0)
        dist = float(np.linalg.norm(p - (a[j] + tc * d[j])))
        if dist < best - 1e-15:
            best, s_best = dist, (j + tc) % 4.0
    return s_best


def _corners_between(s_from: float, s_to: float, quad: np.ndarray, tol: float = 1e-12) -> list[np.ndarray]:
    span = (s_to - s_from) % 4.0
    out = []
    for c in range(4):
        off = (c - s_from) % 4.0
        if tol < off < span - tol:
            out.append((off, quad[c]))
    out.sort(key=lambda t: t[0])
    return [q for _, q in out]


def _cleanup(loop: list[np.ndarray], eps: float, protect: list[np.ndarray], scale: float) -> np.ndarray | None:
    pts = [np.asarray(p, dtype=float) for p in loop]
    out: list[np.ndarray] = []
    for p in pts:
        if not out or np.linalg.norm(p - out[-1]) > eps:
            out.append(p)
    while len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= eps:
        out.pop()

    def protected(p):
        return any(np.linalg.norm(p - q) <= eps for q in protect)

    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            prv, cur, nxt = out[i - 1], out[i], out[(i + 1) % len(out)]
            u, w = cur - prv, nxt - cur
            if abs(cross2(u, w)) <= 1e-12 * scale * scale and float(u @ w) > 0 and not protected(cur):
                out.pop(i)
                changed = True
                break
    if len(out) < 3:
        return None
    v = np.array(out)
    if abs(_shoelace(v)) <= eps * eps:
        return None
    return v


def clip_element(elem_vertices, path: CrackPath, eps: float | None = None) -> ClipResult:
    """Cut a convex quadrilateral by a crack path.

    Returns the uncut element, the two pieces of a split element, or for a tip
    element the two pieces obtained by prolonging the crack from the tip along
    its tangent to the far side of the element. Both tip pieces carry the tip
    as a vertex. ``sides`` gives +1 for the piece left of the path.
    """
    quad = _as_points(elem_vertices)
    if _shoelace(quad) < 0:
        raise ValueError("element vertices must be counter-clockwise")
    diag = bbox_diagonal(quad)
    if eps is None:
        eps = EPS_REL * diag
    whole = ClipResult("uncut", [Polygon(quad)], [0])

    # cheap reject: path bounding box vs element bounding box
    v = path.vertices
    lo, hi = quad.min(axis=0) - eps, quad.max(axis=0) + eps
    tip_ends = [k for k in path.active_ends() if _is_tip_element(quad, path.end_frame(k), eps)]
    if not tip_ends:
        seg_lo = np.minimum(v[:-1], v[1:])
        seg_hi = np.maximum(v[:-1], v[1:])
        if not np.any(np.all(seg_lo <= hi, axis=1) & np.all(seg_hi >= lo, axis=1)):
            return whole

    work = path.extended(2.0 * diag, tip_ends) if tip_ends else np.array(v)
    work = np.array([_snap_to_quad(p, quad, eps) for p in work])
    runs = _inside_runs(quad, work, eps)

    a, _, _, inward = _edge_data(quad)

    def on_boundary(p):
        return np.min(np.abs(np.einsum("ij,ij->i", p - a, inward))) <= eps

    kept = []
    for run in runs:
        mids = 0.5 * (run[:-1] + run[1:])
        if all(on_boundary(m) for m in mids):
            continue  # running along an element edge: no cut
        run = np.array([_snap_to_quad(p, quad, eps) for p in run])
        kept.append(run)
    if not kept:
        return whole
    if len(kept) > 1:
        raise UnsupportedGeometryError("crack path enters the same element more than once")
    run = kept[0]
    if not (on_boundary(run[0]) and on_boundary(run[-1])):
        raise UnsupportedGeometryError("crack path ends inside an element without an active tip there")

    tip_points = [path.end_frame(k).point for k in tip_ends]
    s_in = _boundary_param(run[0], quad)
    s_out = _boundary_param(run[-1], quad)
    left = list(run) + _corners_between(s_out, s_in, quad)
    right = list(run[::-1]) + _corners_between(s_in, s_out, quad)
    polys, sides = [], []
    for loop, side in ((left, 1), (right, -1)):
        cleaned = _cleanup(loop, eps, tip_points, diag)
        if cleaned is None:
            continue
        poly = Polygon(cleaned)
        if not poly.is_ccw:
            poly = poly.normalized()
        polys.append(poly)
        sides.append(side)
    if len(polys) < 2:
        if tip_ends:
            raise UnsupportedGeometryError("tip element decomposition collapsed")
        return whole
    return ClipResult("tip" if tip_ends else "split", polys, sides, tip_points)


def triangulate(poly: Polygon) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation; indices refer to ``poly.vertices``.

    Zero-area ears (collinear vertices) are clipped but not emitted.
    """
    v = poly.vertices
    ccw = poly.is_ccw
    idx = list(range(len(v)))
    tol = 1e-14 * poly.diameter ** 2
    tris: list[tuple[int, int, int]] = []

    def area2(i, j, k):
        a = cross2(v[j] - v[i], v[k] - v[i])
        return a if ccw else -a

    def inside(p, i, j, k):
        return area2(i, j, k) > 0 and all(
            cross2(v[b] - v[a], p - v[a]) * (1 if ccw else -1) > -tol
            for a, b in ((i, j), (j, k), (k, i))
        )

    while len(idx) > 3:
        m = len(idx)
        for pos in range(m):
            i, j, k = idx[pos - 1], idx[pos], idx[(pos + 1) % m]
            a = area2(i, j, k)
            if a <= tol:
                continue
            if any(inside(v[o], i, j, k) for o in idx if o not in (i, j, k)):
                continue
            tris.append((i, j, k))
            idx.pop(pos)
            break
        else:
            # only flat ears remain
            for pos in range(m):
                i, j, k = idx[pos - 1], idx[pos], idx[(pos + 1) % m]
                if abs(area2(i, j, k)) <= tol:
                    idx.pop(pos)
                    break
            else:
                raise DegenerateGeometryError("ear clipping failed; polygon is not simple")
    if area2(*idx) > tol:
        tris.append(tuple(idx))
    return tris
