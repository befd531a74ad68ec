"""Node classification, enrichment functions and DOF bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NearTipError, OnDiscontinuityError, UnsupportedGeometryError
from .geometry import (EPS_REL, ClipResult, CrackPath, InterfaceLine, TipFrame, clip_element,
                       side_of_points, signed_distance)
from .mesh import Mesh

SPLIT_AREA_FRACTION = 1e-4


# --------------------------------------------------------------------------- functions


def heaviside(x, crack: CrackPath) -> np.ndarray:
    """+1 left of the crack path, -1 right of it."""
    return side_of_points(x, crack)


def branch_functions(r, theta) -> np.ndarray:
    """sqrt(r) * [sin(t/2), cos(t/2), sin t sin(t/2), sin t cos(t/2)], shape (..., 4)."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(theta, dtype=float)
    sr = np.sqrt(np.maximum(r, 0.0))
    s2, c2, s = np.sin(0.5 * t), np.cos(0.5 * t), np.sin(t)
    return sr[..., None] * np.stack([s2, c2, s * s2, s * c2], axis=-1)


def branch_derivatives(r, theta, frame: TipFrame, eps: float = 1e-12) -> np.ndarray:
    """Global gradients of the four branch functions, shape (..., 4, 2)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= eps):
        raise NearTipError("branch-function gradient requested at the crack tip")
    t = np.asarray(theta, dtype=float)
    isr = 1.0 / np.sqrt(r)
    s2, c2, s, c = np.sin(0.5 * t), np.cos(0.5 * t), np.sin(t), np.cos(t)
    # d/dr and (1/r) d/dtheta
    dr = 0.5 * isr[..., None] * np.stack([s2, c2, s * s2, s * c2], axis=-1)
    dt = isr[..., None] * np.stack([0.5 * c2, -0.5 * s2, c * s2 + 0.5 * s * c2, c * c2 - 0.5 * s * s2], axis=-1)
    dx = c[..., None] * dr - s[..., None] * dt
    dy = s[..., None] * dr + c[..., None] * dt
    local = np.stack([dx, dy], axis=-1)
    return local @ frame.rotation


def abs_enrichment(phi, grad_phi=None):
    """|phi| and, when ``grad_phi`` is given, its gradient sign(phi) grad_phi (sign(0) = +1)."""
    phi = np.asarray(phi, dtype=float)
    value = np.abs(phi)
    if grad_phi is None:
        return value
    sgn = np.where(phi >= 0.0, 1.0, -1.0)
    return value, sgn[..., None] * np.asarray(grad_phi, dtype=float)


# --------------------------------------------------------------------------- bookkeeping


@dataclass(frozen=True, eq=False)
class Enrichment:
    """One family of enriched DOFs: ``n_funcs`` vector functions on each node in ``nodes``.

    DOF of (node position p, function f, component c) is ``start + 2 (p n_funcs + f) + c``.
    """

    kind: str  # "heaviside" | "branch" | "abs"
    nodes: np.ndarray
    n_funcs: int
    start: int
    source: int
    end: int | None = None
    frame: TipFrame | None = None
    path: CrackPath | None = None
    interface: InterfaceLine | None = None

    @property
    def size(self) -> int:
        return 2 * self.n_funcs * len(self.nodes)

    def position(self, node: int) -> int:
        p = int(np.searchsorted(self.nodes, node))
        if p >= len(self.nodes) or self.nodes[p] != node:
            return -1
        return p

    def dofs(self, node: int) -> np.ndarray:
        p = self.position(node)
        if p < 0:
            raise KeyError(node)
        return self.start + 2 * self.n_funcs * p + np.arange(2 * self.n_funcs)

    def evaluate(self, x, sides=None, same_source: bool = False):
        """Function values (m, n_funcs) and gradients (m, n_funcs, 2) at points ``x``.

        ``sides`` are the piece labels of the points when they come from an
        element cut by this enrichment's own discontinuity.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        m = len(x)
        if self.kind == "heaviside":
            if same_source and sides is not None and np.all(sides != 0):
                h = np.asarray(sides, dtype=float)
            else:
                h = side_of_points(x, self.path).astype(float)
            return h[:, None], np.zeros((m, 1, 2))
        if self.kind == "branch":
            r, t = self.frame.polar(x)
            if same_source and sides is not None:
                # put points on the correct face where the cut is close to the branch line
                want = np.asarray(sides) * (1 if self.end == 1 else -1)
                flip = (np.abs(t) > 0.5 * np.pi) & (want != 0) & (np.sign(t) != want)
                t = np.where(flip, t - 2.0 * np.pi * np.sign(t), t)
            return branch_functions(r, t), branch_derivatives(r, t, self.frame)
        if self.kind == "abs":
            phi = signed_distance(x, self.interface)
            v, g = abs_enrichment(phi, np.broadcast_to(self.interface.normal, (m, 2)))
            return v[:, None], g[:, None, :]
        raise ValueError(self.kind)


@dataclass
class Cut:
    source: int
    clip: ClipResult
    end: int | None = None


@dataclass(eq=False)
class DofMap:
    """Standard DOFs 2n, 2n+1 per node followed by the enrichment blocks."""

    n_nodes: int
    enrichments: list[Enrichment]
    cuts: dict[int, Cut] = field(default_factory=dict)
    element_enrichments: dict[int, list[int]] = field(default_factory=dict)

    @property
    def n_standard(self) -> int:
        return 2 * self.n_nodes

    @property
    def ndof(self) -> int:
        return self.n_standard + sum(b.size for b in self.enrichments)

    def standard_dofs(self, node: int) -> np.ndarray:
        return np.array([2 * node, 2 * node + 1])

    def nodes_of(self, kind: str, source: int | None = None) -> np.ndarray:
        sel = [b.nodes for b in self.enrichments if b.kind == kind and (source is None or b.source == source)]
        return np.unique(np.concatenate(sel)) if sel else np.zeros(0, dtype=np.int64)

    def enriched_nodes(self) -> np.ndarray:
        if not self.enrichments:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate([b.nodes for b in self.enrichments]))

    def is_enriched_element(self, e: int) -> bool:
        return bool(self.element_enrichments.get(e))


# --------------------------------------------------------------------------- classification


def _candidate_elements(mesh: Mesh, path: CrackPath, pad: float) -> np.ndarray:
    v = path.vertices
    lo = v.min(axis=0) - pad
    hi = v.max(axis=0) + pad
    exy = mesh.element_xy
    emin, emax = exy.min(axis=1), exy.max(axis=1)
    return np.nonzero(np.all(emax >= lo, axis=1) & np.all(emin <= hi, axis=1))[0]


def cut_elements(mesh: Mesh, path: CrackPath) -> dict[int, ClipResult]:
    """Clip every element near ``path``; returns only the cut ones."""
    out = {}
    pad = 2.0 * mesh.h
    for e in _candidate_elements(mesh, path, pad):
        clip = clip_element(mesh.element_vertices(e), path)
        if clip.is_cut:
            out[int(e)] = clip
    return out


def _tip_elements(path: CrackPath, cuts: dict[int, ClipResult]) -> dict[int, int]:
    """Map active end -> the element containing that tip."""
    out = {}
    for end in path.active_ends():
        tip = path.end_frame(end).point
        owners = [e for e, c in sorted(cuts.items())
                  if c.kind == "tip" and any(np.allclose(tip, p, rtol=0, atol=1e-12 * (1 + np.abs(tip).max()))
                                             for p in c.tip_points)]
        if not owners:
            raise UnsupportedGeometryError(f"crack tip {tip} lies in no cut element "
                                           "(outside the mesh, or the crack runs along element edges)")
        out[end] = owners[0]
    return out


def _side_areas(mesh: Mesh, e: int, path: CrackPath, cuts: dict[int, ClipResult]) -> tuple[float, float]:
    clip = cuts.get(e)
    if clip is not None and clip.kind == "split":
        pos = sum(p.area for p, s in zip(clip.polygons, clip.sides) if s > 0)
        neg = sum(p.area for p, s in zip(clip.polygons, clip.sides) if s < 0)
        return pos, neg
    centroid = mesh.element_xy[e].mean(axis=0)
    try:
        s = int(side_of_points(centroid[None, :], path)[0])
    except OnDiscontinuityError:
        s = 0
    a = float(mesh.element_areas[e])
    return (a, 0.0) if s >= 0 else (0.0, a)


def _classify(mesh: Mesh, path: CrackPath, cuts: dict[int, ClipResult]):
    tips = _tip_elements(path, cuts)
    tip_nodes = {end: np.array(sorted(mesh.elements[e]), dtype=np.int64) for end, e in tips.items()}
    nf = np.unique(np.concatenate(list(tip_nodes.values()))) if tip_nodes else np.zeros(0, dtype=np.int64)
    split_nodes = set()
    for e, c in cuts.items():
        if c.kind == "split":
            split_nodes.update(int(n) for n in mesh.elements[e])
    nc = []
    for n in sorted(split_nodes - set(nf.tolist())):
        support = mesh.node_elements[n]
        pos = neg = 0.0
        for e in support:
            if e in tips.values():
                continue
            a, b = _side_areas(mesh, int(e), path, cuts)
            pos += a
            neg += b
        total = float(mesh.element_areas[support].sum())
        if min(pos, neg) > SPLIT_AREA_FRACTION * total:
            nc.append(n)
    return np.array(nc, dtype=np.int64), nf, tip_nodes, tips


def classify_nodes(mesh: Mesh, crack: CrackPath) -> tuple[np.ndarray, np.ndarray]:
    """Heaviside-enriched nodes (support split by the crack) and tip-enriched nodes."""
    nc, nf, _, _ = _classify(mesh, crack, cut_elements(mesh, crack))
    return nc, nf


def build_dofmap(mesh: Mesh, cracks=(), interface: InterfaceLine | None = None) -> DofMap:
    """Classify nodes for every crack (and an optional material interface) and number the DOFs."""
    cracks = list(cracks)
    enrichments: list[Enrichment] = []
    cuts: dict[int, Cut] = {}
    start = 2 * mesh.n_nodes

    def claim(e: int, cut: Cut):
        if e in cuts:
            raise UnsupportedGeometryError(f"element {e} is cut by more than one discontinuity")
        cuts[e] = cut

    for ci, crack in enumerate(cracks):
        clips = cut_elements(mesh, crack)
        nc, _, tip_nodes, tips = _classify(mesh, crack, clips)
        tip_of = {e: end for end, e in tips.items()}
        for e, clip in clips.items():
            claim(e, Cut(ci, clip, tip_of.get(e)))
        if len(nc):
            b = Enrichment("heaviside", nc, 1, start, ci, path=crack)
            enrichments.append(b)
            start += b.size
        for end, nodes in tip_nodes.items():
            b = Enrichment("branch", nodes, 4, start, ci, end=end, frame=crack.end_frame(end), path=crack)
            enrichments.append(b)
            start += b.size

    if interface is not None:
        src = len(cracks)
        x0, y0, x1, y1 = mesh.bounds
        reach = 4.0 * np.hypot(x1 - x0, y1 - y0)
        path = interface.as_path(reach)
        clips = cut_elements(mesh, path)
        nodes = set()
        for e, clip in clips.items():
            if clip.kind != "split":
                continue
            claim(e, Cut(src, clip))
            nodes.update(int(n) for n in mesh.elements[e])
        if nodes:
            b = Enrichment("abs", np.array(sorted(nodes), dtype=np.int64), 1, start, src, interface=interface)
            enrichments.append(b)
            start += b.size

    elem_map: dict[int, list[int]] = {}
    for k, b in enumerate(enrichments):
        for n in b.nodes:
            for e in mesh.node_elements[n]:
                lst = elem_map.setdefault(int(e), [])
                if not lst or lst[-1] != k:
                    lst.append(k)
    return DofMap(mesh.n_nodes, enrichments, cuts, elem_map)
