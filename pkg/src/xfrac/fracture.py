"""Near-tip reference fields, interaction-integral SIFs, kink angle and quasi-static growth."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ExtractionDomainError, GrowthTerminated, NearTipError, NoDirectionError
from .fem import (Discretization, DisplacementField, MaterialModel, assemble, d_matrix, discretize,
                  element_functions, solve)
from .geometry import CrackPath, TipFrame, _point_segment_distance
from .mesh import Mesh, shape_gradients
from .quadrature import QuadratureConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SifPair:
    K_I: float
    K_II: float
    r_d: float = float("nan")

    def __iter__(self):
        return iter((self.K_I, self.K_II))


# --------------------------------------------------------------------------- reference fields


def westergaard_stress(K: SifPair, r, theta) -> np.ndarray:
    """Asymptotic (sigma_x, sigma_y, sigma_xy) in the tip frame, shape (..., 3)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise NearTipError("stress field is singular at r = 0")
    t = np.asarray(theta, dtype=float)
    a = 1.0 / np.sqrt(2.0 * math.pi * r)
    s2, c2 = np.sin(0.5 * t), np.cos(0.5 * t)
    s32, c32 = np.sin(1.5 * t), np.cos(1.5 * t)
    k1, k2 = K.K_I, K.K_II
    sxx = a * (k1 * c2 * (1 - s2 * s32) - k2 * s2 * (2 + c2 * c32))
    syy = a * (k1 * c2 * (1 + s2 * s32) + k2 * s2 * c2 * c32)
    sxy = a * (k1 * s2 * c2 * c32 + k2 * c2 * (1 - s2 * s32))
    return np.stack([sxx, syy, sxy], axis=-1)


def westergaard_disp(K: SifPair, r, theta, E: float, nu: float, plane_strain: bool = True) -> np.ndarray:
    """Asymptotic (u_x, u_y) in the tip frame, shape (..., 2)."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(theta, dtype=float)
    mu = E / (2.0 * (1.0 + nu))
    kappa = 3.0 - 4.0 * nu if plane_strain else (3.0 - nu) / (1.0 + nu)
    a = np.sqrt(np.maximum(r, 0.0) / (2.0 * math.pi)) / (2.0 * mu)
    s2, c2, c = np.sin(0.5 * t), np.cos(0.5 * t), np.cos(t)
    k1, k2 = K.K_I, K.K_II
    ux = a * (k1 * c2 * (kappa - c) + k2 * s2 * (kappa + 2 + c))
    uy = a * (k1 * s2 * (kappa - c) - k2 * c2 * (kappa - 2 + c))
    return np.stack([ux, uy], axis=-1)


def _aux_gradient(K: SifPair, r, theta, E, nu, plane_strain) -> np.ndarray:
    """Closed-form d u_i / d x_j of the asymptotic field in the tip frame, shape (..., 2, 2)."""
    t = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    mu = E / (2.0 * (1.0 + nu))
    kappa = 3.0 - 4.0 * nu if plane_strain else (3.0 - nu) / (1.0 + nu)
    s2, c2, s, c = np.sin(0.5 * t), np.cos(0.5 * t), np.sin(t), np.cos(t)
    k1, k2 = K.K_I, K.K_II
    # u = sqrt(r) g(theta) / (2 mu sqrt(2 pi)); du/dr = u / (2r), du/dtheta = sqrt(r) g'(theta) ...
    gx = k1 * c2 * (kappa - c) + k2 * s2 * (kappa + 2 + c)
    gy = k1 * s2 * (kappa - c) - k2 * c2 * (kappa - 2 + c)
    dgx = k1 * (-0.5 * s2 * (kappa - c) + c2 * s) + k2 * (0.5 * c2 * (kappa + 2 + c) - s2 * s)
    dgy = k1 * (0.5 * c2 * (kappa - c) + s2 * s) - k2 * (-0.5 * s2 * (kappa - 2 + c) - c2 * s)
    pre = 1.0 / (2.0 * mu * math.sqrt(2.0 * math.pi) * np.sqrt(r))
    out = np.empty(r.shape + (2, 2))
    for i, (g, dg) in enumerate(((gx, dgx), (gy, dgy))):
        dr = 0.5 * g * pre
        dth = dg * pre  # (1/r) du/dtheta
        out[..., i, 0] = c * dr - s * dth
        out[..., i, 1] = s * dr + c * dth
    return out


# --------------------------------------------------------------------------- extraction


def _weight_nodes(mesh: Mesh, tip: np.ndarray, r_d: float) -> np.ndarray:
    r = np.linalg.norm(mesh.nodes - tip, axis=1)
    return np.clip((r_d - r) / (0.5 * r_d), 0.0, 1.0)


def _domain_conflict(field_: DisplacementField, frame: TipFrame, r_d: float, own: CrackPath | None) -> str | None:
    mesh = field_.disc.mesh
    h = mesh.h
    x0, y0, x1, y1 = mesh.bounds
    p = frame.point
    if min(p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1]) < r_d + h:
        return "outer boundary"
    for c in field_.disc.cracks:
        if c is own:
            continue
        v = c.vertices
        d = min(float(_point_segment_distance(p[None], v[i], v[i + 1])[0]) for i in range(len(v) - 1))
        if d < r_d + h:
            return "another crack"
    return None


def interaction_integral(field_: DisplacementField, frame: TipFrame, r_d: float | None = None,
                         crack: CrackPath | None = None, end: int | None = None) -> SifPair:
    """Mixed-mode SIFs from the equivalent-domain interaction integral.

    The weight q is 1 within r_d/2 of the tip, 0 beyond r_d, bilinear between
    nodes. ``crack``/``end`` identify the tip so points behind it are put on
    the correct crack face.
    """
    disc = field_.disc
    mesh, mat = disc.mesh, disc.material
    if r_d is None:
        r_d = 3.0 * mesh.h
    why = _domain_conflict(field_, frame, r_d, crack)
    if why is not None:
        p = frame.point
        x0, y0, x1, y1 = mesh.bounds
        room = min(p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1]) - mesh.h
        new = 0.9 * room if why == "outer boundary" else 0.5 * r_d
        log.warning("extraction domain r_d=%.4g meets %s; shrinking to %.4g", r_d, why, new)
        r_d = new
        if r_d <= mesh.h or _domain_conflict(field_, frame, r_d, crack) is not None:
            raise ExtractionDomainError(f"no admissible extraction radius (conflict with {why})")
    q = _weight_nodes(mesh, frame.point, r_d)
    conn = mesh.elements
    qe = q[conn]
    active = np.nonzero(qe.max(axis=1) - qe.min(axis=1) > 0)[0]
    R = frame.rotation
    plane_strain = mat.regime == "plane_strain"
    aux_I, aux_II = SifPair(1.0, 0.0), SifPair(0.0, 1.0)
    I = np.zeros(2)
    own_source = None
    if crack is not None:
        for k, c in enumerate(disc.cracks):
            if c is crack:
                own_source = k
    for e in active:
        qs = disc.quadrature[e]
        _, grad, dofs = element_functions(disc, e, qs.parent, qs.points, qs.sides)
        ue = field_.u[dofs]
        G = np.einsum("mkj,ki->mij", grad, ue)  # du_i/dx_j, global
        eps = np.stack([G[:, 0, 0], G[:, 1, 1], G[:, 0, 1] + G[:, 1, 0]], axis=1)
        D = d_matrix(mat, qs.points)
        sv = np.einsum("mij,mj->mi", D, eps)
        S = np.stack([np.stack([sv[:, 0], sv[:, 2]], -1), np.stack([sv[:, 2], sv[:, 1]], -1)], 1)
        # local frame
        Gl = R @ G @ R.T
        Sl = R @ S @ R.T
        dN = np.einsum("mab,mib->mia", np.linalg.inv(
            np.swapaxes(shape_gradients(qs.parent), -1, -2) @ mesh.element_vertices(e)), shape_gradients(qs.parent))
        dq = np.einsum("mia,i->ma", dN, q[conn[e]]) @ R.T
        r, th = frame.polar(qs.points)
        cut = disc.dofmap.cuts.get(int(e))
        if cut is not None and own_source is not None and cut.source == own_source and end is not None:
            want = qs.sides * (1 if end == 1 else -1)
            flip = (np.abs(th) > 0.5 * np.pi) & (want != 0) & (np.sign(th) != want)
            th = np.where(flip, th - 2.0 * np.pi * np.sign(th), th)
        for k, aux in enumerate((aux_I, aux_II)):
            sa = westergaard_stress(aux, r, th)
            Sa = np.stack([np.stack([sa[:, 0], sa[:, 2]], -1), np.stack([sa[:, 2], sa[:, 1]], -1)], 1)
            Ga = _aux_gradient(aux, r, th, mat.E, mat.nu, plane_strain)
            ea = 0.5 * (Ga + np.swapaxes(Ga, 1, 2))
            W = np.einsum("mij,mij->m", Sl, ea)
            term = (np.einsum("mij,mi->mj", Sl, Ga[:, :, 0]) + np.einsum("mij,mi->mj", Sa, Gl[:, :, 0]))
            term[:, 0] -= W
            I[k] += np.sum(qs.weights * np.einsum("mj,mj->m", term, dq))
    Ks = 0.5 * mat.e_star * I
    return SifPair(float(Ks[0]), float(Ks[1]), float(r_d))


# --------------------------------------------------------------------------- growth


def hoop_angle(K: SifPair | tuple) -> float:
    """Kink angle of the maximum hoop stress criterion (radians, CCW from the tip tangent)."""
    k1, k2 = (float(v) for v in K)
    if k1 == 0.0 and k2 == 0.0:
        raise NoDirectionError("K_I = K_II = 0: no growth direction")
    if k2 == 0.0:
        return 0.0
    if k1 > 0.0 and abs(k2) <= k1:
        ratio = k2 / k1
        return 2.0 * math.atan(-2.0 * ratio / (1.0 + math.sqrt(1.0 + 8.0 * ratio * ratio)))
    # rationalised form: no cancellation once |K_II| > K_I, and no overflow of K_II / K_I
    return 2.0 * math.atan((k1 - math.hypot(k1, math.sqrt(8.0) * k2)) / (4.0 * k2))


def grow_crack(crack: CrackPath, end: int, theta_c: float, da: float, bounds=None) -> CrackPath:
    """Append a segment of length ``da`` at the kink angle ``theta_c`` to the chosen tip."""
    if da <= 0:
        raise ValueError("crack advance must be positive")
    frame = crack.end_frame(end)
    phi = frame.angle + theta_c
    p = frame.point + da * np.array([math.cos(phi), math.sin(phi)])
    if bounds is not None:
        x0, y0, x1, y1 = bounds
        if not (x0 < p[0] < x1 and y0 < p[1] < y1):
            raise GrowthTerminated(f"new tip {p} leaves the domain")
    return crack.with_vertex(p, end)


@dataclass
class GrowthStep:
    step: int
    crack: CrackPath
    sif: SifPair | None
    theta_c: float | None

    @property
    def tip(self) -> np.ndarray:
        return self.crack.vertices[-1]


@dataclass
class GrowthProblem:
    """Everything a growth step needs; ``boundary`` adds loads and constraints to a system."""

    mesh: Mesh
    material: MaterialModel
    crack: CrackPath
    boundary: Callable
    end: int = 1
    config: QuadratureConfig = field(default_factory=QuadratureConfig)
    r_d: float | None = None


def solve_problem(problem: GrowthProblem, crack: CrackPath):
    disc = discretize(problem.mesh, problem.material, [crack], problem.config)
    system = problem.boundary(disc, assemble(disc))
    return solve(system, disc)


def quasi_static_run(problem: GrowthProblem, n_steps: int, da: float) -> list[GrowthStep]:
    """Repeat solve, extract, kink and advance; returns the initial state plus one entry per step."""
    crack = problem.crack
    history = [GrowthStep(0, crack, None, None)]
    for step in range(1, n_steps + 1):
        fld = solve_problem(problem, crack)
        frame = crack.end_frame(problem.end)
        sif = interaction_integral(fld, frame, problem.r_d, crack, problem.end)
        theta = hoop_angle(sif)
        history[-1].sif, history[-1].theta_c = sif, theta
        crack = grow_crack(crack, problem.end, theta, da, problem.mesh.bounds)
        history.append(GrowthStep(step, crack, None, None))
    return history


def write_history(history: list[GrowthStep], path, end: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "tip_x", "tip_y", "K1", "K2", "theta_c"])
        for h in history:
            tip = h.crack.end_frame(end).point
            k1 = "" if h.sif is None else repr(h.sif.K_I)
            k2 = "" if h.sif is None else repr(h.sif.K_II)
            th = "" if h.theta_c is None else repr(h.theta_c)
            w.writerow([h.step, repr(float(tip[0])), repr(float(tip[1])), k1, k2, th])
