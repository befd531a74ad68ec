"""Schwarz-Christoffel maps from the unit disk onto simple polygons, and disk cubature.

A polygon with vertices ``w_k`` and interior angles ``alpha_k * pi`` is the image of
the unit disk under

    f(z) = A + C * integral_0^z  prod_k (1 - s / z_k) ** beta_k  ds,   beta_k = alpha_k - 1,

with prevertices ``z_k`` on the unit circle. Integrating a function over the
polygon then reduces to a disk rule with weights scaled by ``|f'(z)|**2``.

Normalisation: the last prevertex sits at ``z = 1`` and ``f(0)`` is pinned at an
interior reference point (the centroid when it is comfortably inside).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import CrowdingError, DegenerateGeometryError, SolverFailureError
from .geometry import Polygon, signed_area, triangulate

log = logging.getLogger(__name__)

DEFAULT_NODES = 8
CROWDING_GAP = 1e-10
# log-gap unknowns beyond this only describe crowded prevertices
Y_LIMIT = 30.0
STALL_FACTOR = 100.0


@lru_cache(maxsize=None)
def _jacobi(n: int, beta_key: float):
    # weight (1 + x) ** beta on [-1, 1]: the singularity sits at the left end
    x, w = roots_jacobi(n, 0.0, beta_key)
    return x, w


@lru_cache(maxsize=None)
def _legendre(n: int):
    return roots_legendre(n)


def _angles_to_betas(poly: Polygon) -> np.ndarray:
    alpha = poly.interior_angles() / math.pi
    if np.any(alpha <= 1e-12) or np.any(alpha >= 2.0 - 1e-12):
        raise DegenerateGeometryError("interior angles of 0 or 2*pi are not mappable")
    return alpha - 1.0


class _Integrand:
    """Compound Gauss-Jacobi integration of prod (1 - s/z_k)^beta_k along straight paths."""

    def __init__(self, prevertices: np.ndarray, betas: np.ndarray, nodes: int):
        self.z = prevertices
        self.beta = betas
        self.nodes = nodes

    def _factor(self, s: np.ndarray, skip: np.ndarray | None = None) -> np.ndarray:
        terms = 1.0 - s[..., None] / self.z
        logs = np.log(terms) * self.beta
        if skip is not None:
            logs = np.where(skip, 0.0, logs)
        return np.exp(logs.sum(axis=-1))

    def derivative(self, s) -> np.ndarray:
        return self._factor(np.asarray(s, dtype=complex))

    def integrate(self, za, zb, start) -> np.ndarray:
        """Integrals from za to zb (straight lines). ``start[i] = k`` flags za[i] == z_k, else -1."""
        za = np.atleast_1d(np.asarray(za, dtype=complex))
        zb = np.atleast_1d(np.asarray(zb, dtype=complex))
        start = np.atleast_1d(np.asarray(start, dtype=int))
        out = np.zeros(len(za), dtype=complex)
        zl = za.copy()
        n = len(self.z)
        q = self.nodes

        for k in np.unique(start[start >= 0]):
            m = np.nonzero(start == k)[0]
            others = np.delete(self.z, k)
            dmin = np.min(np.abs(za[m, None] - others[None, :]), axis=1)
            span = zb[m] - za[m]
            length = np.abs(span)
            L = np.minimum(length, dmin * (2.0 / 3.0))
            zr = za[m] + span * np.divide(L, length, out=np.zeros_like(L), where=length > 0)
            bk = float(self.beta[k])
            x, w = _jacobi(q, round(bk, 14))
            half = 0.5 * (zr - za[m])
            nd = za[m, None] + half[:, None] * (1.0 + x[None, :])
            skip = np.zeros(n, dtype=bool)
            skip[k] = True
            body = self._factor(nd, skip) @ w
            # (1 - s/z_k)^beta_k = (t |zr - za|)^beta_k e^{i beta_k phi} along the path, t in [0, 1]
            phi = np.angle(-(zr - za[m]) / self.z[k])
            sing = (np.abs(half) ** bk) * np.exp(1j * bk * phi)
            out[m] = half * sing * body
            zl[m] = zr

        xg, wg = _legendre(q)
        active = np.abs(zb - zl) > 1e-15 * np.maximum(1.0, np.abs(zb - za))
        for _ in range(200):
            if not np.any(active):
                break
            idx = np.nonzero(active)[0]
            dmin = np.min(np.abs(zl[idx, None] - self.z[None, :]), axis=1)
            span = zb[idx] - zl[idx]
            length = np.abs(span)
            L = np.minimum(length, dmin * (2.0 / 3.0))
            zr = zl[idx] + span * (L / length)
            half = 0.5 * (zr - zl[idx])
            nd = 0.5 * (zr + zl[idx])[:, None] + half[:, None] * xg[None, :]
            out[idx] += half * (self._factor(nd) @ wg)
            done = L >= length * (1.0 - 1e-14)
            zl[idx] = np.where(done, zb[idx], zr)
            active[idx] = ~done
        else:
            raise SolverFailureError("compound quadrature did not terminate")
        return out


@dataclass(frozen=True, eq=False)
class ConformalMap:
    """Solved disk-to-polygon Schwarz-Christoffel map."""

    polygon: Polygon
    prevertex_args: np.ndarray
    scale: complex
    offset: complex
    betas: np.ndarray
    residual: float = 0.0
    nodes: int = DEFAULT_NODES

    @property
    def prevertices(self) -> np.ndarray:
        return np.exp(1j * self.prevertex_args)

    @property
    def vertices(self) -> np.ndarray:
        v = self.polygon.vertices
        return v[:, 0] + 1j * v[:, 1]

    @property
    def _integrand(self) -> _Integrand:
        return _Integrand(self.prevertices, self.betas, self.nodes)

    def __call__(self, zeta):
        return map_eval(self, zeta)

    def derivative(self, zeta):
        return map_derivative(self, zeta)

    def vertex_error(self) -> float:
        """max_k |f(z_k) - w_k| with f(z_k) integrated from the conformal centre."""
        z = self.prevertices
        n = len(z)
        w = self.offset - self.scale * self._integrand.integrate(z, np.zeros(n, dtype=complex), np.arange(n))
        return float(np.max(np.abs(w - self.vertices)))

    def transformed(self, s: float, t: complex) -> "ConformalMap":
        """Map onto the image polygon under w -> s * w + t (s > 0)."""
        poly = Polygon(self.polygon.vertices * s + np.array([t.real, t.imag]))
        return ConformalMap(poly, self.prevertex_args, self.scale * s, self.offset * s + t,
                            self.betas, self.residual, self.nodes)

    def to_json(self) -> str:
        return json.dumps(
            {
                "vertices": self.polygon.vertices.tolist(),
                "prevertex_args": np.asarray(self.prevertex_args).tolist(),
                "C": [self.scale.real, self.scale.imag],
                "A": [self.offset.real, self.offset.imag],
                "betas": np.asarray(self.betas).tolist(),
                "residual": self.residual,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ConformalMap":
        d = json.loads(text)
        return cls(
            Polygon(np.array(d["vertices"])),
            np.array(d["prevertex_args"]),
            complex(*d["C"]),
            complex(*d["A"]),
            np.array(d["betas"]),
            d["residual"],
        )


def conformal_center(poly: Polygon) -> np.ndarray:
    """Interior point used as f(0): the centroid unless it is outside or hugging the boundary."""
    c = poly.centroid()
    cands = [poly.vertices[list(t)].mean(axis=0) for t in triangulate(poly)]
    clear = poly.boundary_distance(np.array(cands))
    best = cands[int(np.argmax(clear))]
    if poly.contains(c)[0]:
        cc = poly.boundary_distance(c)[0]
        if cc >= 0.5 * clear.max():
            return c
    return best


def _gaps_from(y: np.ndarray) -> np.ndarray:
    e = np.exp(np.append(y, 0.0) - max(np.max(y, initial=0.0), 0.0))
    return 2.0 * math.pi * e / e.sum()


def _solve_normalized(wv: np.ndarray, betas: np.ndarray, wc: complex, tol: float, nodes: int,
                      max_iter: int = 100):
    n = len(wv)
    side = np.roll(wv, -1) - wv
    L = np.abs(side)
    target_center = np.log((wc - wv[n - 1]) / (wv[0] - wv[n - 1]))
    sides = list(range(0, n - 2)) + [n - 1]

    def prevertices(y):
        theta = np.cumsum(_gaps_from(y))
        return theta, np.exp(1j * theta)

    def residual(y):
        theta, z = prevertices(y)
        z[-1] = 1.0
        f = _Integrand(z, betas, nodes)
        js = np.array(sides)
        a = z[js]
        b = z[(js + 1) % n]
        mid = 0.5 * (a + b)
        za = np.concatenate([a, b, [z[n - 1]]])
        zb = np.concatenate([mid, mid, [0.0]])
        st = np.concatenate([js, (js + 1) % n, [n - 1]])
        vals = f.integrate(za, zb, st)
        m = len(js)
        chord = vals[:m] - vals[m:2 * m]
        radial = vals[-1]
        F = []
        ref = chord[0]
        for i, j in enumerate(sides):
            if 1 <= j <= n - 3:
                F.append(math.log(abs(chord[i]) / abs(ref)) - math.log(L[j] / L[0]))
        c = np.log(radial / chord[-1]) - target_center
        im = (c.imag + math.pi) % (2.0 * math.pi) - math.pi
        F.extend([c.real, im])
        return np.array(F), z, theta

    y = np.zeros(n - 1)
    F, z, theta = residual(y)
    norm = np.max(np.abs(F))
    history = [norm]
    it = 0
    while norm >= tol:
        if it >= max_iter:
            raise SolverFailureError(f"SC parameter problem: no convergence after {max_iter} iterations "
                                     f"(residual {norm:.3e})", residual=norm, history=history)
        it += 1
        J = np.empty((len(F), n - 1))
        h = 1e-7
        for j in range(n - 1):
            yp = y.copy()
            yp[j] += h
            J[:, j] = (residual(yp)[0] - F) / h
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        stalled = False
        while True:
            y_new = np.clip(y + lam * step, -Y_LIMIT, Y_LIMIT)
            try:
                with np.errstate(all="ignore"):
                    F_new, z_new, theta_new = residual(y_new)
                n_new = float(np.max(np.abs(F_new)))
            except SolverFailureError:
                n_new = math.inf
            if not math.isfinite(n_new):
                if lam < 1e-6:
                    raise SolverFailureError("SC parameter problem: line search left the admissible region",
                                             residual=norm, history=history)
            elif n_new < (1.0 - 1e-4 * lam) * norm:
                break
            elif lam < 1e-6:
                if norm < STALL_FACTOR * tol:
                    # quadrature noise floor just above tol: accept the current iterate
                    log.debug("SC solve stalled at residual %.2e", norm)
                    n_new, y_new, F_new, z_new, theta_new = norm, y, F, z, theta
                    stalled = True
                break
            lam *= 0.5
        y, F, z, theta, norm = y_new, F_new, z_new, theta_new, n_new
        history.append(norm)
        if stalled:
            break
        gaps = np.diff(np.concatenate([[0.0], theta]))
        if gaps.min() < CROWDING_GAP:
            raise CrowdingError(f"prevertex crowding (min gap {gaps.min():.2e}); simplify the polygon",
                                min_gap=float(gaps.min()))
    theta = theta.copy()
    theta[-1] = 2.0 * math.pi
    gaps = np.diff(np.concatenate([[0.0], theta]))
    if gaps.min() < CROWDING_GAP:
        raise CrowdingError(f"prevertex crowding (min gap {gaps.min():.2e})", min_gap=float(gaps.min()))
    return theta, norm


@lru_cache(maxsize=4096)
def _solve_cached(key: tuple, tol: float, nodes: int):
    n = len(key) // 2
    v = np.array(key, dtype=float).reshape(n, 2)
    poly = Polygon(v)
    betas = _angles_to_betas(poly)
    c = conformal_center(poly)
    wv = v[:, 0] + 1j * v[:, 1]
    wc = complex(c[0], c[1])
    with np.errstate(all="ignore"):
        theta, res = _solve_normalized(wv, betas, wc, tol, nodes)
    z = np.exp(1j * theta)
    z[-1] = 1.0
    f = _Integrand(z, betas, nodes)
    I0 = -f.integrate(z, np.zeros(n, dtype=complex), np.arange(n))
    C = complex(np.sum(np.conj(I0) * (wv - wc)) / np.sum(np.abs(I0) ** 2))
    return ConformalMap(poly, theta, C, wc, betas, float(res), nodes)


def solve_parameter_problem(poly: Polygon, tol: float = 1e-10, nodes: int = DEFAULT_NODES) -> ConformalMap:
    """Solve for prevertices, scale and offset of the disk map onto ``poly``.

    Solutions are cached per shape up to translation and scaling.

    Raises
    ------
    SolverFailureError
        Newton did not reach ``tol`` (the error carries the residual norm).
    CrowdingError
        Two prevertices came closer than 1e-10 rad.
    """
    poly = poly.normalized()
    signed_area(poly)
    v = poly.vertices
    origin = v[0]
    s = poly.diameter
    key = tuple(np.round((v - origin) / s, 13).ravel().tolist())
    base = _solve_cached(key, float(tol), int(nodes))
    mapped = base.transformed(s, complex(origin[0], origin[1]))
    return ConformalMap(poly, mapped.prevertex_args, mapped.scale, mapped.offset, mapped.betas,
                        mapped.residual, mapped.nodes)


def map_eval(cmap: ConformalMap, zeta):
    """f(zeta) for |zeta| <= 1. Integrates from whichever of 0 or the prevertices is nearest."""
    zeta = np.asarray(zeta, dtype=complex)
    flat = np.atleast_1d(zeta).ravel()
    z = cmap.prevertices
    dz = np.abs(flat[:, None] - z[None, :])
    k = np.argmin(dz, axis=1)
    from_vertex = dz[np.arange(len(flat)), k] < np.abs(flat)
    start = np.where(from_vertex, k, -1)
    za = np.where(from_vertex, z[k], 0.0)
    base = np.where(from_vertex, cmap.vertices[k], cmap.offset)
    at_vertex = from_vertex & (dz[np.arange(len(flat)), k] == 0.0)
    out = np.array(base, dtype=complex)
    todo = ~at_vertex
    if np.any(todo):
        out[todo] = base[todo] + cmap.scale * cmap._integrand.integrate(za[todo], flat[todo], start[todo])
    return out.reshape(zeta.shape) if zeta.ndim else complex(out[0])


def map_derivative(cmap: ConformalMap, zeta):
    """f'(zeta) = C prod (1 - zeta/z_k)^beta_k, defined for |zeta| < 1."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.abs(zeta) >= 1.0):
        raise ValueError("map_derivative is only defined strictly inside the unit disk")
    out = cmap.scale * cmap._integrand.derivative(zeta)
    return out if zeta.ndim else complex(out)


# --------------------------------------------------------------------------- disk rules


@dataclass(frozen=True, eq=False)
class DiskRule:
    points: np.ndarray
    weights: np.ndarray
    kind: str = ""

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def complex_points(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    def integrate(self, func) -> float:
        return float(np.dot(self.weights, func(self.points[:, 0], self.points[:, 1])))


def midpoint_disk_rule(n_r: int, n_t: int) -> DiskRule:
    """Polar midpoint rule: cell centres of an n_r x n_t polar grid, weights equal to cell areas."""
    if n_r < 1 or n_t < 1:
        raise ValueError("midpoint rule needs n_r, n_t >= 1")
    edges = np.arange(n_r + 1) / n_r
    r = (np.arange(n_r) + 0.5) / n_r
    t = (np.arange(n_t) + 0.5) * 2.0 * math.pi / n_t
    cell = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2) * (2.0 * math.pi / n_t)
    R, T = np.meshgrid(r, t, indexing="ij")
    W = np.repeat(cell[:, None], n_t, axis=1)
    pts = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    return DiskRule(pts, W.ravel(), "midpoint")


def chebyshev_disk_rule(n_r: int, n_t: int) -> DiskRule:
    """Gauss rule in u = r**2 (Gauss-Legendre) times the trapezoid rule in angle."""
    if n_r < 1 or n_t < 2:
        raise ValueError("chebyshev rule needs n_r >= 1 and n_t >= 2")
    x, w = roots_legendre(n_r)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    r = np.sqrt(u)
    t = 2.0 * math.pi * np.arange(n_t) / n_t
    R, T = np.meshgrid(r, t, indexing="ij")
    W = np.repeat((0.5 * wu * 2.0 * math.pi / n_t)[:, None], n_t, axis=1)
    pts = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    return DiskRule(pts, W.ravel(), "chebyshev")


def disk_rule(kind: str, n_r: int, n_t: int) -> DiskRule:
    if kind == "midpoint":
        return midpoint_disk_rule(n_r, n_t)
    if kind == "chebyshev":
        return chebyshev_disk_rule(n_r, n_t)
    raise ValueError(f"unknown disk rule {kind!r}")


def polygon_quadrature(poly: Polygon, rule: DiskRule, tol: float = 1e-10,
                       cmap: ConformalMap | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Physical points f(zeta_j) and weights omega_j |f'(zeta_j)|**2 for a polygon."""
    if cmap is None:
        cmap = solve_parameter_problem(poly, tol)
    zeta = rule.complex_points
    w = map_eval(cmap, zeta)
    jac = np.abs(map_derivative(cmap, zeta)) ** 2
    return np.column_stack([w.real, w.imag]), rule.weights * jac
