"""Constitutive law, enriched strain-displacement operators, assembly and solution."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .enrichment import DofMap, build_dofmap
from .errors import ConvergenceError, OnDiscontinuityError, SingularSystemError
from .geometry import InterfaceLine, side_of_points
from .mesh import GAUSS2, Mesh, shape_functions, shape_gradients
from .quadrature import QuadratureConfig, QuadratureSet, element_rule

PLANE_STRAIN = "plane_strain"
PLANE_STRESS = "plane_stress"


@dataclass(frozen=True)
class MaterialModel:
    """Isotropic linear elasticity, optionally two-phase across a straight interface.

    ``region_E`` maps interface region labels to Young's moduli; points are
    assigned with ``interface.label_of``.
    """

    E: float
    nu: float
    regime: str = PLANE_STRAIN
    interface: InterfaceLine | None = None
    region_E: dict | None = None

    def __post_init__(self):
        if self.E <= 0 or not 0.0 <= self.nu < 0.5:
            raise ValueError("need E > 0 and 0 <= nu < 0.5")
        if self.regime not in (PLANE_STRAIN, PLANE_STRESS):
            raise ValueError(f"unknown regime {self.regime!r}")
        if (self.interface is None) != (self.region_E is None):
            raise ValueError("bimaterial needs both an interface and region moduli")
        if self.interface is not None:
            if set(self.region_E) != set(self.interface.labels):
                raise ValueError("region moduli must cover both interface labels")
            if min(self.region_E.values()) <= 0:
                raise ValueError("region moduli must be positive")

    @property
    def e_star(self) -> float:
        return self.E / (1.0 - self.nu ** 2) if self.regime == PLANE_STRAIN else self.E

    @property
    def kolosov(self) -> float:
        return 3.0 - 4.0 * self.nu if self.regime == PLANE_STRAIN else (3.0 - self.nu) / (1.0 + self.nu)

    @property
    def shear_modulus(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    def youngs_at(self, x, labels=None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.interface is None:
            return np.full(len(x), self.E)
        if labels is None:
            labels = self.interface.label_of(x)
        lut = self.region_E
        return np.array([lut[int(k)] for k in np.atleast_1d(labels)], dtype=float)


def _unit_d(nu: float, regime: str) -> np.ndarray:
    if regime == PLANE_STRAIN:
        c = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu))
        return c * np.array([[1.0 - nu, nu, 0.0], [nu, 1.0 - nu, 0.0], [0.0, 0.0, 0.5 - nu]])
    c = 1.0 / (1.0 - nu ** 2)
    return c * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]])


def d_matrix(mat: MaterialModel, x=None, labels=None) -> np.ndarray:
    """3x3 elasticity matrix (Voigt, engineering shear). Vectorised over x of shape (m, 2)."""
    base = _unit_d(mat.nu, mat.regime)
    if x is None:
        return mat.E * base
    x = np.asarray(x, dtype=float)
    E = mat.youngs_at(x, labels)
    out = E[:, None, None] * base
    return out[0] if x.ndim == 1 else out


# --------------------------------------------------------------------------- discretisation


@dataclass(eq=False)
class Discretization:
    mesh: Mesh
    material: MaterialModel
    dofmap: DofMap
    config: QuadratureConfig
    quadrature: list[QuadratureSet]
    cracks: list = field(default_factory=list)
    _slots: dict = field(default_factory=dict, repr=False)

    @property
    def ndof(self) -> int:
        return self.dofmap.ndof

    def element_slots(self, e: int):
        """(local node, enrichment index or -1, function index) per vector slot, and their DOFs (k, 2)."""
        if e in self._slots:
            return self._slots[e]
        conn = self.mesh.elements[e]
        slots = [(a, -1, 0) for a in range(4)]
        dofs = [[2 * n, 2 * n + 1] for n in conn]
        for k in self.dofmap.element_enrichments.get(e, []):
            b = self.dofmap.enrichments[k]
            for a, n in enumerate(conn):
                p = b.position(int(n))
                if p < 0:
                    continue
                for f in range(b.n_funcs):
                    slots.append((a, k, f))
                    d0 = b.start + 2 * (p * b.n_funcs + f)
                    dofs.append([d0, d0 + 1])
        out = (slots, np.array(dofs, dtype=np.int64))
        self._slots[e] = out
        return out

    def point_sides(self, e: int, x) -> np.ndarray:
        """Piece labels of arbitrary points in element e (0 when the element is uncut)."""
        cut = self.dofmap.cuts.get(e)
        x = np.atleast_2d(x)
        if cut is None:
            return np.zeros(len(x), dtype=np.int64)
        path = self._source_path(cut.source)
        return side_of_points(x, path, on_path="zero")

    def _source_path(self, source: int):
        if source < len(self.cracks):
            return self.cracks[source]
        x0, y0, x1, y1 = self.mesh.bounds
        return self.dofmap.enrichments[-1].interface.as_path(4.0 * np.hypot(x1 - x0, y1 - y0))


def discretize(mesh: Mesh, material: MaterialModel, cracks=(), config: QuadratureConfig = QuadratureConfig(),
               dofmap: DofMap | None = None) -> Discretization:
    """Classify nodes, number DOFs and build the quadrature of every element."""
    cracks = list(cracks)
    if dofmap is None:
        dofmap = build_dofmap(mesh, cracks, material.interface)
    quads = []
    for e in range(mesh.n_elements):
        cut = dofmap.cuts.get(e)
        quads.append(element_rule(mesh, e, cut.clip if cut else None, config,
                                  enriched=dofmap.is_enriched_element(e)))
    return Discretization(mesh, material, dofmap, config, quads, cracks)


def element_functions(disc: Discretization, e: int, xi, x, sides=None):
    """Values (m, k) and physical gradients (m, k, 2) of the k vector-slot functions of element e."""
    X = disc.mesh.element_vertices(e)
    xi = np.atleast_2d(xi)
    x = np.atleast_2d(x)
    m = len(xi)
    N = shape_functions(xi)
    dNdxi = shape_gradients(xi)
    J = np.swapaxes(dNdxi, -1, -2) @ X
    dN = np.einsum("mab,mib->mia", np.linalg.inv(J), dNdxi)
    slots, dofs = disc.element_slots(e)
    psi = np.empty((m, len(slots)))
    grad = np.empty((m, len(slots), 2))
    psi[:, :4] = N
    grad[:, :4] = dN
    cut = disc.dofmap.cuts.get(e)
    cache = {}
    for s, (a, k, f) in enumerate(slots[4:], start=4):
        if k not in cache:
            b = disc.dofmap.enrichments[k]
            cache[k] = b.evaluate(x, sides, same_source=cut is not None and cut.source == b.source)
        F, dF = cache[k]
        psi[:, s] = N[:, a] * F[:, f]
        grad[:, s] = dN[:, a, :] * F[:, f, None] + N[:, a, None] * dF[:, f, :]
    return psi, grad, dofs


def strain_operator(grad: np.ndarray) -> np.ndarray:
    """B (m, 3, 2k) from slot gradients (m, k, 2); columns ordered (x, y) per slot."""
    m, k, _ = grad.shape
    B = np.zeros((m, 3, 2 * k))
    B[:, 0, 0::2] = grad[..., 0]
    B[:, 1, 1::2] = grad[..., 1]
    B[:, 2, 0::2] = grad[..., 1]
    B[:, 2, 1::2] = grad[..., 0]
    return B


def b_matrices(disc: Discretization, e: int, xi, x, sides=None) -> dict:
    """Strain-displacement blocks split by kind: 'standard', 'heaviside', 'branch', 'abs'."""
    _, grad, _ = element_functions(disc, e, xi, x, sides)
    slots, _ = disc.element_slots(e)
    B = strain_operator(grad)
    out = {"standard": B[:, :, :8]}
    for kind in ("heaviside", "branch", "abs"):
        cols = [c for s, (_, k, _) in enumerate(slots) if k >= 0 and disc.dofmap.enrichments[k].kind == kind
                for c in (2 * s, 2 * s + 1)]
        out[kind] = B[:, :, cols]
    return out


def _point_labels(disc: Discretization, e: int, qs: QuadratureSet):
    mat = disc.material
    if mat.interface is None:
        return None
    cut = disc.dofmap.cuts.get(e)
    if cut is not None and cut.source == len(disc.cracks) and np.all(qs.sides != 0):
        return np.where(qs.sides > 0, mat.interface.labels[1], mat.interface.labels[0])
    return mat.interface.label_of(qs.points)


def element_stiffness(disc: Discretization, e: int, qs: QuadratureSet | None = None):
    qs = disc.quadrature[e] if qs is None else qs
    _, grad, dofs = element_functions(disc, e, qs.parent, qs.points, qs.sides)
    B = strain_operator(grad)
    D = d_matrix(disc.material, qs.points, _point_labels(disc, e, qs))
    Ke = np.einsum("m,mki,mkl,mlj->ij", qs.weights, B, D, B)
    return 0.5 * (Ke + Ke.T), dofs.ravel()


def _standard_batch(disc: Discretization, elems: np.ndarray):
    """Stiffness of unenriched, uncut elements with the tensor Gauss rule, all at once."""
    mesh = disc.mesh
    order = disc.config.uncut_order
    from .quadrature import gauss_rule

    xi, w = gauss_rule(order)
    X = mesh.element_xy[elems]
    dNdxi = shape_gradients(xi)
    J = np.einsum("qia,eib->eqab", dNdxi, X)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    dN = np.einsum("eqab,qib->eqia", np.linalg.inv(J), dNdxi)
    ne, nq = dN.shape[:2]
    B = np.zeros((ne, nq, 3, 8))
    B[..., 0, 0::2] = dN[..., 0]
    B[..., 1, 1::2] = dN[..., 1]
    B[..., 2, 0::2] = dN[..., 1]
    B[..., 2, 1::2] = dN[..., 0]
    pts = np.einsum("qi,eib->eqb", shape_functions(xi), X)
    mat = disc.material
    D = d_matrix(mat, pts.reshape(-1, 2)).reshape(ne, nq, 3, 3)
    Ke = np.einsum("eq,eqki,eqkl,eqlj->eij", det * w, B, D, B)
    conn = mesh.elements[elems]
    dofs = np.stack([2 * conn, 2 * conn + 1], axis=-1).reshape(ne, 8)
    return Ke, dofs


@dataclass(eq=False)
class LinearSystem:
    """K u = f with Dirichlet data on ``fixed`` DOFs."""

    K: sp.csr_matrix
    f: np.ndarray
    fixed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def constrained(self, dofs, values) -> "LinearSystem":
        dofs = np.asarray(dofs, dtype=np.int64).ravel()
        values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape).ravel()
        merged = dict(zip(self.fixed.tolist(), self.values.tolist()))
        merged.update(zip(dofs.tolist(), values.tolist()))
        keys = np.array(sorted(merged), dtype=np.int64)
        return LinearSystem(self.K, self.f, keys, np.array([merged[k] for k in keys.tolist()]))


def assemble(disc: Discretization) -> LinearSystem:
    """Global stiffness in element-id order; the load vector starts at zero."""
    n = disc.ndof
    plain = np.array([e for e in range(disc.mesh.n_elements)
                      if e not in disc.dofmap.cuts and not disc.dofmap.is_enriched_element(e)
                      and disc.quadrature[e].scheme == "standard"], dtype=np.int64)
    blocks = {}
    if len(plain):
        Ke, dofs = _standard_batch(disc, plain)
        for k, e in enumerate(plain):
            blocks[int(e)] = (Ke[k], dofs[k])
    for e in range(disc.mesh.n_elements):
        if e not in blocks:
            blocks[e] = element_stiffness(disc, e)
    rows, cols, vals = [], [], []
    for e in range(disc.mesh.n_elements):
        Ke, d = blocks[e]
        rows.append(np.repeat(d, len(d)))
        cols.append(np.tile(d, len(d)))
        vals.append(Ke.ravel())
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return LinearSystem(K, np.zeros(n))


def point_load(disc: Discretization, f: np.ndarray, node: int, force) -> None:
    f[2 * node: 2 * node + 2] += np.asarray(force, dtype=float)


def edge_traction(disc: Discretization, f: np.ndarray, side: str, traction) -> None:
    """Consistent nodal forces of a uniform traction on one side of the outer boundary.

    Enriched DOFs on the loaded edge receive no share; loaded edges are kept
    away from discontinuities in all benchmarks.
    """
    t = np.asarray(traction, dtype=float)
    mesh = disc.mesh
    for a, b in mesh.boundary_edges(side):
        L = float(np.linalg.norm(mesh.nodes[b] - mesh.nodes[a]))
        for n in (a, b):
            f[2 * n: 2 * n + 2] += 0.5 * L * t


def rigid_modes(mesh: Mesh, ndof: int) -> np.ndarray:
    """Translations x, y and the infinitesimal rotation on standard DOFs, shape (ndof, 3)."""
    R = np.zeros((ndof, 3))
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    n = mesh.n_nodes
    R[0:2 * n:2, 0] = 1.0
    R[1:2 * n:2, 1] = 1.0
    R[0:2 * n:2, 2] = -(y - y.mean())
    R[1:2 * n:2, 2] = x - x.mean()
    return R


def _unconstrained_modes(mesh: Mesh, ndof: int, fixed: np.ndarray) -> list[str]:
    names = ["translation-x", "translation-y", "rotation"]
    if len(fixed) == 0:
        return names
    M = rigid_modes(mesh, ndof)[fixed]
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    s = np.concatenate([s, np.zeros(3 - len(s))])
    null = vt[s <= 1e-10 * max(1.0, s.max())]
    out = []
    for v in null:
        k = int(np.argmax(np.abs(v)))
        out.append(names[k] if abs(v[k]) > 0.99 else "combination")
    return out


def apply_constraints(system: LinearSystem):
    """Eliminate fixed DOFs: returns (K_ff, rhs, free DOF indices)."""
    n = system.K.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[system.fixed] = False
    free = np.nonzero(mask)[0]
    K = system.K.tocsr()
    Kff = K[free][:, free]
    rhs = system.f[free] - K[free][:, system.fixed] @ system.values
    return Kff.tocsc(), rhs, free


def solve(system: LinearSystem, disc: Discretization, rtol: float = 1e-10) -> "DisplacementField":
    modes = _unconstrained_modes(disc.mesh, disc.ndof, system.fixed)
    if modes:
        raise SingularSystemError("stiffness is singular; unconstrained rigid modes: " + ", ".join(modes))
    Kff, rhs, free = apply_constraints(system)
    try:
        lu = spla.splu(Kff)
        uf = lu.solve(rhs)
    except RuntimeError as exc:
        raise SingularSystemError(f"factorisation failed: {exc}") from exc
    scale = max(np.linalg.norm(rhs), np.abs(Kff).max() * max(np.linalg.norm(uf), 1e-300))
    res = float(np.linalg.norm(Kff @ uf - rhs) / scale) if scale > 0 else 0.0
    if not np.all(np.isfinite(uf)) or res > rtol:
        raise ConvergenceError(f"linear solve residual {res:.2e} above {rtol:.0e}", residual=res, history=[res])
    u = np.zeros(disc.ndof)
    u[free] = uf
    u[system.fixed] = system.values
    return DisplacementField(disc, u, system.K)


@dataclass(eq=False)
class DisplacementField:
    disc: Discretization
    u: np.ndarray
    K: sp.csr_matrix | None = None

    def element_gradients(self, e: int, qs: QuadratureSet | None = None):
        """Displacement gradient du_i/dx_j (m, 2, 2) and displacement (m, 2) at the points of a rule."""
        qs = self.disc.quadrature[e] if qs is None else qs
        psi, grad, dofs = element_functions(self.disc, e, qs.parent, qs.points, qs.sides)
        ue = self.u[dofs]  # (k, 2)
        disp = psi @ ue
        G = np.einsum("mkj,ki->mij", grad, ue)
        return G, disp

    def at(self, x) -> np.ndarray:
        """u(x) for points (m, 2); points on a crack face take the side of the nearest piece."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((len(x), 2))
        for i, p in enumerate(x):
            e, xi = self.disc.mesh.locate(p)
            sides = self.disc.point_sides(e, p[None, :])
            psi, _, dofs = element_functions(self.disc, e, xi[None, :], p[None, :], sides)
            out[i] = psi[0] @ self.u[dofs]
        return out

    def strain_at(self, x) -> np.ndarray:
        """Engineering strain (exx, eyy, gxy) at points (m, 2)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((len(x), 3))
        for i, p in enumerate(x):
            e, xi = self.disc.mesh.locate(p)
            sides = self.disc.point_sides(e, p[None, :])
            _, grad, dofs = element_functions(self.disc, e, xi[None, :], p[None, :], sides)
            G = grad[0].T @ self.u[dofs]  # (2, 2): G[j, i] = du_i/dx_j
            out[i] = [G[0, 0], G[1, 1], G[1, 0] + G[0, 1]]
        return out

    def stress_at(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        eps = self.strain_at(x)
        D = d_matrix(self.disc.material, x)
        return np.einsum("mij,mj->mi", D, eps)

    def nodal_dofs(self) -> np.ndarray:
        """Standard DOF values, shape (n_nodes, 2)."""
        n = self.disc.mesh.n_nodes
        return self.u[: 2 * n].reshape(n, 2)

    def nodal_values(self) -> np.ndarray:
        """Displacement at the nodes including enrichment contributions."""
        mesh = self.disc.mesh
        out = np.array(self.nodal_dofs())
        for b in self.disc.dofmap.enrichments:
            x = mesh.nodes[b.nodes]
            if b.kind == "abs":
                F, _ = b.evaluate(x)
            elif b.kind == "heaviside":
                F = side_of_points(x, b.path, on_path="zero").astype(float)[:, None]
            else:
                continue  # branch functions at their own nodes need a face choice; skipped
            for p, n in enumerate(b.nodes):
                for f in range(b.n_funcs):
                    d0 = b.start + 2 * (p * b.n_funcs + f)
                    out[n] += F[p, f] * self.u[d0: d0 + 2]
        return out

    def to_csv(self, path) -> None:
        mesh = self.disc.mesh
        U = self.nodal_dofs()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "x", "y", "u_x", "u_y"])
            for i in range(mesh.n_nodes):
                w.writerow([i, repr(float(mesh.nodes[i, 0])), repr(float(mesh.nodes[i, 1])),
                            repr(float(U[i, 0])), repr(float(U[i, 1]))])


def strain_energy(field_: DisplacementField) -> float:
    """0.5 u^T K u with the unconstrained stiffness."""
    K = field_.K if field_.K is not None else assemble(field_.disc).K
    return 0.5 * float(field_.u @ (K @ field_.u))


def l2_displacement_error(field_: DisplacementField, exact, mode: str = "dofs") -> float:
    """100 sqrt(sum (u_h - u)^2 / sum u^2) over the nodes, in percent.

    ``mode='dofs'`` compares standard DOF values, ``mode='values'`` the
    enriched nodal displacements.
    """
    nodes = field_.disc.mesh.nodes
    ue = np.asarray(exact(nodes), dtype=float).reshape(-1, 2)
    den = float(np.sum(ue ** 2))
    if den == 0.0:
        raise ZeroDivisionError("exact solution vanishes at every node")
    uh = field_.nodal_dofs() if mode == "dofs" else field_.nodal_values()
    return 100.0 * float(np.sqrt(np.sum((uh - ue) ** 2) / den))


def project(disc: Discretization, func) -> DisplacementField:
    """L2 projection of a vector field onto the enriched space, using the element rules."""
    n = disc.ndof
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    for e, qs in enumerate(disc.quadrature):
        psi, _, dofs = element_functions(disc, e, qs.parent, qs.points, qs.sides)
        Me = np.einsum("m,mi,mj->ij", qs.weights, psi, psi)
        g = np.asarray(func(qs.points), dtype=float)
        be = np.einsum("m,mi,mc->ic", qs.weights, psi, g)
        for c in (0, 1):
            d = dofs[:, c]
            rows.append(np.repeat(d, len(d)))
            cols.append(np.tile(d, len(d)))
            vals.append(Me.ravel())
            np.add.at(rhs, d, be[:, c])
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsc()
    u = spla.spsolve(M, rhs)
    return DisplacementField(disc, u)


def exact_dirichlet(disc: Discretization, exact, sides=("left", "right", "bottom", "top"), samples: int = 8):
    """Dirichlet data reproducing ``exact`` on the outer boundary.

    Standard DOFs of boundary nodes take the exact nodal values. Enriched DOFs
    of boundary nodes are fitted by least squares to the exact trace along
    their boundary edges (the standard DOFs held fixed); in practice this only
    activates Heaviside pairs on edges crossed by a crack.
    """
    mesh = disc.mesh
    bnodes = np.unique(np.concatenate([mesh.boundary_nodes(s) for s in sides]))
    U = np.asarray(exact(mesh.nodes[bnodes]), dtype=float)
    dofs = np.stack([2 * bnodes, 2 * bnodes + 1], axis=1).ravel()
    vals = U.ravel()
    enriched = set(disc.dofmap.enriched_nodes().tolist())
    b_enr = [n for n in bnodes.tolist() if n in enriched]
    if not b_enr:
        return dofs, vals
    # unknown enriched DOFs on boundary nodes
    edges = [(a, b) for s in sides for a, b in mesh.boundary_edges(s) if a in enriched or b in enriched]
    t = (np.arange(samples) + 0.5) / samples
    unknown: dict[int, int] = {}
    A_rows, b_rows = [], []
    fixed_val = dict(zip(dofs.tolist(), vals.tolist()))
    for a, b in edges:
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        pts = pa[None] + t[:, None] * (pb - pa)[None]
        for p in pts:
            e, xi = mesh.locate(p)
            sides_p = disc.point_sides(e, p[None, :])
            psi, _, edofs = element_functions(disc, e, xi[None, :], p[None, :], sides_p)
            target = np.asarray(exact(p[None, :]), dtype=float)[0]
            for c in (0, 1):
                row = {}
                r = target[c]
                for s, d in enumerate(edofs[:, c]):
                    d = int(d)
                    if abs(psi[0, s]) < 1e-15:
                        continue
                    if d in fixed_val:
                        r -= psi[0, s] * fixed_val[d]
                    elif d < 2 * mesh.n_nodes:
                        continue  # interior standard DOF of the element: not part of the trace
                    else:
                        row[unknown.setdefault(d, len(unknown))] = psi[0, s]
                A_rows.append(row)
                b_rows.append(r)
    if not unknown:
        return dofs, vals
    A = np.zeros((len(A_rows), len(unknown)))
    for i, row in enumerate(A_rows):
        for j, v in row.items():
            A[i, j] = v
    sol, *_ = np.linalg.lstsq(A, np.array(b_rows), rcond=None)
    extra = np.array(list(unknown), dtype=np.int64)
    # all other enriched DOFs of boundary nodes are zeroed
    rest = []
    for bl in disc.dofmap.enrichments:
        for n in b_enr:
            if bl.position(n) >= 0:
                rest.extend(int(d) for d in bl.dofs(n) if int(d) not in unknown)
    rest = np.array(sorted(set(rest)), dtype=np.int64)
    return (np.concatenate([dofs, extra, rest]),
            np.concatenate([vals, sol[[unknown[d] for d in extra.tolist()]], np.zeros(len(rest))]))
