"""Structured bilinear quadrilateral meshes and the isoparametric map."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConvergenceError, DegenerateGeometryError, OutOfElementError

# parent coordinates of the four nodes, counter-clockwise from (-1, -1)
PARENT_NODES = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
GAUSS2 = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(3.0)


def shape_functions(xi) -> np.ndarray:
    """Bilinear shape functions N (..., 4) at parent points xi (..., 2)."""
    xi = np.asarray(xi, dtype=float)
    s, t = xi[..., 0:1], xi[..., 1:2]
    return 0.25 * (1.0 + s * PARENT_NODES[:, 0]) * (1.0 + t * PARENT_NODES[:, 1])


def shape_gradients(xi) -> np.ndarray:
    """dN/dxi (..., 4, 2)."""
    xi = np.asarray(xi, dtype=float)
    s, t = xi[..., 0:1], xi[..., 1:2]
    dxi = 0.25 * PARENT_NODES[:, 0] * (1.0 + t * PARENT_NODES[:, 1])
    deta = 0.25 * PARENT_NODES[:, 1] * (1.0 + s * PARENT_NODES[:, 0])
    return np.stack([dxi, deta], axis=-1)


def parent_to_physical(elem_xy, xi) -> np.ndarray:
    return shape_functions(xi) @ np.asarray(elem_xy, dtype=float)


def jacobian(elem_xy, xi) -> np.ndarray:
    """J[a, b] = d x_b / d xi_a, shape (..., 2, 2)."""
    return np.swapaxes(shape_gradients(xi), -1, -2) @ np.asarray(elem_xy, dtype=float)


def physical_to_parent(elem_xy, x, tol: float = 1e-12, max_iter: int = 20, outside_tol: float = 1e-7):
    """Invert the bilinear map by Newton's method from the element centre.

    Vectorised over ``x`` of shape (2,) or (m, 2).
    """
    X = np.asarray(elem_xy, dtype=float)
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    xi = np.zeros_like(pts)
    step = np.inf
    for _ in range(max_iter):
        r = parent_to_physical(X, xi) - pts
        J = jacobian(X, xi)
        dxi = -np.linalg.solve(np.swapaxes(J, -1, -2), r[..., None])[..., 0]
        xi = xi + dxi
        step = np.max(np.abs(dxi))
        if step < tol:
            break
    else:
        raise ConvergenceError(f"inverse isoparametric map did not converge (last step {step:.2e})",
                               residual=step)
    if np.any(np.abs(xi) > 1.0 + outside_tol):
        raise OutOfElementError("point lies outside the element")
    return xi.reshape(x.shape)


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    elements: np.ndarray
    bounds: tuple[float, float, float, float]
    shape: tuple[int, int] | None = None
    structured: bool = True

    def __post_init__(self):
        # private copies: freezing them must not lock the caller's arrays
        nodes = np.array(self.nodes, dtype=float)
        elements = np.array(self.elements, dtype=np.int64)
        if elements.min() < 0 or elements.max() >= len(nodes):
            raise ValueError("connectivity index out of range")
        nodes.setflags(write=False)
        elements.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_vertices(self, e: int) -> np.ndarray:
        return self.nodes[self.elements[e]]

    @cached_property
    def element_xy(self) -> np.ndarray:
        return self.nodes[self.elements]

    @property
    def spacing(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bounds
        nx, ny = self.shape
        return (x1 - x0) / nx, (y1 - y0) / ny

    @property
    def h(self) -> float:
        """Characteristic element size."""
        if self.shape is not None:
            return max(self.spacing)
        return float(np.sqrt(np.mean(self.element_areas)))

    @cached_property
    def element_areas(self) -> np.ndarray:
        v = self.element_xy
        x, y = v[..., 0], v[..., 1]
        return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)

    @cached_property
    def node_elements(self) -> list[np.ndarray]:
        """Elements in the support of every node."""
        lists: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for e, conn in enumerate(self.elements):
            for n in conn:
                lists[n].append(e)
        return [np.array(sorted(s), dtype=np.int64) for s in lists]

    def boundary_nodes(self, side: str | None = None, tol: float = 1e-9) -> np.ndarray:
        x0, y0, x1, y1 = self.bounds
        t = tol * max(x1 - x0, y1 - y0)
        x, y = self.nodes[:, 0], self.nodes[:, 1]
        masks = {
            "left": np.abs(x - x0) <= t,
            "right": np.abs(x - x1) <= t,
            "bottom": np.abs(y - y0) <= t,
            "top": np.abs(y - y1) <= t,
        }
        if side is None:
            m = masks["left"] | masks["right"] | masks["bottom"] | masks["top"]
        else:
            m = masks[side]
        return np.nonzero(m)[0]

    def boundary_edges(self, side: str | None = None) -> list[tuple[int, int]]:
        """Element edges lying on the outer boundary, as node pairs (element-CCW order)."""
        on = np.zeros(self.n_nodes, dtype=bool)
        on[self.boundary_nodes(side)] = True
        count: dict[tuple[int, int], int] = {}
        order: dict[tuple[int, int], tuple[int, int]] = {}
        for conn in self.elements:
            for a, b in zip(conn, np.roll(conn, -1)):
                key = (min(a, b), max(a, b))
                count[key] = count.get(key, 0) + 1
                order[key] = (int(a), int(b))
        return [order[k] for k, c in count.items() if c == 1 and on[k[0]] and on[k[1]]]

    def candidate_elements(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.shape is None:
            return np.arange(self.n_elements)
        nx, ny = self.shape
        dx, dy = self.spacing
        i = int(np.clip(np.floor((x[0] - self.bounds[0]) / dx), 0, nx - 1))
        j = int(np.clip(np.floor((x[1] - self.bounds[1]) / dy), 0, ny - 1))
        if self.structured:
            return np.array([j * nx + i])
        ii = np.clip(np.arange(i - 1, i + 2), 0, nx - 1)
        jj = np.clip(np.arange(j - 1, j + 2), 0, ny - 1)
        return np.unique((jj[:, None] * nx + ii[None, :]).ravel())

    def locate(self, x) -> tuple[int, np.ndarray]:
        """Element containing x and the parent coordinates of x in it."""
        x = np.asarray(x, dtype=float)
        for e in self.candidate_elements(x):
            try:
                xi = physical_to_parent(self.element_vertices(e), x)
            except OutOfElementError:
                continue
            return int(e), xi
        for e in range(self.n_elements):
            try:
                return e, physical_to_parent(self.element_vertices(e), x)
            except OutOfElementError:
                continue
        raise OutOfElementError(f"point {x} is outside the mesh")

    def jacobian_dets(self, xi) -> np.ndarray:
        """det J at parent points ``xi`` (q, 2) of every element, shape (n_elements, q)."""
        J = np.einsum("qia,eib->eqab", shape_gradients(np.asarray(xi, dtype=float)), self.element_xy)
        return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]

    def gauss_jacobians(self) -> np.ndarray:
        """det J at the 2x2 Gauss points of every element, shape (n_elements, 4)."""
        return self.jacobian_dets(GAUSS2)

    def corner_jacobians(self) -> np.ndarray:
        """det J at the element corners; det J is bilinear, so positive corners mean positive everywhere."""
        return self.jacobian_dets(PARENT_NODES)

    def to_csv(self, node_path, element_path) -> None:
        with open(node_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "x", "y"])
            for i, (x, y) in enumerate(self.nodes):
                w.writerow([i, repr(float(x)), repr(float(y))])
        with open(element_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "n1", "n2", "n3", "n4"])
            for e, conn in enumerate(self.elements):
                w.writerow([e, *map(int, conn)])


def structured_mesh(nx: int, ny: int, bounds=(0.0, 0.0, 1.0, 1.0)) -> Mesh:
    """nx x ny grid of bilinear quads; node (i, j) has id j*(nx+1)+i."""
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    x0, y0, x1, y1 = map(float, bounds)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateGeometryError("empty mesh bounds")
    dx, dy = (x1 - x0) / nx, (y1 - y0) / ny
    i = np.arange(nx + 1)
    j = np.arange(ny + 1)
    xs = x0 + i * dx
    ys = y0 + j * dy
    xs[-1], ys[-1] = x1, y1
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    I, Jj = np.meshgrid(np.arange(nx), np.arange(ny))
    n0 = (Jj * (nx + 1) + I).ravel()
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
    return Mesh(nodes, elements, (x0, y0, x1, y1), (nx, ny), True)


def perturb_mesh(mesh: Mesh, alpha_ir: float, seed: int, max_retries: int = 100) -> Mesh:
    """Move interior nodes by (2 r - 1) * alpha_ir * (dx, dy), r ~ U[0, 1) drawn per node and axis.

    The stream is numpy's PCG64 seeded with ``seed``: draws are taken as
    ``rng.random((n_interior, 2))`` in node-id order, so results are bit-identical
    across runs and platforms. Nodes of elements whose Jacobian is not positive at
    every corner (equivalently, non-convex elements) are redrawn.
    """
    if not 0.0 <= alpha_ir < 0.5:
        raise ValueError("alpha_ir must lie in [0, 0.5)")
    if mesh.shape is None:
        raise ValueError("perturb_mesh needs a structured mesh")
    if alpha_ir == 0.0:
        return mesh
    dx, dy = mesh.spacing
    rng = np.random.Generator(np.random.PCG64(seed))
    boundary = np.zeros(mesh.n_nodes, dtype=bool)
    boundary[mesh.boundary_nodes()] = True
    interior = np.nonzero(~boundary)[0]
    base = np.array(mesh.nodes)
    scale = np.array([alpha_ir * dx, alpha_ir * dy])
    nodes = base.copy()
    nodes[interior] += (2.0 * rng.random((len(interior), 2)) - 1.0) * scale
    for _ in range(max_retries):
        trial = Mesh(nodes, mesh.elements, mesh.bounds, mesh.shape, structured=False)
        bad = np.nonzero(np.any(trial.corner_jacobians() <= 0.0, axis=1))[0]
        if len(bad) == 0:
            return trial
        redo = np.intersect1d(np.unique(mesh.elements[bad]), interior)
        nodes[redo] = base[redo] + (2.0 * rng.random((len(redo), 2)) - 1.0) * scale
    raise DegenerateGeometryError("perturbation produced inverted elements after retries")
