"""The six benchmark problems, convergence sweeps and CSV/SVG reporting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import UnsupportedGeometryError, ValidityRangeError
from .fem import (MaterialModel, assemble, discretize, edge_traction, exact_dirichlet, l2_displacement_error,
                  point_load, solve, strain_energy)
from .fracture import (GrowthProblem, SifPair, interaction_integral, quasi_static_run, westergaard_disp,
                       write_history)
from .geometry import CrackPath, InterfaceLine, TipFrame, cross2
from .mesh import Mesh, perturb_mesh, structured_mesh
from .quadrature import QuadratureConfig

PROBLEMS = ("griffith", "edge", "inclined", "multicrack", "bimaterial", "dcb")

# elements across the reference width; single-mesh problems use the last entry
DEFAULT_MESHES = {
    "griffith": (10, 20, 40, 80),
    "edge": (10, 20, 40, 80),
    "inclined": (50,),
    "multicrack": (36,),
    "bimaterial": (8, 16, 32, 64),
    "dcb": (60,),
}
LARGE_MESHES = {**DEFAULT_MESHES, "griffith": (10, 20, 40, 80, 100), "edge": (10, 20, 40, 80, 100),
                "inclined": (100,), "multicrack": (72,)}


@dataclass
class BenchmarkSpec:
    problem: str
    meshes: tuple | None = None
    scheme: str = "sccm"
    rule: str = "midpoint"
    tip_points: int = 78
    alpha_ir: float = 0.0
    seed: int = 0
    out: Path | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.meshes is None:
            self.meshes = DEFAULT_MESHES[self.problem]
        self.meshes = tuple(int(n) for n in self.meshes)
        if any(b <= a for a, b in zip(self.meshes, self.meshes[1:])):
            raise ValueError("mesh sizes must be strictly increasing")
        if not 0.0 <= self.alpha_ir < 0.5:
            raise ValueError("alpha_ir must lie in [0, 0.5)")

    @property
    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(scheme=self.scheme, disk=self.rule, tip_points=self.tip_points,
                                **self.params.get("quadrature", {}))


@dataclass
class ConvergenceRow:
    h: float
    metric: float
    reference: float
    rel_err: float
    rate: float = float("nan")


# --------------------------------------------------------------------------- reporting


def convergence_driver(rows: list[ConvergenceRow]) -> float:
    """Fill per-row rates (slope to the previous row) and return the least-squares log-log slope."""
    if len(rows) < 2:
        raise ValueError("at least two rows are needed for a convergence rate")
    for prev, row in zip(rows, rows[1:]):
        row.rate = math.log(row.rel_err / prev.rel_err) / math.log(row.h / prev.h)
    h = np.log([r.h for r in rows])
    e = np.log([r.rel_err for r in rows])
    return float(np.polyfit(h, e, 1)[0])


def write_csv(path, rows: list[ConvergenceRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "metric", "reference", "rel_err", "rate"])
        for r in rows:
            rate = "" if math.isnan(r.rate) else repr(r.rate)
            w.writerow([repr(r.h), repr(r.metric), repr(r.reference), repr(r.rel_err), rate])


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def write_svg(path, mesh: Mesh, paths: dict, width: int = 900) -> None:
    """Mesh outline, one polyline per crack path and a marker at each tip."""
    x0, y0, x1, y1 = mesh.bounds
    s = width / (x1 - x0)
    height = int(round((y1 - y0) * s))
    colours = ["#c0392b", "#2471a3", "#229954", "#7d3c98"]

    def pt(p):
        return f"{(p[0] - x0) * s:.3f},{(y1 - p[1]) * s:.3f}"

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="none" stroke="black" stroke-width="2"/>']
    if mesh.n_elements <= 20000:
        for conn in mesh.elements:
            poly = " ".join(pt(mesh.nodes[n]) for n in conn)
            lines.append(f'<polygon points="{poly}" fill="none" stroke="#cccccc" stroke-width="0.5"/>')
    for k, (name, crack) in enumerate(paths.items()):
        c = colours[k % len(colours)]
        poly = " ".join(pt(v) for v in crack.vertices)
        lines.append(f'<polyline points="{poly}" fill="none" stroke="{c}" stroke-width="2"><title>{name}</title>'
                     "</polyline>")
        for end in crack.active_ends():
            tip = crack.end_frame(end).point
            cx, cy = pt(tip).split(",")
            lines.append(f'<circle cx="{cx}" cy="{cy}" r="4" fill="{c}"/>')
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------- helpers


def _mesh(n_x: int, n_y: int, bounds, spec: BenchmarkSpec) -> Mesh:
    mesh = structured_mesh(n_x, n_y, bounds)
    if spec.alpha_ir > 0:
        mesh = perturb_mesh(mesh, spec.alpha_ir, spec.seed)
    return mesh


def near_tip_field(K: SifPair, frame: TipFrame, E: float, nu: float):
    """Exact asymptotic displacements as a function of global points."""
    R = frame.rotation

    def u(x):
        r, t = frame.polar(np.atleast_2d(x))
        return westergaard_disp(K, r, t, E, nu) @ R

    return u


def _solve_window(n: int, spec: BenchmarkSpec, frame: TipFrame, K: SifPair, length: float, E: float, nu: float,
                  config: QuadratureConfig | None = None):
    """Crack ending at ``frame`` inside a square window with exact near-tip data on the boundary."""
    mesh = _mesh(n, n, (0.0, 0.0, length, length), spec)
    back = frame.point - 4.0 * length * frame.tangent
    crack = CrackPath(np.array([back, frame.point]), tips=(False, True))
    mat = MaterialModel(E, nu)
    disc = discretize(mesh, mat, [crack], config or spec.quadrature)
    exact = near_tip_field(K, frame, E, nu)
    dofs, vals = exact_dirichlet(disc, exact)
    system = assemble(disc).constrained(dofs, vals)
    fld = solve(system, disc)
    r_d = spec.params.get("r_d", spec.params.get("r_d_factor", 3.0) * mesh.h)
    return fld, crack, interaction_integral(fld, frame, r_d, crack, 1)


# --------------------------------------------------------------------------- griffith


GRIFFITH = dict(a=100.0, sigma=1.0e4, length=10.0, E=1.0e7, nu=0.3)


def griffith_reference(a: float = GRIFFITH["a"], sigma: float = GRIFFITH["sigma"]) -> float:
    return sigma * math.sqrt(math.pi * a)


def griffith_tip(n: int, length: float = GRIFFITH["length"]) -> np.ndarray:
    """Window centre shifted by half an element in x and y so the tip sits at an element centre."""
    h = length / n
    return np.array([0.5 * length + 0.5 * h, 0.5 * length + 0.5 * h])


def griffith_solve(n: int, spec: BenchmarkSpec, config: QuadratureConfig | None = None):
    p = {**GRIFFITH, **spec.params.get("griffith", {})}
    K = SifPair(griffith_reference(p["a"], p["sigma"]), 0.0)
    frame = TipFrame(griffith_tip(n, p["length"]), 0.0)
    return _solve_window(n, spec, frame, K, p["length"], p["E"], p["nu"], config)


def run_griffith(spec: BenchmarkSpec) -> list[ConvergenceRow]:
    ref = griffith_reference(**{k: v for k, v in {**GRIFFITH, **spec.params.get("griffith", {})}.items()
                                 if k in ("a", "sigma")})
    rows = []
    for n in spec.meshes:
        _, _, sif = griffith_solve(n, spec)
        rows.append(ConvergenceRow(GRIFFITH["length"] / n, sif.K_I, ref, abs(sif.K_I - ref) / ref))
    if len(rows) > 1:
        convergence_driver(rows)
    return rows


def run_griffith_sweep(spec: BenchmarkSpec, budgets=(13, 26, 39, 52, 65, 78), n: int = 60) -> list[tuple]:
    """K_I on a fixed mesh as the tip-element point budget grows."""
    ref = griffith_reference()
    out = []
    for b in budgets:
        cfg = replace(spec.quadrature, tip_points=int(b))
        _, _, sif = griffith_solve(n, spec, cfg)
        out.append((int(b), sif.K_I, ref, abs(sif.K_I - ref) / ref))
    return out


# --------------------------------------------------------------------------- edge crack


EDGE = dict(width=1.0, height=2.0, a_over_w=0.3, sigma=1.0, E=1.0, nu=0.3)


def edge_factor(ratio: float) -> float:
    """Empirical geometry factor of a single edge crack, valid for a/W <= 0.6."""
    if ratio < 0 or ratio > 0.6:
        raise ValidityRangeError(f"a/W = {ratio} outside the fitted range [0, 0.6]")
    return 1.12 - 0.231 * ratio + 10.55 * ratio ** 2 - 21.72 * ratio ** 3 + 30.39 * ratio ** 4


def edge_reference(a: float, width: float = 1.0, sigma: float = 1.0) -> float:
    return edge_factor(a / width) * sigma * math.sqrt(math.pi * a)


def edge_solve(n: int, spec: BenchmarkSpec):
    """Plate W x 2W, crack from the left edge at mid-height; n elements across, 2n+1 along.

    The odd row count puts the crack line through element centres.
    """
    p = {**EDGE, **spec.params.get("edge", {})}
    W, H = p["width"], p["height"]
    a = p["a_over_w"] * W
    ref = edge_reference(a, W, p["sigma"])
    ny = int(round(n * H / W)) + 1
    mesh = _mesh(n, ny, (0.0, 0.0, W, H), spec)
    yc = 0.5 * H
    crack = CrackPath(np.array([[-0.5 * W, yc], [a, yc]]), tips=(False, True))
    mat = MaterialModel(p["E"], p["nu"])
    disc = discretize(mesh, mat, [crack], spec.quadrature)
    system = assemble(disc)
    edge_traction(disc, system.f, "top", (0.0, p["sigma"]))
    bl = int(np.argmin(np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1])))
    br = int(np.argmin(np.hypot(mesh.nodes[:, 0] - W, mesh.nodes[:, 1])))
    system = system.constrained([2 * bl, 2 * bl + 1, 2 * br + 1], 0.0)
    fld = solve(system, disc)
    frame = crack.end_frame(1)
    sif = interaction_integral(fld, frame, spec.params.get("r_d_factor", 3.0) * mesh.h, crack, 1)
    return fld, crack, sif, ref


def run_edge(spec: BenchmarkSpec) -> list[ConvergenceRow]:
    rows = []
    for n in spec.meshes:
        fld, _, sif, ref = edge_solve(n, spec)
        rows.append(ConvergenceRow(fld.disc.mesh.h, sif.K_I, ref, abs(sif.K_I - ref) / ref))
    if len(rows) > 1:
        convergence_driver(rows)
    return rows


# --------------------------------------------------------------------------- inclined crack


def inclined_reference(beta: float, sigma: float = GRIFFITH["sigma"], a: float = GRIFFITH["a"]) -> SifPair:
    k = sigma * math.sqrt(math.pi * a)
    return SifPair(k * math.cos(beta) ** 2, k * math.cos(beta) * math.sin(beta))


def run_inclined(spec: BenchmarkSpec, betas_deg=(0, 15, 30, 45, 60, 75)) -> list[tuple]:
    """Mixed-mode window: the crack meets the window centre at angle beta with exact data on the boundary."""
    n = spec.meshes[-1]
    p = {**GRIFFITH, **spec.params.get("griffith", {})}
    L = p["length"]
    out = []
    for bd in betas_deg:
        beta = math.radians(bd)
        ref = inclined_reference(beta, p["sigma"], p["a"])
        frame = TipFrame(griffith_tip(n, L), beta)
        _, _, sif = _solve_window(n, spec, frame, ref, L, p["E"], p["nu"])
        out.append((float(bd), sif.K_I, sif.K_II, ref.K_I, ref.K_II))
    return out


# --------------------------------------------------------------------------- multiple cracks


MULTI = dict(width=1.0, height=2.0, a1=0.1, a2=0.1, H=0.1, L=0.2, theta1=0.0, theta2=0.0,
             sigma=1.0, E=3.0e7, nu=0.3)


def center_crack_reference(a: float, width: float, sigma: float = 1.0) -> float:
    w = 0.5 * width
    return sigma * math.sqrt(math.pi * a / math.cos(math.pi * a / (2.0 * w)))


def multicrack_geometry(p: dict) -> tuple[CrackPath, CrackPath]:
    """Two straight cracks whose facing tips A (crack 1) and B (crack 2) sit L apart horizontally
    and H apart vertically; each crack rotates about its facing tip.

    The pair is centred on the plate in its horizontal (theta = 0) configuration.
    """
    cx, cy = 0.5 * p["width"], 0.5 * p["height"]
    ax = cx - 0.5 * (p["L"] + 2.0 * p["a2"] - 2.0 * p["a1"])
    A = np.array([ax, cy - 0.5 * p["H"]])
    B = np.array([ax + p["L"], cy + 0.5 * p["H"]])
    d1 = np.array([math.cos(math.radians(p["theta1"])), math.sin(math.radians(p["theta1"]))])
    d2 = np.array([math.cos(math.radians(p["theta2"])), math.sin(math.radians(p["theta2"]))])
    c1 = CrackPath(np.array([A - 2.0 * p["a1"] * d1, A]))
    c2 = CrackPath(np.array([B, B + 2.0 * p["a2"] * d2]))
    v1, v2 = c1.vertices, c2.vertices

    def crosses(p1, p2, q1, q2):
        d1 = cross2(p2 - p1, q1 - p1) * cross2(p2 - p1, q2 - p1)
        d2 = cross2(q2 - q1, p1 - q1) * cross2(q2 - q1, p2 - q1)
        return d1 <= 0 and d2 <= 0

    if crosses(v1[0], v1[1], v2[0], v2[1]):
        raise UnsupportedGeometryError("the two cracks intersect")
    return c1, c2


def multicrack_solve(n: int, spec: BenchmarkSpec, **overrides):
    p = {**MULTI, **spec.params.get("multicrack", {}), **overrides}
    c1, c2 = multicrack_geometry(p)
    ny = int(round(n * p["height"] / p["width"]))
    mesh = _mesh(n, ny, (0.0, 0.0, p["width"], p["height"]), spec)
    mat = MaterialModel(p["E"], p["nu"])
    disc = discretize(mesh, mat, [c1, c2], spec.quadrature)
    system = assemble(disc)
    edge_traction(disc, system.f, "top", (0.0, p["sigma"]))
    bottom = mesh.boundary_nodes("bottom")
    bl = int(bottom[np.argmin(mesh.nodes[bottom, 0])])
    system = system.constrained(np.concatenate([2 * bottom + 1, [2 * bl]]), 0.0)
    fld = solve(system, disc)
    # point A is the facing tip of crack 1, its second vertex
    sif = interaction_integral(fld, c1.end_frame(1), spec.params.get("r_d_factor", 3.0) * mesh.h, c1, 1)
    ref = center_crack_reference(p["a1"], p["width"], p["sigma"])
    return fld, sif, ref


def run_multicrack(spec: BenchmarkSpec, h_over_l=(0.25, 0.5, 1.0, 2.0), length_ratio=(1.0, 2.0),
                   angles=(0, 15, 30, 45, 60, 75, 90)) -> dict:
    n = spec.meshes[-1]
    table = []
    for ratio in length_ratio:
        for hl in h_over_l:
            L = MULTI["L"]
            _, sif, ref = multicrack_solve(n, spec, H=hl * L, a2=ratio * MULTI["a1"])
            table.append((ratio, hl, sif.K_I / ref, sif.K_II / ref))
    sweep = []
    for th in angles:
        _, sif, ref = multicrack_solve(n, spec, theta1=float(th), theta2=float(th))
        sweep.append((float(th), sif.K_I / ref, sif.K_II / ref))
    return {"interaction": table, "angle": sweep}


# --------------------------------------------------------------------------- bimaterial


BIMAT = dict(E1=1.0, E2=10.0, b=0.1, nu=0.0)
INTERFACES = {"straight": 0.0, "positive": 0.25, "negative": -0.25}


def bimaterial_alpha(E1: float, E2: float, b: float) -> float:
    return E2 / (E2 * (b + 1.0) - E1 * (b - 1.0))


def bimaterial_exact(E1: float = 1.0, E2: float = 10.0, b: float = 0.0):
    """u_y(y) of the layered bar on (-1, 1) with u_y(-1) = 0, u_y(1) = 1; u_x = 0."""
    alpha = bimaterial_alpha(E1, E2, b)

    def u(x):
        y = np.atleast_2d(x)[:, 1]
        uy = np.where(y <= b, (y + 1.0) * alpha, 1.0 + (E1 / E2) * (y - 1.0) * alpha)
        return np.column_stack([np.zeros_like(uy), uy])

    return u


def bimaterial_solve(n: int, spec: BenchmarkSpec, slope: float = 0.0, b: float | None = None):
    p = {**BIMAT, **spec.params.get("bimaterial", {})}
    b = p["b"] if b is None else b
    mesh = _mesh(n, n, (-1.0, -1.0, 1.0, 1.0), spec)
    iface = InterfaceLine(np.array([-1.0, b - slope]), np.array([1.0, b + slope]), labels=(1, 2))
    mat = MaterialModel(p["E1"], p["nu"], interface=iface, region_E={1: p["E1"], 2: p["E2"]})
    disc = discretize(mesh, mat, [], spec.quadrature)
    bottom, top = mesh.boundary_nodes("bottom"), mesh.boundary_nodes("top")
    dofs = np.concatenate([2 * bottom, 2 * bottom + 1, 2 * top, 2 * top + 1])
    vals = np.concatenate([np.zeros(2 * len(bottom)), np.zeros(len(top)), np.ones(len(top))])
    # enriched DOFs of constrained nodes are left free: the top and bottom rows are never cut
    system = assemble(disc).constrained(dofs, vals)
    return solve(system, disc)


def run_bimaterial(spec: BenchmarkSpec, error_mode: str = "dofs") -> tuple[list[ConvergenceRow], list[tuple]]:
    p = {**BIMAT, **spec.params.get("bimaterial", {})}
    exact = bimaterial_exact(p["E1"], p["E2"], p["b"])
    rows = []
    for n in spec.meshes:
        fld = bimaterial_solve(n, spec)
        err = l2_displacement_error(fld, exact, mode=error_mode)
        rows.append(ConvergenceRow(2.0 / n, err, 0.0, err))
    if len(rows) > 1:
        convergence_driver(rows)
    energy = []
    for name, slope in INTERFACES.items():
        for n in spec.meshes:
            energy.append((name, n, strain_energy(bimaterial_solve(n, spec, slope))))
    return rows, energy


# --------------------------------------------------------------------------- double cantilever beam


DCB = dict(length=6.0, height=2.0, a=2.05, E=100.0, nu=0.3, P=1.0, da=0.15, steps=8, offset=0.0125)


def dcb_problem(spec: BenchmarkSpec, n_x: int | None = None) -> GrowthProblem:
    """Pre-crack along y = H/2 + offset from the left edge; unit opening loads at the left corners,
    right edge clamped. The offset keeps the crack off the mid-height grid line; the default
    h/8 is the smallest that keeps every cut piece mappable at 60 x 20."""
    p = {**DCB, **spec.params.get("dcb", {})}
    n_x = spec.meshes[-1] if n_x is None else n_x
    n_y = max(1, int(round(n_x * p["height"] / p["length"])))
    mesh = _mesh(n_x, n_y, (0.0, 0.0, p["length"], p["height"]), spec)
    yc = 0.5 * p["height"] + p["offset"]
    crack = CrackPath(np.array([[-1.0, yc], [p["a"], yc]]), tips=(False, True))
    mat = MaterialModel(p["E"], p["nu"])
    top_left = int(np.argmin(np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1] - p["height"])))
    bottom_left = int(np.argmin(np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1])))
    right = mesh.boundary_nodes("right")

    def boundary(disc, system):
        point_load(disc, system.f, top_left, (0.0, p["P"]))
        point_load(disc, system.f, bottom_left, (0.0, -p["P"]))
        return system.constrained(np.concatenate([2 * right, 2 * right + 1]), 0.0)

    return GrowthProblem(mesh, mat, crack, boundary, 1, spec.quadrature, spec.params.get("r_d"))


def run_dcb(spec: BenchmarkSpec, schemes=("sccm", "subcell")) -> dict:
    p = {**DCB, **spec.params.get("dcb", {})}
    out = {}
    for scheme in schemes:
        s = replace(spec, scheme=scheme)
        out[scheme] = quasi_static_run(dcb_problem(s), p["steps"], p["da"])
    return out


# --------------------------------------------------------------------------- entry used by the CLI


def run(spec: BenchmarkSpec) -> dict:
    """Run one benchmark and write its outputs to ``spec.out``; returns the in-memory results."""
    out = Path(spec.out) if spec.out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    prob = spec.problem
    result: dict = {}
    if prob in ("griffith", "edge"):
        if prob == "griffith" and spec.params.get("sweep"):
            sweep = run_griffith_sweep(spec)
            result["sweep"] = sweep
            if out is not None:
                write_table(out / "griffith_sweep.csv", ["tip_points", "K_I", "reference", "rel_err"], sweep)
            return result
        rows = run_griffith(spec) if prob == "griffith" else run_edge(spec)
        result["rows"] = rows
        if out is not None:
            write_csv(out / f"{prob}_convergence.csv", rows)
    elif prob == "inclined":
        table = run_inclined(spec)
        result["table"] = table
        if out is not None:
            write_table(out / "inclined_convergence.csv", ["beta_deg", "K_I", "K_II", "K_I_ref", "K_II_ref"], table)
    elif prob == "multicrack":
        res = run_multicrack(spec)
        result.update(res)
        if out is not None:
            write_table(out / "multicrack_convergence.csv", ["length_ratio", "H_over_L", "K_I_norm", "K_II_norm"],
                        res["interaction"])
            write_table(out / "multicrack_angles.csv", ["theta_deg", "K_I_norm", "K_II_norm"], res["angle"])
    elif prob == "bimaterial":
        rows, energy = run_bimaterial(spec)
        result["rows"], result["energy"] = rows, energy
        if out is not None:
            write_csv(out / "bimaterial_convergence.csv", rows)
            write_table(out / "bimaterial_energy.csv", ["interface", "n", "energy"], energy)
    elif prob == "dcb":
        hist = run_dcb(spec)
        result["history"] = hist
        if out is not None:
            for scheme, h in hist.items():
                write_history(h, out / f"dcb_{scheme}_history.csv")
            mesh = dcb_problem(spec).mesh
            write_svg(out / "dcb_path.svg", mesh, {k: v[-1].crack for k, v in hist.items()})
            # reference: the straight-ahead tip position after the prescribed growth
            p = {**DCB, **spec.params.get("dcb", {})}
            ref = p["a"] + p["steps"] * p["da"]
            rows = []
            for h in hist.values():
                x = float(h[-1].crack.end_frame(1).point[0])
                rows.append(ConvergenceRow(mesh.h, x, ref, abs(x - ref) / ref))
            write_csv(out / "dcb_convergence.csv", rows)
    return result

