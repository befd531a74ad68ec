import csv
import math

import numpy as np
import pytest

from xfrac.bench import (MULTI, LARGE_MESHES, BenchmarkSpec, ConvergenceRow, bimaterial_alpha, bimaterial_exact,
                         center_crack_reference, convergence_driver, dcb_problem, edge_factor, edge_reference,
                         griffith_reference, griffith_solve, inclined_reference, multicrack_geometry, run, write_csv,
                         write_svg)
from xfrac.cli import build_parser, main, read_config, spec_from_args
from xfrac.errors import UnsupportedGeometryError, ValidityRangeError
from xfrac.fracture import quasi_static_run
from xfrac.geometry import CrackPath
from xfrac.mesh import structured_mesh


# ---------------------------------------------------------------- references


def test_griffith_reference_value():
    assert griffith_reference() == pytest.approx(1.0e4 * math.sqrt(100 * math.pi), rel=1e-15)
    assert griffith_reference() == pytest.approx(1.77245e5, rel=1e-5)


def test_edge_factor_examples():
    assert edge_factor(0.5) == pytest.approx(1.12 - 0.1155 + 2.6375 - 2.7150 + 1.899375, rel=1e-14)
    assert edge_factor(0.5) == pytest.approx(2.826375, rel=1e-14)
    assert edge_factor(0.0) == 1.12
    assert edge_reference(0.3) == pytest.approx(edge_factor(0.3) * math.sqrt(0.3 * math.pi))
    with pytest.raises(ValidityRangeError):
        edge_factor(0.61)


def test_inclined_reference_examples():
    k = griffith_reference()
    assert tuple(inclined_reference(0.0)) == pytest.approx((k, 0.0))
    assert tuple(inclined_reference(math.pi / 2)) == pytest.approx((0.0, 0.0), abs=1e-10 * k)
    assert tuple(inclined_reference(math.pi / 4)) == pytest.approx((k / 2, k / 2), rel=1e-14)


def test_center_crack_secant_reference():
    a, w = 0.1, 1.0
    assert center_crack_reference(a, w) == pytest.approx(math.sqrt(math.pi * a / math.cos(math.pi * a / w)))


def test_bimaterial_exact_examples():
    assert bimaterial_alpha(1.0, 10.0, 0.0) == pytest.approx(10 / 11, rel=1e-15)
    for b in (0.0, 0.1, -0.3):
        u = bimaterial_exact(1.0, 10.0, b)
        below, above = u(np.array([[0.0, b - 1e-12]]))[0, 1], u(np.array([[0.0, b + 1e-12]]))[0, 1]
        assert below == pytest.approx((b + 1) * bimaterial_alpha(1.0, 10.0, b), rel=1e-10)
        assert above == pytest.approx(below, rel=1e-10)
        assert u(np.array([[0.3, -1.0], [0.3, 1.0]]))[:, 1] == pytest.approx([0.0, 1.0], abs=1e-15)


# ---------------------------------------------------------------- reporting


@pytest.mark.parametrize("p", [0.4, 1.34])
def test_convergence_driver_synthetic(p):
    rows = [ConvergenceRow(h, 0.0, 1.0, 3.0 * h ** p) for h in (0.1, 0.05, 0.025, 0.0125)]
    assert convergence_driver(rows) == pytest.approx(p, abs=1e-6)
    assert math.isnan(rows[0].rate)
    assert rows[2].rate == pytest.approx(p, abs=1e-9)


def test_convergence_driver_needs_two_rows():
    with pytest.raises(ValueError):
        convergence_driver([ConvergenceRow(0.1, 1.0, 1.0, 0.1)])


def test_csv_and_svg_outputs(tmp_path):
    rows = [ConvergenceRow(0.1, 1.1, 1.0, 0.1), ConvergenceRow(0.05, 1.05, 1.0, 0.05)]
    convergence_driver(rows)
    write_csv(tmp_path / "c.csv", rows)
    with open(tmp_path / "c.csv") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["h", "metric", "reference", "rel_err", "rate"]
    assert got[1][4] == "" and float(got[2][4]) == pytest.approx(1.0)
    crack = CrackPath(np.array([[0.0, 0.5], [0.6, 0.55]]), tips=(False, True))
    write_svg(tmp_path / "p.svg", structured_mesh(4, 4), {"sccm": crack})
    svg = (tmp_path / "p.svg").read_text()
    assert svg.startswith("<svg") and "<polyline" in svg and "<circle" in svg and "<rect" in svg


def test_spec_validation():
    with pytest.raises(ValueError):
        BenchmarkSpec(problem="griffith", meshes=(20, 10))
    with pytest.raises(ValueError):
        BenchmarkSpec(problem="plate")
    with pytest.raises(ValueError):
        BenchmarkSpec(problem="griffith", alpha_ir=0.6)
    assert BenchmarkSpec(problem="dcb").meshes == (60,)


# ---------------------------------------------------------------- problem set-up


def test_scheme_toggle_changes_only_quadrature():
    a, _, _ = griffith_solve(20, BenchmarkSpec(problem="griffith", scheme="sccm"))
    b, _, _ = griffith_solve(20, BenchmarkSpec(problem="griffith", scheme="subcell"))
    assert a.disc.ndof == b.disc.ndof
    for ka, kb in zip(a.disc.dofmap.enrichments, b.disc.dofmap.enrichments):
        assert ka.kind == kb.kind and np.array_equal(ka.nodes, kb.nodes)


def test_multicrack_layout():
    c1, c2 = multicrack_geometry(MULTI)
    A, B = c1.vertices[-1], c2.vertices[0]
    assert B - A == pytest.approx([MULTI["L"], MULTI["H"]])
    assert c1.length == pytest.approx(2 * MULTI["a1"])
    with pytest.raises(UnsupportedGeometryError):
        multicrack_geometry({**MULTI, "H": 0.0, "L": -0.1})


def test_dcb_first_step_is_nearly_mode_one():
    prob = dcb_problem(BenchmarkSpec(problem="dcb"))
    assert prob.mesh.n_elements == 1200
    hist = quasi_static_run(prob, 1, 0.15)
    sif = hist[0].sif
    assert sif.K_I > 0
    assert abs(sif.K_II) < 0.05 * sif.K_I


def test_runs_are_deterministic(tmp_path):
    for d in ("a", "b"):
        run(BenchmarkSpec(problem="edge", meshes=(10, 20), alpha_ir=0.2, seed=4, out=tmp_path / d))
    assert (tmp_path / "a" / "edge_convergence.csv").read_bytes() == (tmp_path / "b" / "edge_convergence.csv").read_bytes()


# ---------------------------------------------------------------- command line


def test_cli_run_writes_csv(tmp_path, capsys):
    rc = main(["edge", "--mesh", "10,20", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "rate=" in out
    assert (tmp_path / "edge_convergence.csv").exists()


def test_cli_reports_errors(tmp_path, capsys):
    rc = main(["griffith", "--mesh", "20,10", "--out", str(tmp_path)])
    assert rc != 0
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: ValueError:")
    assert len(err.splitlines()) == 1


def test_cli_config_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# desk run\nscheme = subcell\nmesh = 10, 20\ntip-points = 39\npaper_scale = yes\n")
    args = build_parser().parse_args(["griffith", "--config", str(cfg), "--mesh", "40"])
    spec = spec_from_args(args)
    assert spec.meshes == (40,)
    assert spec.scheme == "subcell"
    assert spec.tip_points == 39
    assert read_config(cfg)["mesh"] == "10, 20"
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(ValueError):
        read_config(bad)


def test_cli_paper_scale_meshes():
    spec = spec_from_args(build_parser().parse_args(["multicrack", "--paper-scale"]))
    assert spec.meshes == LARGE_MESHES["multicrack"] == (72,)
    assert spec_from_args(build_parser().parse_args(["inclined"])).meshes == (50,)
