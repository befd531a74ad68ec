"""Command-line entry point: ``xfrac <problem> [options]``.

Options may also come from a ``key = value`` config file (``--config``);
flags given on the command line take precedence. On failure a single line
``error: <ErrorClass>: <message>`` is written to stderr and the exit code is
nonzero.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import LARGE_MESHES, PROBLEMS, BenchmarkSpec, convergence_driver, run

log = logging.getLogger("xfrac")

# config-file keys and the argparse destinations they feed
CONFIG_KEYS = {
    "mesh": "mesh",
    "scheme": "scheme",
    "rule": "rule",
    "tip_points": "tip_points",
    "tip-points": "tip_points",
    "alpha_ir": "alpha_ir",
    "alpha-ir": "alpha_ir",
    "seed": "seed",
    "out": "out",
    "paper_scale": "paper_scale",
    "paper-scale": "paper_scale",
    "sweep": "sweep",
}


def _mesh_list(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mesh sizes must be integers, got {text!r}") from None
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("mesh sizes must be positive")
    return sizes


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[CONFIG_KEYS[key]] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xfrac", description="XFEM fracture benchmarks with conformal-map quadrature.")
    ap.add_argument("problem", choices=PROBLEMS)
    ap.add_argument("--mesh", type=_mesh_list, default=None, help="comma-separated element counts, e.g. 10,20,40")
    ap.add_argument("--scheme", choices=("sccm", "subcell"), default=None)
    ap.add_argument("--rule", choices=("midpoint", "chebyshev"), default=None)
    ap.add_argument("--tip-points", dest="tip_points", type=int, default=None)
    ap.add_argument("--alpha-ir", dest="alpha_ir", type=float, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--paper-scale", dest="paper_scale", action="store_true", default=None,
                    help="use the larger meshes of the original study")
    ap.add_argument("--sweep", action="store_true", default=None,
                    help="griffith only: tip point-budget sweep on a 60 x 60 mesh")
    ap.add_argument("--config", type=Path, default=None, help="key = value file; flags win")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def spec_from_args(args: argparse.Namespace) -> BenchmarkSpec:
    cfg = read_config(args.config) if args.config is not None else {}

    def pick(name, default=None, conv=lambda v: v):
        v = getattr(args, name)
        if v is not None:
            return v
        if name in cfg:
            return conv(cfg[name])
        return default

    meshes = pick("mesh", None, _mesh_list)
    if meshes is None and pick("paper_scale", False, _bool):
        meshes = LARGE_MESHES[args.problem]
    params = {}
    if pick("sweep", False, _bool):
        if args.problem != "griffith":
            raise ValueError("--sweep is only available for the griffith problem")
        params["sweep"] = True
    return BenchmarkSpec(
        problem=args.problem,
        meshes=meshes,
        scheme=pick("scheme", "sccm"),
        rule=pick("rule", "midpoint"),
        tip_points=pick("tip_points", 78, int),
        alpha_ir=pick("alpha_ir", 0.0, float),
        seed=pick("seed", 0, int),
        out=pick("out", Path("."), Path),
        params=params,
    )


def _summary(spec: BenchmarkSpec, result: dict) -> list[str]:
    lines = []
    rows = result.get("rows")
    if rows:
        for r in rows:
            lines.append(f"h={r.h:.6g} metric={r.metric:.8g} reference={r.reference:.8g} rel_err={r.rel_err:.4e}")
        if len(rows) > 1:
            lines.append(f"rate={convergence_driver(rows):.4f}")
    for b, k, ref, err in result.get("sweep", []):
        lines.append(f"tip_points={b} K_I={k:.8g} rel_err={err:.4e}")
    for row in result.get("table", []):
        lines.append("beta={:g} K_I={:.6g} K_II={:.6g} ref_I={:.6g} ref_II={:.6g}".format(*row))
    for scheme, hist in result.get("history", {}).items():
        tip = hist[-1].crack.end_frame(1).point
        lines.append(f"{scheme}: final tip ({tip[0]:.5f}, {tip[1]:.5f}) after {len(hist) - 1} steps")
    return lines


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = spec_from_args(args)
        result = run(spec)
    except Exception as exc:  # report every failure as one parseable line
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for line in _summary(spec, result):
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
