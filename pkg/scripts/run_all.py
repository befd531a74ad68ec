"""Run every benchmark and write its CSV/SVG outputs under one directory."""
import argparse
import time
from pathlib import Path

from xfrac.bench import LARGE_MESHES, PROBLEMS, BenchmarkSpec, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--scheme", choices=("sccm", "subcell"), default="sccm")
    ap.add_argument("--paper-scale", action="store_true", help="use the larger published mesh sequences")
    args = ap.parse_args()
    for prob in PROBLEMS:
        t0 = time.perf_counter()
        meshes = LARGE_MESHES[prob] if args.paper_scale else None
        run(BenchmarkSpec(problem=prob, meshes=meshes, scheme=args.scheme, out=args.out))
        print(f"{prob:12s} {time.perf_counter() - t0:6.1f}s")
    run(BenchmarkSpec(problem="griffith", scheme=args.scheme, out=args.out, params={"sweep": True}))
    print(f"outputs in {args.out}")


if __name__ == "__main__":
    main()
