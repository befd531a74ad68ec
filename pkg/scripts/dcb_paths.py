"""Final DCB tip positions under both schemes for a range of pre-crack offsets."""
import argparse

from xfrac.bench import DCB, BenchmarkSpec, run_dcb


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--offsets", type=float, nargs="+", default=[0.0125, 0.025, 0.05])
    args = ap.parse_args()
    print(f"{'offset':>8} {'scheme':>8} {'x':>8} {'y':>8}")
    for off in args.offsets:
        hist = run_dcb(BenchmarkSpec(problem="dcb", params={"dcb": {"offset": off}}))
        for scheme, h in hist.items():
            x, y = h[-1].crack.end_frame(1).point
            print(f"{off:8.4f} {scheme:>8} {x:8.4f} {y - 0.5 * DCB['height']:8.4f}")


if __name__ == "__main__":
    main()
