"""Minimal-runtime sweeps over Grover sizes for the power-law and linear schedules."""

from __future__ import annotations

import argparse
from pathlib import Path

from adia.harness import emit_report, fit_sweep, scaling_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="grover", help="grover or qlsa_linear")
    ap.add_argument("--sizes", default="4,16,64,256,1024", help="comma-separated N (or kappa)")
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.05], help="target errors")
    ap.add_argument("--p", type=float, default=1.5, help="power-law exponent")
    ap.add_argument("--outdir", default="results", help="directory for report files")
    args = ap.parse_args()

    sizes = [int(x) for x in args.sizes.split(",")]
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for eps in args.eps:
        for sched in ("power", "linear"):
            points = scaling_sweep(args.family, sizes, sched, p=args.p, epsilon=eps)
            fit = fit_sweep(points)
            name = f"{args.family}_{sched}_eps{eps:g}.json"
            emit_report(points, out / name, fit,
                        {"family": args.family, "sizes": sizes, "schedule": sched,
                         "p": args.p, "eps": eps})
            ts = ", ".join(f"{pt.t_star:.2f}" for pt in points)
            print(f"{args.family:12s} {sched:7s} eps={eps:<5g} slope={fit.slope:.4f} "
                  f"r2={fit.r_squared:.4f}  T*=[{ts}]")


if __name__ == "__main__":
    main()
