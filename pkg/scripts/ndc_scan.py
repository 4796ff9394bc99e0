"""Steady-state current against Gamma at fixed N and alpha, and the current maximum.

    python scripts/ndc_scan.py --N 7 --alpha 2 --out results/ndc
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from lrxxz import io, runner
from lrxxz.analysis import ndc_scan


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=7)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--gamma-min", type=float, default=0.05)
    p.add_argument("--gamma-max", type=float, default=8.0)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--out", default="results/ndc")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gammas = np.geomspace(args.gamma_min, args.gamma_max, args.points)
    spec = io.SweepSpec(points=tuple((args.N, args.alpha, float(g)) for g in gammas), base={"solver": "auto"})
    recs = runner.run_sweep(spec, out / "sweep.csv", resume=(out / "sweep.csv").exists())
    res = ndc_scan(recs)
    io.write_json(out / "ndc.json", {"N": args.N, "alpha": args.alpha, "gamma_max": res.gamma_max,
                                     "j_max": res.j_max, "gammas": res.gammas, "currents": res.currents})
    print(f"N={args.N} alpha={args.alpha:g}: current maximum {res.j_max:.6f} at Gamma={res.gamma_max:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
