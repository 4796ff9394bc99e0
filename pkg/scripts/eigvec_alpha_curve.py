"""Weights f+- of the three-site eigenvectors along alpha, as CSV.

    python scripts/eigvec_alpha_curve.py --out results/eigvec_curve.csv
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from lrxxz import analytic


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--Jx", type=float, default=0.5)
    p.add_argument("--alpha-min", type=float, default=0.01)
    p.add_argument("--alpha-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", default="results/eigvec_curve.csv")
    args = p.parse_args(argv)
    grid = np.geomspace(args.alpha_min, args.alpha_max, args.points)
    text = analytic.curve_csv(analytic.eigvec_alpha_curve(grid, Jx=args.Jx), Jx=args.Jx)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(f"{len(grid)} rows written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
