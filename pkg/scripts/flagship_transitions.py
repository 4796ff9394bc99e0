"""Current-vs-N series for alpha in {0.5, 1.0, 1.5} at Gamma=2 and their transition lengths.

All points use the exact solvers (direct solve up to N=7, block RK4 above),
so the run is deterministic.  The CSV is written row by row and the script
resumes from an existing file, so it can be interrupted freely.  Expect a
few hours on one core, dominated by the N=12 points.

    python scripts/flagship_transitions.py --out results/flagship
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from lrxxz import io, runner
from lrxxz.analysis import DEFAULT_EPSILON, detect_transition

ALPHAS = (0.5, 1.0, 1.5)
MAX_N = {0.5: 10, 1.0: 12, 1.5: 12}
DEFAULT_OUT = "results/flagship"


def flagship_spec(gamma: float = 2.0, max_n: dict | None = None, dt: float = 0.2) -> io.SweepSpec:
    max_n = max_n or MAX_N
    # cheap points first so an interrupted run leaves the most useful prefix
    pts = [(n, a, gamma) for n in range(3, 13) for a in ALPHAS if n <= max_n[a]]
    return io.SweepSpec(points=tuple(pts), base={"solver": "auto", "exact_max_n": 12, "exact_dt": dt})


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default=DEFAULT_OUT)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--fresh", action="store_true", help="ignore an existing CSV")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv = out / "sweep.csv"
    recs = runner.run_sweep(flagship_spec(args.gamma), csv, resume=not args.fresh and csv.exists())
    for a in ALPHAS:
        series = sorted((r for r in recs if r.alpha == a and r.status == "ok"), key=lambda r: r.N)
        tn = detect_transition(series, epsilon=args.epsilon)
        print(f"alpha={a:g}: N={series[0].N}..{series[-1].N}, transition_N={tn}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
