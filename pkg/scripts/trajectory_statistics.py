"""Trajectory statistics at N=7, alpha=2, Gamma=2 against the exact steady state.

Runs one large ensemble (default 10000 trajectories to t=120, steady
window [90, 120]) and reports

* the time- and ensemble-averaged current with its standard error,
* s_M, the spread of M-trajectory ensemble means of the bond-0 current at
  the final time, for M in {10, 100, 1000},
* the exact current for Gamma in {1.5, 2, 2.5}.

The ensemble is checkpointed after every chunk of trajectories, so an
interrupted run resumes where it stopped.

    python scripts/fig_a3_statistics.py --out results/trajectory_stats
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from lrxxz import io, jumps, master, model, observables

POOL = dict(N=7, alpha=2.0, gamma=2.0, n_traj=10000, t_end=120.0, window=(90.0, 120.0))
S_REF = {10: 0.0357, 100: 0.0114, 1000: 0.0036}
DEFAULT_OUT = "results/trajectory_stats"


def pool_checkpoint(out: Path) -> Path:
    return out / "pool_checkpoint.npz"


def run_pool(out: Path, n_traj: int | None = None, workers: int = 1) -> jumps.EnsembleStats:
    out.mkdir(parents=True, exist_ok=True)
    cfg = model.ChainConfig(N=POOL["N"], alpha=POOL["alpha"], gamma=POOL["gamma"])
    return jumps.ensemble_average(cfg, n_traj=n_traj or POOL["n_traj"], t_end=POOL["t_end"],
                                  steady_window=POOL["window"], workers=workers,
                                  checkpoint=pool_checkpoint(out))


def summarize(st: jumps.EnsembleStats) -> dict:
    exact = {g: float(observables.bond_currents(master.ness_direct(
        model.ChainConfig(N=7, alpha=2.0, gamma=g))).mean()) for g in (1.5, 2.0, 2.5)}
    s = {}
    for M in S_REF:
        std, groups = st.repeated_ensemble_std(M)
        s[M] = {"std": std, "groups": groups, "reference": S_REF[M], "ratio": std / S_REF[M]}
    return {"n_traj": st.n_traj, "steady_current": st.steady_current, "steady_current_se": st.steady_current_se,
            "exact_current": exact, "s_M": s,
            "sqrt_scaling": {f"{a}->{b}": s[a]["std"] / s[b]["std"] * math.sqrt(a / b)
                             for a, b in ((10, 100), (100, 1000))}}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default=DEFAULT_OUT)
    p.add_argument("--traj", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)
    out = Path(args.out)
    st = run_pool(out, args.traj, args.workers)
    summary = summarize(st)
    io.write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
