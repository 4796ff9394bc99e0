"""Compute steady-state points and sweeps with any of the three solvers."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io, jumps, master, observables
from .analysis import SweepRecord
from .errors import ConfigurationError, IntegrationError, SolverGuardError

log = logging.getLogger(__name__)


@dataclass
class PointResult:
    record: SweepRecord
    bond_currents: np.ndarray
    bond_stderr: np.ndarray
    profile: np.ndarray
    profile_stderr: np.ndarray
    times: np.ndarray | None = None
    currents: np.ndarray | None = None  # (samples, N-1)
    polarization: np.ndarray | None = None

    def summary(self) -> dict:
        return {"record": self.record.to_dict(), "bond_currents": self.bond_currents,
                "bond_stderr": self.bond_stderr, "profile": self.profile,
                "profile_stderr": self.profile_stderr}


def _record(run: io.RunConfig, solver: str, j, j_se, bn, bn_se, profile, **kw) -> SweepRecord:
    c = run.chain
    return SweepRecord(N=c.N, alpha=float(c.alpha), gamma=float(c.gamma), j_ness=float(j),
                       j_stderr=float(j_se), bottleneck=float(bn), bottleneck_stderr=float(bn_se),
                       solver=solver, seed=int(c.seed), profile=tuple(float(x) for x in profile), **kw)


def run_point(run: io.RunConfig, checkpoint: str | Path | None = None) -> PointResult:
    """Steady state of one configuration with the configured solver."""
    solver = run.resolved_solver()
    cfg = run.chain
    if solver == "ness-direct":
        if cfg.N > run.ness_direct_max_n or cfg.N > master.NESS_DIRECT_MAX_N:
            raise SolverGuardError(f"ness-direct handles N <= {master.NESS_DIRECT_MAX_N}; got N={cfg.N}")
        rho = master.ness_direct(cfg)
        bc = observables.bond_currents(rho, cfg.J)
        prof = observables.polarization_profile(rho)
        rec = _record(run, solver, bc.mean(), 0.0, prof[0] - prof[1], 0.0, prof)
        z = np.zeros_like
        return PointResult(rec, bc, z(bc), prof, z(prof))
    if solver == "exact-rk4":
        res = master.evolve_rk4(cfg, dt=run.exact_dt, t_end=run.t_max, sample_interval=run.sample_interval,
                                stop_at_steady=True)
        if not res.converged:
            raise IntegrationError(f"no steady state within t={run.t_max:g}")
        bc, prof = res.currents[-1], res.polarization[-1]
        rec = _record(run, solver, bc.mean(), 0.0, prof[0] - prof[1], 0.0, prof,
                      transient_cut=float(res.t_converged), t_end=float(res.times[-1]))
        z = np.zeros_like
        return PointResult(rec, bc, z(bc), prof, z(prof), res.times, res.currents, res.polarization)
    if solver == "trajectories":
        t_end = cfg.t_end or jumps.default_t_end(cfg.N)
        st = jumps.ensemble_average(cfg, n_traj=run.n_traj, t_end=t_end, steady_window=run.steady_window,
                                    sample_interval=run.sample_interval, mode=run.mode,
                                    workers=run.workers, checkpoint=checkpoint)
        bc, bc_se = st.bond_steady
        prof, prof_se = st.profile
        bn, bn_se = st.steady_bottleneck
        rec = _record(run, solver, st.steady_current, st.steady_current_se, bn, bn_se, prof,
                      n_traj=st.n_traj, transient_cut=float(st.window[0]), t_end=float(t_end))
        return PointResult(rec, bc, bc_se, prof, prof_se, st.times, st.mean_current, st.mean_pol)
    raise ConfigurationError(f"unknown solver {solver!r}")


def failed_record(run: io.RunConfig, exc: Exception) -> SweepRecord:
    c = run.chain
    msg = f"error: {type(exc).__name__}: {exc}".replace("\n", " ").replace(",", ";")
    nan = float("nan")
    return SweepRecord(N=c.N, alpha=float(c.alpha), gamma=float(c.gamma), j_ness=nan, j_stderr=nan,
                       bottleneck=nan, bottleneck_stderr=nan, solver=run.resolved_solver(),
                       n_traj=0, seed=int(c.seed), status=msg[:300])


def _point_task(run, checkpoint):
    try:
        return run_point(run, checkpoint).record
    except (ConfigurationError, IntegrationError, RuntimeError, ValueError, MemoryError) as exc:
        log.warning("point N=%d alpha=%g gamma=%g failed: %s", run.chain.N, run.chain.alpha,
                    run.chain.gamma, exc)
        return failed_record(run, exc)


def run_sweep(spec: io.SweepSpec, out_csv: Path, *, workers: int = 1, resume: bool = False,
              manifest_name: str | None = None, checkpoint_dir: Path | None = None) -> list[SweepRecord]:
    """Run every point and write the CSV in point order.

    Rows are appended as soon as all earlier points are finished, so an
    interrupted sweep leaves a valid prefix; ``resume`` keeps that prefix
    and computes only the remaining points.  Failures become rows with a
    non-"ok" status.
    """
    runs = spec.run_configs()
    done: list[SweepRecord] = []
    if resume and out_csv.exists():
        done = io.read_records(out_csv)
        if len(done) > len(runs):
            raise ConfigurationError("existing CSV has more rows than the sweep has points")
        for r, run in zip(done, runs):
            c = run.chain
            if (r.N, r.alpha, r.gamma) != (c.N, float(c.alpha), float(c.gamma)):
                raise ConfigurationError(f"existing CSV row {(r.N, r.alpha, r.gamma)} does not match the sweep")
        log.info("resuming sweep: %d of %d points present", len(done), len(runs))
    else:
        out_csv.write_text(io.csv_header(manifest_name))
    todo = list(range(len(done), len(runs)))

    def ckpt(i):
        if checkpoint_dir is None:
            return None
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
        return checkpoint_dir / f"point_{i:04d}.npz"

    records = list(done)
    with open(out_csv, "a") as fh:
        def emit(rec):
            fh.write(",".join(io.record_row(rec)) + "\n")
            fh.flush()
            records.append(rec)

        if workers <= 1:
            for i in todo:
                emit(_point_task(runs[i], ckpt(i)))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futs = [pool.submit(_point_task, runs[i], ckpt(i)) for i in todo]
                for f in futs:  # in point order: single writer, deterministic file
                    emit(f.result())
    return records
