"""Command line: ``lrxxz {run,sweep,fit,verify,bench}``.

Exit codes: 0 ok, 1 verification failure, 2 usage or configuration error,
3 solver guard (a solver refused the system size).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections import defaultdict
from dataclasses import replace

import numpy as np

from . import io, runner
from .analysis import DEFAULT_EPSILON, fit_series
from .errors import ConfigurationError, DataError, FitError, SolverGuardError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3

log = logging.getLogger("lrxxz")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _overrides(args, d: dict) -> dict:
    d = dict(d)
    if getattr(args, "dt", None) is not None:
        d["dt"] = args.dt
        d["exact_dt"] = args.dt
    if getattr(args, "traj", None) is not None:
        d["n_traj"] = args.traj
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        d["workers"] = args.workers
    return d


def cmd_run(args) -> int:
    run = io.run_config_from_dict(_overrides(args, io.load_json(args.config)))
    out = io.output_dir(args.out)
    ckpt = out / "ensemble_checkpoint.npz" if args.resume or run.resolved_solver() == "trajectories" else None
    if ckpt is not None and not args.resume and ckpt.exists():
        ckpt.unlink()
    res = runner.run_point(run, checkpoint=ckpt)
    outputs = ["summary.csv", "summary.json"]
    if res.times is not None:
        (out / "series.csv").write_text(
            io.format_series(res.times, res.currents, res.polarization, "manifest.json"))
        outputs.append("series.csv")
    io.write_records(out / "summary.csv", [res.record], "manifest.json")
    io.write_json(out / "summary.json", {"manifest": "manifest.json", **res.summary()})
    io.write_json(out / "manifest.json", io.manifest(run, kind="run", outputs=outputs, extra={
        "steady_window": res.record.transient_cut if res.record.stochastic else None}))
    if ckpt is not None and ckpt.exists():
        ckpt.unlink()
    r = res.record
    print(f"N={r.N} alpha={r.alpha:g} gamma={r.gamma:g} solver={r.solver}: "
          f"j={r.j_ness:.10g} +- {r.j_stderr:.3g}, bottleneck={r.bottleneck:.6g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = io.sweep_from_dict(_overrides(args, io.load_json(args.config)))
    out = io.output_dir(args.out)
    csv_path = out / "sweep.csv"
    workers = args.workers or 1
    # nested trajectory parallelism only when points run one at a time
    if workers > 1:
        spec = replace(spec, base={**spec.base, "workers": 1})
    recs = runner.run_sweep(spec, csv_path, workers=workers, resume=args.resume,
                            manifest_name="manifest.json", checkpoint_dir=out / "checkpoints")
    io.write_json(out / "manifest.json", io.manifest(kind="sweep", outputs=["sweep.csv"], extra={
        "sweep": {"points": [list(p) for p in spec.points], "base": spec.base},
        "epsilon_default": DEFAULT_EPSILON}))
    bad = sum(r.status != "ok" for r in recs)
    print(f"{len(recs)} points written to {csv_path} ({bad} failed)")
    return EXIT_OK


def cmd_fit(args) -> int:
    records = io.read_records(args.csv)
    out = io.output_dir(args.out)
    groups = defaultdict(list)
    for r in records:
        if r.status == "ok":
            groups[(r.alpha, r.gamma)].append(r)
    results, names = [], []
    for (alpha, gamma), recs in sorted(groups.items()):
        recs.sort(key=lambda r: r.N)
        entry = {"alpha": alpha, "gamma": gamma, "epsilon": args.epsilon}
        try:
            fit = fit_series(recs, epsilon=args.epsilon)
        except (FitError, DataError) as exc:
            entry["error"] = str(exc)
            results.append(entry)
            continue
        entry.update({k: getattr(fit, k) for k in ("gamma_exp", "gamma_exp_stderr", "amplitude",
                                                    "n_range", "Ns", "residuals", "transition_N",
                                                    "regime", "weighted")})
        entry["regimes"] = {str(r.N): ("ballistic" if fit.transition_N is not None and r.N >= fit.transition_N
                                       else "diffusive") for r in recs}
        name = f"fit_{io.series_label(alpha, gamma)}.dat"
        (out / name).write_text(io.fit_data_file(fit, recs))
        names.append(name)
        results.append(entry)
        tn = "none" if fit.transition_N is None else fit.transition_N
        print(f"alpha={alpha:g} gamma={gamma:g}: gamma_exp={fit.gamma_exp:.4f} "
              f"(N {fit.n_range[0]}..{fit.n_range[1]}), transition_N={tn}, regime={fit.regime}")
    io.write_json(out / "fits.json", {"source": str(args.csv), "epsilon": args.epsilon, "fits": results})
    (out / "plot_fits.gp").write_text(io.gnuplot_script(names))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.only)
    for r in results:
        print(f"[{'PASS' if r.ok else 'FAIL'}] {r.name:30s} {r.seconds:7.1f}s  {r.detail}")
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_bench(args) -> int:
    from . import jumps, master, model

    rows = []
    for n in args.sizes:
        cfg = model.ChainConfig(N=n, alpha=1.0)
        table = model.coupling_table(cfg)
        prop = jumps.Propagator(cfg, table)
        psi = jumps.initial_state(n)
        u = np.ones(10)
        prop.advance(psi.copy(), u)
        reps = max(10, int(2e5 / cfg.dim))
        t0 = time.perf_counter()
        prop.advance(psi, np.ones(reps))
        step_us = (time.perf_counter() - t0) / reps * 1e6
        rho_ms = float("nan")
        if n <= args.max_rho_n:
            gen = master._Generator(cfg, table, master.LindbladSpec.boundary(cfg))
            rho = master.initial_density(n)
            buf = np.empty_like(rho)
            gen(rho, buf)
            k = max(1, int(2 ** (20 - 2 * n)))
            t0 = time.perf_counter()
            for _ in range(k):
                gen(rho, buf)
            rho_ms = (time.perf_counter() - t0) / k * 1e3
        rows.append({"N": n, "trajectory_step_us": step_us, "liouvillian_apply_ms": rho_ms})
        print(f"N={n:2d}  trajectory RK4 step {step_us:10.2f} us   Liouvillian apply {rho_ms:10.3f} ms")
    if args.out:
        out = io.output_dir(args.out)
        io.write_json(out / "bench.json", {"rows": rows, "code_version": io.code_version()})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lrxxz", description="Boundary-driven long-range XXZ chain: NESS transport.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", help=f"output directory (default: ${io.OUT_DIR_ENV} or ./lrxxz_out)")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--traj", type=int, default=None, help="number of trajectories")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--resume", action="store_true")

    sp = sub.add_parser("run", help="one steady-state point")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="grid of points to a sweep CSV")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fit", help="power-law fits and transition detection on a sweep CSV")
    sp.add_argument("csv")
    sp.add_argument("--out")
    sp.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="saturation threshold")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("verify", help="run the self-check suite")
    sp.add_argument("--only", nargs="*", default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="kernel timings")
    sp.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10, 12])
    sp.add_argument("--max-rho-n", type=int, default=9)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if hasattr(args, "epsilon") and not args.epsilon > 0:
        print("lrxxz: error: --epsilon must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except SolverGuardError as exc:
        print(f"lrxxz: solver guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ConfigurationError, DataError, FitError) as exc:
        print(f"lrxxz: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
