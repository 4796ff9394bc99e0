"""File formats: run configs, sweep CSV, manifests, checkpoints, plot data."""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
from dataclasses import dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np

from .analysis import SweepRecord
from .errors import ConfigurationError, DataError
from .model import ChainConfig

SCHEMA_VERSION = 1
OUT_DIR_ENV = "LRXXZ_OUT_DIR"
SOLVERS = ("auto", "ness-direct", "exact-rk4", "trajectories")

CSV_COLUMNS = (
    "N", "alpha", "gamma", "solver", "n_traj", "j_ness", "j_stderr", "bottleneck",
    "bottleneck_stderr", "transient_cut", "t_end", "seed", "status",
)
_INT_COLUMNS = {"N", "n_traj", "seed"}
_STR_COLUMNS = {"solver", "status"}


def fmt_float(x: float) -> str:
    """17 significant digits: exact round trip for IEEE doubles."""
    return format(float(x), ".17g")


# --------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one steady-state point."""

    chain: ChainConfig
    solver: str = "auto"
    n_traj: int = 1000
    steady_window: tuple | None = None
    sample_interval: float = 1.0
    mode: str = "rk4"
    exact_dt: float = 0.1
    t_max: float = 20000.0
    ness_direct_max_n: int = 7
    exact_max_n: int = 10
    workers: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.n_traj < 1:
            raise ConfigurationError("n_traj must be >= 1")
        if self.mode not in ("rk4", "euler"):
            raise ConfigurationError(f"mode must be 'rk4' or 'euler', got {self.mode!r}")
        if not self.exact_dt > 0 or not self.sample_interval > 0:
            raise ConfigurationError("exact_dt and sample_interval must be positive")

    def resolved_solver(self) -> str:
        if self.solver != "auto":
            return self.solver
        if self.chain.N <= self.ness_direct_max_n:
            return "ness-direct"
        if self.chain.N <= self.exact_max_n:
            return "exact-rk4"
        return "trajectories"

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "chain"}
        d.update(self.chain.to_dict())
        d["steady_window"] = None if self.steady_window is None else list(self.steady_window)
        return d


_CHAIN_KEYS = {"N", "J", "alpha", "gamma", "dt", "t_end", "seed"}
_RUN_KEYS = {f.name for f in fields(RunConfig)} - {"chain"}


def run_config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = set(d) - _CHAIN_KEYS - _RUN_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    if "N" not in d:
        raise ConfigurationError("config needs N")
    try:
        chain = ChainConfig(**{k: d[k] for k in _CHAIN_KEYS if k in d})
        kw = {k: d[k] for k in _RUN_KEYS if k in d}
        if kw.get("steady_window") is not None:
            kw["steady_window"] = tuple(float(x) for x in kw["steady_window"])
        return RunConfig(chain=chain, **kw)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian product of N, alpha, gamma (or an explicit point list) over shared settings."""

    points: tuple  # of (N, alpha, gamma)
    base: dict = field(default_factory=dict)

    def run_configs(self) -> list[RunConfig]:
        return [run_config_from_dict({**self.base, "N": n, "alpha": a, "gamma": g})
                for n, a, g in self.points]


def sweep_from_dict(d: dict) -> SweepSpec:
    if not isinstance(d, dict):
        raise ConfigurationError("sweep spec must be a JSON object")
    d = dict(d)
    if "points" in d:
        pts = d.pop("points")
        try:
            points = tuple((int(p["N"]), float(p["alpha"]), float(p["gamma"])) for p in pts)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad explicit point list: {exc}") from exc
    else:
        axes = []
        for key, conv in (("N", int), ("alpha", float), ("gamma", float)):
            v = d.pop(key, None)
            if v is None:
                raise ConfigurationError(f"sweep spec needs a list for {key!r}")
            v = v if isinstance(v, list) else [v]
            axes.append([conv(x) for x in v])
        points = tuple(product(*axes))
    if not points:
        raise ConfigurationError("sweep spec has no points")
    spec = SweepSpec(points=points, base=d)
    spec.run_configs()  # validate every point up front
    return spec


def output_dir(out: str | os.PathLike | None) -> Path:
    """``--out`` wins, then the environment override, then ``./lrxxz_out``."""
    p = Path(out or os.environ.get(OUT_DIR_ENV) or "lrxxz_out")
    p.mkdir(parents=True, exist_ok=True)
    return p


# --------------------------------------------------------------------------
# sweep CSV


def record_row(r: SweepRecord) -> list[str]:
    row = []
    for c in CSV_COLUMNS:
        v = getattr(r, c)
        row.append(str(v) if c in _STR_COLUMNS else str(int(v)) if c in _INT_COLUMNS else fmt_float(v))
    return row


def csv_header(manifest_name: str | None = None) -> str:
    head = f"# manifest: {manifest_name}\n" if manifest_name else ""
    return head + ",".join(CSV_COLUMNS) + "\n"


def format_records(records, manifest_name: str | None = None) -> str:
    buf = _io.StringIO()
    buf.write(csv_header(manifest_name))
    w = csv.writer(buf, lineterminator="\n")
    for r in records:
        w.writerow(record_row(r))
    return buf.getvalue()


def write_records(path, records, manifest_name: str | None = None) -> None:
    Path(path).write_text(format_records(records, manifest_name))


def parse_records(text: str) -> list[SweepRecord]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise DataError("empty CSV")
    reader = csv.reader(lines)
    header = tuple(next(reader))
    if header != CSV_COLUMNS:
        raise DataError(f"CSV columns {header} do not match the sweep schema {CSV_COLUMNS}")
    out = []
    for i, row in enumerate(reader, start=2):
        if len(row) != len(CSV_COLUMNS):
            raise DataError(f"row {i} has {len(row)} fields, expected {len(CSV_COLUMNS)}")
        kw = {}
        try:
            for c, v in zip(CSV_COLUMNS, row):
                kw[c] = v if c in _STR_COLUMNS else int(v) if c in _INT_COLUMNS else float(v)
        except ValueError as exc:
            raise DataError(f"row {i}: {exc}") from exc
        out.append(SweepRecord(**kw))
    return out


def read_records(path) -> list[SweepRecord]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return parse_records(text)


# --------------------------------------------------------------------------
# manifests and series


def code_version() -> str:
    from . import __version__
    return __version__


def manifest(run: RunConfig | None = None, *, kind: str, outputs: list[str], extra: dict | None = None) -> dict:
    m = {"schema_version": SCHEMA_VERSION, "code_version": code_version(), "kind": kind,
         "outputs": sorted(outputs)}
    if run is not None:
        m["config"] = run.to_dict()
        m["solver"] = run.resolved_solver()
        m["seed"] = run.chain.seed
    if extra:
        m.update(extra)
    return m


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


def format_series(times, currents, polarization, manifest_name: str | None = None) -> str:
    """Time series as CSV: t, j_0..j_{N-2}, j_mean, sz_0..sz_{N-1}, bottleneck."""
    currents, polarization = np.asarray(currents), np.asarray(polarization)
    nb, ns = currents.shape[1], polarization.shape[1]
    buf = _io.StringIO()
    if manifest_name:
        buf.write(f"# manifest: {manifest_name}\n")
    cols = ["t"] + [f"j_{k}" for k in range(nb)] + ["j_mean"] + [f"sz_{i}" for i in range(ns)] + ["bottleneck"]
    buf.write(",".join(cols) + "\n")
    jm = currents.mean(axis=1)
    bn = polarization[:, 0] - polarization[:, 1]
    for i, t in enumerate(times):
        vals = [t, *currents[i], jm[i], *polarization[i], bn[i]]
        buf.write(",".join(fmt_float(v) for v in vals) + "\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# ensemble checkpoints


def _ckpt_header(cfg, n_traj, t_end, window, dt, mode, chunk) -> dict:
    return {"chain": cfg.to_dict(), "n_traj": int(n_traj), "t_end": float(t_end),
            "window": [float(window[0]), float(window[1])], "dt": float(dt), "mode": mode,
            "chunk": int(chunk)}


def save_ensemble_checkpoint(path, stats, cfg, n_traj, t_end, window, dt, mode, chunk, chunks_done) -> None:
    header = _ckpt_header(cfg, n_traj, t_end, window, dt, mode, chunk)
    header["chunks_done"] = int(chunks_done)
    header["n_done"] = int(stats.n_traj)
    tmp = Path(str(path) + ".tmp.npz")
    np.savez(
        tmp, header=np.array(json.dumps(header, sort_keys=True)), times=stats.times,
        mean_current=stats.mean_current, m2_current=stats.m2_current, mean_pol=stats.mean_pol,
        m2_pol=stats.m2_pol, traj_ids=np.asarray(stats.traj_ids, dtype=np.int64),
        window_bonds=np.asarray(stats.window_bonds), window_pol=np.asarray(stats.window_pol),
        window_halves=np.asarray(stats.window_halves), final_bonds=np.asarray(stats.final_bonds),
    )
    os.replace(tmp, path)


def load_ensemble_checkpoint(path, cfg, n_traj, t_end, window, dt, mode, chunk):
    from .jumps import EnsembleStats

    with np.load(path, allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        want = _ckpt_header(cfg, n_traj, t_end, window, dt, mode, chunk)
        got = {k: header[k] for k in want}
        if got != json.loads(json.dumps(want)):
            raise ConfigurationError(f"checkpoint {path} belongs to a different run: {got} != {want}")
        stats = EnsembleStats(times=z["times"], window=tuple(window), n_traj=header["n_done"],
                              mean_current=z["mean_current"].copy(), m2_current=z["m2_current"].copy(),
                              mean_pol=z["mean_pol"].copy(), m2_pol=z["m2_pol"].copy(),
                              traj_ids=[int(i) for i in z["traj_ids"]],
                              window_bonds=list(z["window_bonds"]), window_pol=list(z["window_pol"]),
                              window_halves=[tuple(h) for h in z["window_halves"]],
                              final_bonds=list(z["final_bonds"]))
    return stats, int(header["chunks_done"])


# --------------------------------------------------------------------------
# fit output


GNUPLOT_TEMPLATE = """\
# generated plotting template; run with: gnuplot {script}
set terminal pngcairo size 900,650
set output '{png}'
set logscale xy
set xlabel 'N'
set ylabel '<j>'
set key outside
plot {plots}
"""


def fit_data_file(fit, records) -> str:
    """Tab-separated N, j, j_stderr, fitted j, transition marker (1 from transition_N on)."""
    lines = ["# N\tj\tj_stderr\tj_fit\tballistic"]
    for r in sorted(records, key=lambda r: r.N):
        flag = int(fit.transition_N is not None and r.N >= fit.transition_N)
        lines.append("\t".join([str(r.N), fmt_float(r.j_ness), fmt_float(r.j_stderr),
                                fmt_float(float(fit.predict(r.N))), str(flag)]))
    return "\n".join(lines) + "\n"


def series_label(alpha: float, gamma: float) -> str:
    return f"alpha{alpha:g}_gamma{gamma:g}"


def gnuplot_script(names: list[str], png: str = "fits.png", script: str = "plot_fits.gp") -> str:
    plots = ", \\\n     ".join(
        f"'{n}' using 1:2:3 with yerrorbars title '{n}', '{n}' using 1:4 with lines notitle" for n in names
    )
    return GNUPLOT_TEMPLATE.format(script=script, png=png, plots=plots)


def nan_to_none(x):
    return None if isinstance(x, float) and math.isnan(x) else x
