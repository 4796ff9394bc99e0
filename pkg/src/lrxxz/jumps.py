"""Monte Carlo wave-function unravelling of the boundary-driven chain.

Each trajectory carries a pure state.  Per time step one uniform number r
decides between the two boundary jumps and no-jump evolution:

    p0 = dt Gamma <P_down(0)>     (pump s+_0 fires)
    p1 = dt Gamma <P_up(N-1)>     (drain s-_{N-1} fires)

    r < p0            -> psi <- s+_0 psi
    r < p0 + p1       -> psi <- s-_{N-1} psi
    otherwise         -> psi <- exp(-i H_eff dt) psi   (RK4 or first-order Euler)

followed by renormalisation, with

    H_eff = H - (i/2) Gamma (P_down(0) + P_up(N-1)).

Jump selection proportional to p0:p1 is the standard choice that reproduces
the Lindblad equation to first order in dt.  The no-jump step uses RK4 by
default; ``mode="euler"`` switches to ``psi <- (1 - i dt H_eff) psi``, which
is the first-order scheme with its known small-dt pathologies kept intact for
replication runs.

Every trajectory draws from its own Philox stream keyed by
``(seed, trajectory id)``; ensembles are therefore reproducible for any
worker layout.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from . import basis, rng
from .errors import ConfigurationError, StepSizeError
from .model import ChainConfig, CouplingTable, coupling_table, hamiltonian_sparse

log = logging.getLogger(__name__)

MAX_JUMP_PROBABILITY = 0.1
NORM_TOL = 1e-10
MIN_WINDOW_SAMPLES = 10
MODES = ("rk4", "euler")
DEFAULT_CHUNK = 50  # trajectories per work unit; fixed so results do not depend on the worker count

# kernel status codes
_OK, _STEP_TOO_LARGE, _ZERO_NORM = 0, 1, 2


def default_t_end(N: int) -> float:
    """Run length covering the transient: 300 time units, plus 300 per site beyond five."""
    return 300.0 + 300.0 * max(N - 5, 0)


def initial_state(n: int, code: int | str = 1) -> np.ndarray:
    """Default start ``|up down down ...>`` (basis code 1)."""
    return basis.basis_state(n, code)


# --------------------------------------------------------------------------
# compiled kernels


@nb.njit(cache=True)
def _heff_apply(psi, out, diag_c, indptr, indices, half_j):
    d = psi.shape[0]
    for k in range(d):
        acc = 0j
        for p in range(indptr[k], indptr[k + 1]):
            acc += psi[indices[p]]
        out[k] = diag_c[k] * psi[k] + half_j * acc


@nb.njit(cache=True)
def _populations(psi, pump, drain):
    pd = 0.0
    pu = 0.0
    for k in range(psi.shape[0]):
        w = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
        if basis.bit(k, pump) == 0:
            pd += w
        if basis.bit(k, drain) == 1:
            pu += w
    return pd, pu


@nb.njit(cache=True)
def _normalize(psi):
    s = 0.0
    for k in range(psi.shape[0]):
        s += psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
    if s <= 0.0:
        return False
    inv = 1.0 / math.sqrt(s)
    for k in range(psi.shape[0]):
        psi[k] *= inv
    return True


@nb.njit(cache=True)
def _jump(psi, site, raise_):
    m = 1 << site
    for k in range(psi.shape[0]):
        if raise_:
            if basis.bit(k, site) == 0:
                psi[k | m] = psi[k]
                psi[k] = 0.0
        elif basis.bit(k, site) == 1:
            psi[k ^ m] = psi[k]
            psi[k] = 0.0


@nb.njit(cache=True)
def _advance(psi, uniforms, dt, gamma, diag_c, indptr, indices, half_j, pump, drain, euler,
             jump_step, jump_chan, k1, k2, k3, k4, tmp):
    """Take ``len(uniforms)`` steps in place; returns (status, steps done, jumps)."""
    d = psi.shape[0]
    nj = 0
    a = -1j * dt
    for s in range(uniforms.shape[0]):
        pd, pu = _populations(psi, pump, drain)
        p0 = dt * gamma * pd
        p1 = dt * gamma * pu
        if p0 + p1 > 0.1:
            return 1, s, nj
        r = uniforms[s]
        if r < p0:
            _jump(psi, pump, True)
            jump_step[nj] = s
            jump_chan[nj] = 0
            nj += 1
        elif r < p0 + p1:
            _jump(psi, drain, False)
            jump_step[nj] = s
            jump_chan[nj] = 1
            nj += 1
        elif euler:
            _heff_apply(psi, k1, diag_c, indptr, indices, half_j)
            for k in range(d):
                psi[k] += a * k1[k]
        else:
            _heff_apply(psi, k1, diag_c, indptr, indices, half_j)
            for k in range(d):
                tmp[k] = psi[k] + 0.5 * a * k1[k]
            _heff_apply(tmp, k2, diag_c, indptr, indices, half_j)
            for k in range(d):
                tmp[k] = psi[k] + 0.5 * a * k2[k]
            _heff_apply(tmp, k3, diag_c, indptr, indices, half_j)
            for k in range(d):
                tmp[k] = psi[k] + a * k3[k]
            _heff_apply(tmp, k4, diag_c, indptr, indices, half_j)
            for k in range(d):
                psi[k] += (a / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
        if not _normalize(psi):
            return 2, s, nj
    return 0, uniforms.shape[0], nj


@nb.njit(cache=True)
def _observe(psi, n, J, cur, pol):
    for i in range(n):
        pol[i] = 0.0
    for i in range(n - 1):
        cur[i] = 0.0
    for k in range(psi.shape[0]):
        w = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
        for i in range(n):
            if basis.bit(k, i):
                pol[i] += w
            else:
                pol[i] -= w
        for i in range(n - 1):
            # source: bit i+1 up, bit i down; target has the pair swapped
            if basis.bit(k, i + 1) == 1 and basis.bit(k, i) == 0:
                t = basis.flip_pair(k, i)
                c = psi[t].conjugate() * psi[k]
                cur[i] += -2.0 * J * c.imag


# --------------------------------------------------------------------------
# propagator


class Propagator:
    """Precomputed effective generator for one chain configuration."""

    def __init__(self, cfg: ChainConfig, table: CouplingTable | None = None, *,
                 dt: float | None = None, mode: str = "rk4"):
        if mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
        self.cfg = cfg
        self.table = coupling_table(cfg) if table is None else table
        if self.table.N != cfg.N:
            raise ConfigurationError("coupling table was built for a different N")
        self.dt = float(cfg.dt if dt is None else dt)
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        self.mode = mode
        n = cfg.N
        self.pump, self.drain = 0, n - 1
        decay = cfg.gamma * ((basis.site_bits(n, 0) == 0).astype(float)
                             + (basis.site_bits(n, n - 1) == 1).astype(float))
        self.diag_c = np.asarray(self.table.zz_diagonal()) - 0.5j * decay
        hop = hamiltonian_sparse(self.table)
        hop.setdiag(0.0)
        hop.eliminate_zeros()
        hop.sort_indices()
        self.indptr = hop.indptr.astype(np.int64)
        self.indices = hop.indices.astype(np.int64)
        self.half_j = 0.5 * self.table.J
        self._scratch = tuple(np.zeros(cfg.dim, dtype=np.complex128) for _ in range(5))

    def effective_apply(self, psi: np.ndarray) -> np.ndarray:
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        if psi.shape != (self.cfg.dim,):
            raise ConfigurationError(f"state has shape {psi.shape}, expected ({self.cfg.dim},)")
        out = np.empty_like(psi)
        _heff_apply(psi, out, self.diag_c, self.indptr, self.indices, self.half_j)
        return out

    def advance(self, psi: np.ndarray, uniforms: np.ndarray):
        """Advance ``psi`` in place by ``len(uniforms)`` steps; returns jump (step, channel) arrays."""
        m = uniforms.shape[0]
        js = np.empty(m, dtype=np.int64)
        jc = np.empty(m, dtype=np.int64)
        status, done, nj = _advance(
            psi, uniforms, self.dt, float(self.cfg.gamma), self.diag_c, self.indptr,
            self.indices, self.half_j, self.pump, self.drain, self.mode == "euler", js, jc,
            *self._scratch,
        )
        if status == _STEP_TOO_LARGE:
            raise StepSizeError(
                f"jump probability per step exceeds {MAX_JUMP_PROBABILITY} at dt={self.dt:g}, "
                f"gamma={self.cfg.gamma:g}; reduce dt"
            )
        if status == _ZERO_NORM:
            raise AssertionError("state collapsed to zero norm; jump drawn with vanishing probability")
        return js[:nj], jc[:nj]

    def observe(self, psi: np.ndarray, cur: np.ndarray, pol: np.ndarray) -> None:
        _observe(psi, self.cfg.N, float(self.cfg.J), cur, pol)


def effective_apply(cfg: ChainConfig, table: CouplingTable | None, psi) -> np.ndarray:
    """``H_eff |psi>`` with the two boundary decay projectors."""
    return Propagator(cfg, table).effective_apply(psi)


def jump_probabilities(cfg: ChainConfig, psi, dt: float | None = None) -> tuple[float, float]:
    """First-order jump probabilities ``(p0, p1)`` of the pump and drain channels."""
    dt = cfg.dt if dt is None else dt
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    pd, pu = _populations(psi, 0, cfg.N - 1)
    p0, p1 = dt * cfg.gamma * pd, dt * cfg.gamma * pu
    if p0 + p1 > MAX_JUMP_PROBABILITY:
        raise StepSizeError(
            f"p0 + p1 = {p0 + p1:.3g} > {MAX_JUMP_PROBABILITY}: dt={dt:g} too large for the "
            "first-order jump expansion"
        )
    return p0, p1


# --------------------------------------------------------------------------
# single trajectories


@dataclass
class TrajectoryState:
    """Pure state of one trajectory plus its random stream."""

    traj_id: int
    psi: np.ndarray
    t: float
    stream: np.random.Generator
    steps: int = 0
    jump_log: list = field(default_factory=list)  # (time, channel) with 0 = pump, 1 = drain

    @classmethod
    def fresh(cls, cfg: ChainConfig, traj_id: int, psi0=None) -> "TrajectoryState":
        psi = initial_state(cfg.N) if psi0 is None else np.array(psi0, dtype=np.complex128)
        if psi.shape != (cfg.dim,):
            raise ConfigurationError(f"initial state has shape {psi.shape}, expected ({cfg.dim},)")
        norm = np.linalg.norm(psi)
        if not norm > 0:
            raise ConfigurationError("initial state has zero norm")
        return cls(traj_id=int(traj_id), psi=psi / norm, t=0.0,
                   stream=rng.trajectory_stream(cfg.seed, traj_id))

    def to_checkpoint(self) -> dict:
        return {
            "traj_id": self.traj_id, "t": self.t, "steps": self.steps,
            "psi_re": self.psi.real.tolist(), "psi_im": self.psi.imag.tolist(),
            "stream": rng.stream_state(self.stream),
            "jump_log": [[float(a), int(b)] for a, b in self.jump_log],
        }

    @classmethod
    def from_checkpoint(cls, data: dict) -> "TrajectoryState":
        psi = np.array(data["psi_re"]) + 1j * np.array(data["psi_im"])
        return cls(traj_id=int(data["traj_id"]), psi=psi, t=float(data["t"]),
                   stream=rng.restore_stream(data["stream"]), steps=int(data["steps"]),
                   jump_log=[(float(a), int(b)) for a, b in data["jump_log"]])


def step(traj: TrajectoryState, cfg: ChainConfig, table: CouplingTable | None = None,
         dt: float | None = None, *, r: float | None = None, mode: str = "rk4",
         propagator: Propagator | None = None) -> TrajectoryState:
    """One stochastic step; ``r`` overrides the uniform draw (stream untouched then)."""
    prop = propagator or Propagator(cfg, table, dt=dt, mode=mode)
    u = np.array([traj.stream.random() if r is None else float(r)])
    js, jc = prop.advance(traj.psi, u)
    for c in jc:
        traj.jump_log.append((traj.t, int(c)))
    traj.steps += 1
    traj.t = traj.steps * prop.dt
    return traj


@dataclass
class TrajectoryResult:
    traj_id: int
    times: np.ndarray
    currents: np.ndarray  # (samples, N-1)
    polarization: np.ndarray  # (samples, N)
    jump_log: list
    psi: np.ndarray

    @property
    def bottleneck(self) -> np.ndarray:
        return self.polarization[:, 0] - self.polarization[:, 1]


def _sample_grid(prop: Propagator, t_end: float, sample_interval: float):
    every = int(round(sample_interval / prop.dt))
    if every < 1 or abs(every * prop.dt - sample_interval) > 1e-9 * sample_interval:
        raise ConfigurationError("sample_interval must be a positive multiple of dt")
    n_samples = int(round(t_end / sample_interval))
    if n_samples < 1 or abs(n_samples * sample_interval - t_end) > 1e-9 * t_end:
        raise ConfigurationError("t_end must be a positive multiple of sample_interval")
    return every, n_samples


def _run(prop: Propagator, traj: TrajectoryState, every: int, n_samples: int, keep_log: bool):
    n = prop.cfg.N
    cur = np.zeros((n_samples + 1, n - 1))
    pol = np.zeros((n_samples + 1, n))
    first = traj.steps // every
    if traj.steps % every:
        raise ConfigurationError("trajectory checkpoint is not on the sample grid")
    prop.observe(traj.psi, cur[first], pol[first])
    for s in range(first + 1, n_samples + 1):
        u = traj.stream.random(every)
        js, jc = prop.advance(traj.psi, u)
        if keep_log:
            for a, c in zip(js, jc):
                traj.jump_log.append(((traj.steps + a) * prop.dt, int(c)))
        traj.steps += every
        traj.t = traj.steps * prop.dt
        prop.observe(traj.psi, cur[s], pol[s])
    return cur, pol


def run_trajectory(cfg: ChainConfig, table: CouplingTable | None = None, traj_id: int = 0, *,
                   t_end: float | None = None, sample_interval: float = 1.0, dt: float | None = None,
                   mode: str = "rk4", psi0=None, state: TrajectoryState | None = None,
                   propagator: Propagator | None = None, keep_log: bool = True) -> TrajectoryResult:
    """Sampled bond currents and polarisation along one trajectory.

    Pass ``state`` (e.g. restored from a checkpoint) to continue a trajectory;
    samples before its current time are left as zeros.
    """
    prop = propagator or Propagator(cfg, table, dt=dt, mode=mode)
    t_end = cfg.t_end or default_t_end(cfg.N) if t_end is None else t_end
    every, n_samples = _sample_grid(prop, t_end, sample_interval)
    traj = state or TrajectoryState.fresh(cfg, traj_id, psi0)
    cur, pol = _run(prop, traj, every, n_samples, keep_log)
    return TrajectoryResult(traj_id=traj.traj_id, times=np.arange(n_samples + 1) * sample_interval,
                            currents=cur, polarization=pol, jump_log=traj.jump_log, psi=traj.psi)


# --------------------------------------------------------------------------
# ensembles


@dataclass
class EnsembleStats:
    """Running ensemble statistics plus per-trajectory steady-window summaries.

    ``mean_*`` and ``m2_*`` are per-sample Welford accumulators.  The
    per-trajectory arrays are kept in trajectory-id order of processing and
    feed the steady-window estimate, whose standard error treats
    trajectories as independent.
    """

    times: np.ndarray
    window: tuple
    n_traj: int = 0
    mean_current: np.ndarray | None = None
    m2_current: np.ndarray | None = None
    mean_pol: np.ndarray | None = None
    m2_pol: np.ndarray | None = None
    traj_ids: list = field(default_factory=list)
    window_bonds: list = field(default_factory=list)  # time-averaged bond currents
    window_pol: list = field(default_factory=list)
    window_halves: list = field(default_factory=list)  # bond-averaged current, first/second half
    final_bonds: list = field(default_factory=list)  # bond currents at the last sample
    meta: dict = field(default_factory=dict)

    def _window_mask(self) -> np.ndarray:
        t0, t1 = self.window
        return (self.times >= t0 - 1e-9) & (self.times <= t1 + 1e-9)

    def add(self, traj_id: int, cur: np.ndarray, pol: np.ndarray) -> None:
        if self.mean_current is None:
            self.mean_current = np.zeros_like(cur)
            self.m2_current = np.zeros_like(cur)
            self.mean_pol = np.zeros_like(pol)
            self.m2_pol = np.zeros_like(pol)
        self.n_traj += 1
        for x, mean, m2 in ((cur, self.mean_current, self.m2_current), (pol, self.mean_pol, self.m2_pol)):
            delta = x - mean
            mean += delta / self.n_traj
            m2 += delta * (x - mean)
        w = self._window_mask()
        wc, wp = cur[w], pol[w]
        half = wc.shape[0] // 2
        jb = wc.mean(axis=1)
        self.traj_ids.append(int(traj_id))
        self.window_bonds.append(wc.mean(axis=0))
        self.window_pol.append(wp.mean(axis=0))
        self.window_halves.append((jb[:half].mean(), jb[half:].mean()))
        self.final_bonds.append(cur[-1].copy())

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        """Combine two disjoint ensembles (pairwise Welford update)."""
        if other.n_traj == 0:
            return self
        if self.n_traj == 0:
            self.__dict__.update({k: v for k, v in other.__dict__.items() if k != "meta"})
            return self
        if self.window != other.window or self.times.shape != other.times.shape:
            raise ConfigurationError("cannot merge ensembles with different sampling or windows")
        na, nb_ = self.n_traj, other.n_traj
        n = na + nb_
        for name in ("current", "pol"):
            ma, mb = getattr(self, "mean_" + name), getattr(other, "mean_" + name)
            delta = mb - ma
            setattr(self, "mean_" + name, ma + delta * (nb_ / n))
            setattr(self, "m2_" + name,
                    getattr(self, "m2_" + name) + getattr(other, "m2_" + name) + delta**2 * (na * nb_ / n))
        self.n_traj = n
        for name in ("traj_ids", "window_bonds", "window_pol", "window_halves", "final_bonds"):
            getattr(self, name).extend(getattr(other, name))
        return self

    # ---- derived quantities

    def variance_current(self) -> np.ndarray:
        return self.m2_current / max(self.n_traj - 1, 1)

    @property
    def mean_bond_current(self) -> np.ndarray:
        """Ensemble- and bond-averaged current per sample."""
        return self.mean_current.mean(axis=1)

    def _per_traj(self) -> np.ndarray:
        return np.asarray(self.window_bonds).mean(axis=1)

    @staticmethod
    def _se(x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.std(x, axis=0, ddof=1) / math.sqrt(x.shape[0])) if x.shape[0] > 1 else float("nan")

    @property
    def steady_current(self) -> float:
        return float(np.mean(self._per_traj()))

    @property
    def steady_current_se(self) -> float:
        return self._se(self._per_traj())

    @property
    def bond_steady(self) -> tuple[np.ndarray, np.ndarray]:
        b = np.asarray(self.window_bonds)
        return b.mean(axis=0), b.std(axis=0, ddof=1) / math.sqrt(b.shape[0])

    @property
    def profile(self) -> tuple[np.ndarray, np.ndarray]:
        p = np.asarray(self.window_pol)
        return p.mean(axis=0), p.std(axis=0, ddof=1) / math.sqrt(p.shape[0])

    @property
    def steady_bottleneck(self) -> tuple[float, float]:
        p = np.asarray(self.window_pol)
        b = p[:, 0] - p[:, 1]
        return float(b.mean()), self._se(b)

    def half_window_check(self) -> tuple[bool, float, float]:
        """Compare first and second half of the window; returns (ok, difference, its SE)."""
        h = np.asarray(self.window_halves)
        diff = h[:, 1] - h[:, 0]
        d, se = float(diff.mean()), self._se(diff)
        return bool(abs(d) <= se) if np.isfinite(se) else True, d, se

    def repeated_ensemble_std(self, M: int, bond: int = 0) -> tuple[float, int]:
        """Spread of M-trajectory ensemble means of the last-sample current on ``bond``.

        Trajectories are split into disjoint groups of ``M`` in id order;
        returns (sample std of the group means, number of groups).
        """
        x = np.asarray(self.final_bonds)[:, bond]
        order = np.argsort(self.traj_ids, kind="stable")
        x = x[order]
        g = x.shape[0] // M
        if g < 2:
            raise ConfigurationError(f"need at least {2 * M} trajectories for M={M}")
        means = x[: g * M].reshape(g, M).mean(axis=1)
        return float(np.std(means, ddof=1)), g


def resolve_window(t_end: float, steady_window=None, sample_interval: float = 1.0) -> tuple:
    """Steady window, defaulting to the last quarter of the run."""
    if steady_window is None:
        steady_window = (0.75 * t_end, t_end)
    t0, t1 = float(steady_window[0]), float(steady_window[1])
    if not 0 <= t0 < t1 <= t_end + 1e-9:
        raise ConfigurationError(f"steady window {steady_window} not inside [0, {t_end}]")
    if (t1 - t0) / sample_interval < MIN_WINDOW_SAMPLES:
        raise ConfigurationError(
            f"steady window {t1 - t0:g} covers fewer than {MIN_WINDOW_SAMPLES} sample intervals"
        )
    return t0, t1


def _ensemble_chunk(cfg, table, ids, t_end, window, sample_interval, dt, mode):
    prop = Propagator(cfg, table, dt=dt, mode=mode)
    every, n_samples = _sample_grid(prop, t_end, sample_interval)
    stats = EnsembleStats(times=np.arange(n_samples + 1) * sample_interval, window=window)
    for i in ids:
        traj = TrajectoryState.fresh(cfg, i)
        cur, pol = _run(prop, traj, every, n_samples, keep_log=False)
        stats.add(i, cur, pol)
    return stats


def ensemble_average(cfg: ChainConfig, table: CouplingTable | None = None, n_traj: int = 100,
                     t_end: float | None = None, steady_window=None, *, sample_interval: float = 1.0,
                     dt: float | None = None, mode: str = "rk4", workers: int = 1, first_id: int = 0,
                     chunk: int | None = None,
                     checkpoint: str | os.PathLike | None = None) -> EnsembleStats:
    """Average ``n_traj`` trajectories with ids ``first_id, first_id+1, ...``.

    Trajectories are split into contiguous id chunks; chunks run on up to
    ``workers`` processes and are merged in id order, so results are
    bit-identical for any worker count at a fixed ``chunk``.  With ``checkpoint`` the
    merged statistics are saved after every chunk and a rerun resumes from
    the last completed one.
    """
    if n_traj < 1:
        raise ConfigurationError("n_traj must be >= 1")
    table = coupling_table(cfg) if table is None else table
    if table.N != cfg.N:
        raise ConfigurationError("coupling table was built for a different N")
    t_end = (cfg.t_end or default_t_end(cfg.N)) if t_end is None else float(t_end)
    window = resolve_window(t_end, steady_window, sample_interval)
    dt = cfg.dt if dt is None else dt
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    chunk = int(chunk or DEFAULT_CHUNK)
    if chunk < 1:
        raise ConfigurationError("chunk must be >= 1")
    ids = list(range(first_id, first_id + n_traj))
    chunks = [ids[i:i + chunk] for i in range(0, n_traj, chunk)]

    stats, done = None, 0
    if checkpoint is not None and os.path.exists(checkpoint):
        from .io import load_ensemble_checkpoint
        stats, done = load_ensemble_checkpoint(checkpoint, cfg, n_traj, t_end, window, dt, mode, chunk)
        log.info("resuming ensemble from %s: %d of %d chunks done", checkpoint, done, len(chunks))
    if stats is None:
        stats = EnsembleStats(times=np.arange(int(round(t_end / sample_interval)) + 1) * sample_interval,
                              window=window)
    args = (t_end, window, sample_interval, dt, mode)

    def finish(i, part):
        stats.merge(part)
        if checkpoint is not None:
            from .io import save_ensemble_checkpoint
            save_ensemble_checkpoint(checkpoint, stats, cfg, n_traj, t_end, window, dt, mode, chunk, i + 1)

    todo = range(done, len(chunks))
    if workers <= 1:
        for i in todo:
            finish(i, _ensemble_chunk(cfg, table, chunks[i], *args))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(_ensemble_chunk, cfg, table, chunks[i], *args) for i in todo}
            for i in todo:
                finish(i, futures[i].result())

    stats.meta = {"N": cfg.N, "alpha": cfg.alpha, "gamma": cfg.gamma, "dt": dt, "mode": mode,
                  "t_end": t_end, "window": list(window), "seed": cfg.seed, "n_traj": stats.n_traj,
                  "first_id": first_id, "chunk": chunk}
    ok, d, se = stats.half_window_check()
    if not ok:
        warnings.warn(
            f"steady-window halves differ by {d:.3g} (SE {se:.3g}); t_end={t_end:g} may be too short",
            RuntimeWarning, stacklevel=2,
        )
    return stats


def transient_time(times, values, target: float, tol: float) -> float:
    """Earliest sample time after which ``values`` stays within ``tol`` of ``target``."""
    times, values = np.asarray(times, dtype=float), np.asarray(values, dtype=float)
    bad = np.nonzero(np.abs(values - target) > tol)[0]
    if bad.size == 0:
        return float(times[0])
    if bad[-1] == values.size - 1:
        return float("inf")
    return float(times[bad[-1] + 1])


@dataclass(frozen=True)
class DtScanRow:
    dt: float
    mean: float
    stderr: float
    n_traj: int
    mode: str


def dt_scan(cfg: ChainConfig, dts, n_traj: int = 200, t_end: float | None = None, *,
            mode: str = "rk4", workers: int = 1, **kw) -> list[DtScanRow]:
    """Steady current for several time steps with identical seeds and trajectory ids."""
    rows = []
    for dt in dts:
        st = ensemble_average(cfg, n_traj=n_traj, t_end=t_end, dt=float(dt), mode=mode,
                              workers=workers, **kw)
        rows.append(DtScanRow(float(dt), st.steady_current, st.steady_current_se, st.n_traj, mode))
    return rows
