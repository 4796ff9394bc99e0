"""Exact Lindblad dynamics of the boundary-driven chain.

    drho/dt = -i [H, rho] + (Gamma/2) (D[s+_0] rho + D[s-_{N-1}] rho),
    D[x] rho = 2 x rho x^dag - {x^dag x, rho}

so each boundary channel fires at rate Gamma.  Two routes to the steady
state are provided and are meant to check each other: fixed-step RK4
evolution of the density matrix (matrix-free, any N that fits in memory,
optionally restricted to magnetisation blocks) and
a direct sparse solve for the kernel of the vectorised Liouvillian
(``N <= 7``).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numba as nb
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import basis, blocks, observables
from .errors import ConfigurationError, IntegrationError, NessAmbiguityError, SolverGuardError
from .model import ChainConfig, CouplingTable, coupling_table, hamiltonian_sparse

log = logging.getLogger(__name__)

if "NUMBA_THREADING_LAYER" not in os.environ and "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # prefer OpenMP: avoids probing an old TBB (and its warning) when both are installed
    nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

NESS_DIRECT_MAX_N = 7
TRACE_DRIFT_TOL = 1e-6
AMBIGUITY_COND = 1e12


@dataclass(frozen=True)
class LindbladSpec:
    """Jump channels as ``(site, direction, rate)``; direction is "raise" or "lower"."""

    jump_ops: tuple

    def __post_init__(self):
        for site, direction, rate in self.jump_ops:
            if direction not in ("raise", "lower"):
                raise ConfigurationError(f"unknown jump direction {direction!r}")
            if rate < 0:
                raise ConfigurationError("jump rates must be non-negative")

    @classmethod
    def boundary(cls, cfg: ChainConfig) -> "LindbladSpec":
        """Pump up at site 0 and drain at site N-1, both with rate Gamma."""
        return cls(((0, "raise", float(cfg.gamma)), (cfg.N - 1, "lower", float(cfg.gamma))))


def _resolve(cfg, table, spec):
    if table is None:
        table = coupling_table(cfg)
    if spec is None:
        spec = LindbladSpec.boundary(cfg)
    if table.N != cfg.N:
        raise ConfigurationError("coupling table was built for a different N")
    return table, spec


def initial_density(n: int, kind: str = "updown") -> np.ndarray:
    """Initial density matrix: "updown" (site 0 up, rest down), "down", "mixed" or a spin label."""
    d = 1 << n
    if kind == "mixed":
        return np.eye(d, dtype=complex) / d
    if kind == "updown":
        code = 1
    elif kind == "down":
        code = 0
    else:
        code = basis.basis_index(kind)
        if len(kind) != n:
            raise ConfigurationError(f"label {kind!r} does not have {n} sites")
    rho = np.zeros((d, d), dtype=complex)
    rho[code, code] = 1.0
    return rho


@nb.njit(parallel=True, cache=True)
def _lindblad_kernel(rho, out, diag, n, half_j, sites, dst_bits, rates, decay):
    # Row-wise with branch-free inner loops over contiguous column blocks.
    d = rho.shape[0]
    n_ch = sites.shape[0]
    ihj = 1j * half_j
    for a in nb.prange(d):
        da, ga = diag[a], decay[a]
        for b in range(d):
            out[a, b] = (-1j * (da - diag[b]) - 0.5 * (ga + decay[b])) * rho[a, b]
        for i in range(n - 1):
            # H rho: rows a and a^(3<<i) couple when the pair (i, i+1) is antiparallel
            if basis.antiparallel(a, i):
                a2 = basis.flip_pair(a, i)
                for b in range(d):
                    out[a, b] -= ihj * rho[a2, b]
            # rho H: the same on the column index
            lo_n = 1 << i
            for hi in range(d >> (i + 2)):
                base = hi << (i + 2)
                b01 = base | lo_n
                b10 = base | (lo_n << 1)
                for lo in range(lo_n):
                    out[a, b01 + lo] += ihj * rho[a, b10 + lo]
                    out[a, b10 + lo] += ihj * rho[a, b01 + lo]
        for c in range(n_ch):
            s = sites[c]
            if basis.bit(a, s) != dst_bits[c]:
                continue
            a2 = a ^ (1 << s)
            r = rates[c]
            step = 1 << s
            for hi in range(d >> (s + 1)):
                bd = (hi << (s + 1)) | (dst_bits[c] << s)
                bs = bd ^ step
                for lo in range(step):
                    out[a, bd + lo] += r * rho[a2, bs + lo]


class _Generator:
    """Precomputed data for repeated Liouvillian applications."""

    def __init__(self, cfg, table, spec):
        n = cfg.N
        self.n, self.d = n, cfg.dim
        self.diag = np.ascontiguousarray(table.zz_diagonal(), dtype=np.float64)
        self.half_j = 0.5 * table.J
        chans = [(s, 1 if direction == "raise" else 0, r) for s, direction, r in spec.jump_ops if r > 0]
        self.sites = np.array([c[0] for c in chans], dtype=np.int64)
        self.dst = np.array([c[1] for c in chans], dtype=np.int64)
        self.rates = np.array([c[2] for c in chans], dtype=np.float64)
        # x^dag x projects onto the pre-jump state of each channel
        self.decay = np.zeros(self.d)
        for s, dst, r in chans:
            self.decay += r * (basis.site_bits(n, s) != dst)

    def __call__(self, rho, out=None):
        if out is None:
            out = np.empty_like(rho)
        _lindblad_kernel(rho, out, self.diag, self.n, self.half_j, self.sites, self.dst,
                         self.rates, self.decay)
        return out


def liouvillian_apply(cfg: ChainConfig, rho, table: CouplingTable | None = None,
                      spec: LindbladSpec | None = None) -> np.ndarray:
    """Matrix-free action of the Lindblad generator on ``rho``."""
    table, spec = _resolve(cfg, table, spec)
    rho = np.ascontiguousarray(rho, dtype=complex)
    if rho.shape != (cfg.dim, cfg.dim):
        raise ConfigurationError(f"rho has shape {rho.shape}, expected {(cfg.dim, cfg.dim)}")
    return _Generator(cfg, table, spec)(rho)


def liouvillian_sparse(cfg: ChainConfig, table: CouplingTable | None = None,
                       spec: LindbladSpec | None = None) -> sp.csc_matrix:
    """Vectorised Liouvillian acting on row-major ``rho.ravel()``."""
    table, spec = _resolve(cfg, table, spec)
    d = cfg.dim
    H = hamiltonian_sparse(table).astype(complex)
    eye = sp.identity(d, format="csr", dtype=complex)
    # row-major vec(A X B) = (A kron B^T) vec(X)
    L = -1j * (sp.kron(H, eye) - sp.kron(eye, H.T))
    k = np.arange(d)
    for site, direction, rate in spec.jump_ops:
        if rate == 0:
            continue
        src_bit = 0 if direction == "raise" else 1
        src = k[((k >> site) & 1) == src_bit]
        x = sp.csr_matrix((np.ones(src.size), (src ^ (1 << site), src)), shape=(d, d), dtype=complex)
        xdx = (x.conj().T @ x).tocsr()
        L = L + rate * (sp.kron(x, x.conj()) - 0.5 * sp.kron(xdx, eye) - 0.5 * sp.kron(eye, xdx.T))
    return L.tocsc()


def _trace_row(d: int) -> np.ndarray:
    t = np.zeros(d * d, dtype=complex)
    t[np.arange(d) * (d + 1)] = 1.0
    return t


def ness_direct(cfg: ChainConfig, table: CouplingTable | None = None,
                spec: LindbladSpec | None = None) -> np.ndarray:
    """Steady state from the kernel of the vectorised Liouvillian.

    The trace functional is a left null vector of L, so the (0,0) row of L is
    redundant and is replaced by the trace condition.  The resulting square
    system is nonsingular exactly when the kernel is one-dimensional; its
    condition number is estimated from the same LU factors and a
    near-singular system raises :class:`NessAmbiguityError`.
    """
    if cfg.N > NESS_DIRECT_MAX_N:
        raise SolverGuardError(
            f"ness-direct handles N <= {NESS_DIRECT_MAX_N} (4**N unknowns); got N={cfg.N}"
        )
    table, spec = _resolve(cfg, table, spec)
    d = cfg.dim
    L = liouvillian_sparse(cfg, table, spec).tolil()
    L[0, :] = _trace_row(d)
    M = L.tocsc()
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise NessAmbiguityError(f"Liouvillian kernel is not one-dimensional: {exc}") from exc
    x = lu.solve(rhs)
    inv = spla.LinearOperator(
        M.shape, matvec=lu.solve, rmatvec=lambda y: lu.solve(y, trans="H"), dtype=complex
    )
    cond = spla.onenormest(M) * spla.onenormest(inv)
    if not np.isfinite(cond) or cond > AMBIGUITY_COND:
        raise NessAmbiguityError(
            f"trace-bordered Liouvillian is near singular (cond ~ {cond:.2e}); steady state not unique"
        )
    rho = x.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


@nb.njit(cache=True)
def _axpy(out, x, a, y):
    # out = x + a*y on flattened views
    o, xf, yf = out.ravel(), x.ravel(), y.ravel()
    for i in range(o.shape[0]):
        o[i] = xf[i] + a * yf[i]


def _rk4_step(gen, rho, dt, k, tmp, acc):
    """In-place classical RK4 step of ``rho`` using three scratch buffers."""
    gen(rho, k)
    _axpy(acc, rho, dt / 6.0, k)
    _axpy(tmp, rho, 0.5 * dt, k)
    gen(tmp, k)
    _axpy(acc, acc, dt / 3.0, k)
    _axpy(tmp, rho, 0.5 * dt, k)
    gen(tmp, k)
    _axpy(acc, acc, dt / 3.0, k)
    _axpy(tmp, rho, dt, k)
    gen(tmp, k)
    _axpy(rho, acc, dt / 6.0, k)


@dataclass
class EvolutionResult:
    """Sampled output of :func:`evolve_rk4`."""

    times: np.ndarray
    currents: np.ndarray  # (samples, N-1)
    polarization: np.ndarray  # (samples, N)
    trace: np.ndarray
    purity: np.ndarray
    rho: np.ndarray
    converged: bool = False
    t_converged: float | None = None
    states: list = field(default_factory=list)

    @property
    def current(self) -> np.ndarray:
        """Bond-averaged current per sample."""
        return self.currents.mean(axis=1)


def _block_generator(cfg, table, spec):
    """Block-form generator when ``spec`` is a pump at site 0 plus a drain at site N-1."""
    up = down = 0.0
    for site, direction, rate in spec.jump_ops:
        if rate == 0:
            continue
        if direction == "raise" and site == 0:
            up += rate
        elif direction == "lower" and site == cfg.N - 1:
            down += rate
        else:
            return None
    return blocks.BlockGenerator(cfg.N, table.zz_diagonal(), 0.5 * table.J, up, down)


def _initial_blocks(n, rho0):
    if rho0 is None:
        return blocks.diagonal_state(n, 1)
    if isinstance(rho0, str):
        if rho0 == "mixed":
            return blocks.mixed_state(n)
        return blocks.from_dense(initial_density(n, rho0))
    return blocks.from_dense(rho0)


def evolve_rk4(cfg: ChainConfig, rho0=None, *, dt: float | None = None, t_end: float | None = None,
               table: CouplingTable | None = None, spec: LindbladSpec | None = None,
               sample_interval: float = 1.0, stop_at_steady: bool = False,
               steady_window: float = 50.0, steady_rtol: float = 1e-7,
               keep_states: bool = False, representation: str = "auto") -> EvolutionResult:
    """Fixed-step RK4 integration of the master equation.

    Observables are sampled every ``sample_interval``.  The run counts as
    converged once the bond-averaged current differs by less than
    ``steady_rtol`` (relative) from its value ``steady_window`` earlier; with
    ``stop_at_steady`` the integration ends there.

    ``representation="blocks"`` stores only the magnetisation blocks of rho
    (see :mod:`lrxxz.blocks`), which is exact for block-diagonal initial
    states and the boundary channels; ``"auto"`` uses it whenever that holds.
    ``rho0`` may be a matrix or an :func:`initial_density` kind.  Returned
    states are always dense.
    """
    table, spec = _resolve(cfg, table, spec)
    dt = cfg.dt if dt is None else dt
    t_end = cfg.t_end if t_end is None else t_end
    if t_end is None:
        raise ConfigurationError("evolve_rk4 needs t_end")
    if representation not in ("auto", "dense", "blocks"):
        raise ConfigurationError(f"unknown representation {representation!r}")
    every = int(round(sample_interval / dt))
    if every < 1 or abs(every * dt - sample_interval) > 1e-9 * sample_interval:
        raise ConfigurationError("sample_interval must be a positive multiple of dt")
    lag = int(round(steady_window / sample_interval))
    if lag < 1:
        raise ConfigurationError("steady_window must cover at least one sample interval")
    n_steps = int(round(t_end / dt))

    bgen = None if representation == "dense" else _block_generator(cfg, table, spec)
    if bgen is not None:
        try:
            rho = _initial_blocks(cfg.N, rho0)
        except ConfigurationError:
            if representation == "blocks":
                raise
            bgen = None
    elif representation == "blocks":
        raise ConfigurationError("block representation needs a site-0 pump and a site-(N-1) drain only")

    if bgen is not None:
        gen = bgen

        def measure(r):
            return bgen.observe(r, cfg.J)

        def dense(r):
            return blocks.to_dense(r, cfg.N)
    else:
        if rho0 is None or isinstance(rho0, str):
            rho = initial_density(cfg.N, rho0 or "updown")
        else:
            rho = np.array(rho0, dtype=complex)
        gen = _Generator(cfg, table, spec)

        def measure(r):
            return (observables.bond_currents(r, cfg.J), observables.polarization_profile(r),
                    np.trace(r).real, float(np.vdot(r, r).real))

        def dense(r):
            return r.copy()

    k, tmp, acc = np.empty_like(rho), np.empty_like(rho), np.empty_like(rho)
    times, cur, pol, tr, pur, states = [], [], [], [], [], []

    def sample(step):
        c, p, t, q = measure(rho)
        times.append(step * dt)
        cur.append(c)
        pol.append(p)
        tr.append(t)
        pur.append(q)
        if keep_states:
            states.append(dense(rho))

    sample(0)
    converged, t_conv = False, None
    for step in range(1, n_steps + 1):
        _rk4_step(gen, rho, dt, k, tmp, acc)
        if step % every:
            continue
        sample(step)
        drift = abs(tr[-1] - 1.0)
        if not np.isfinite(drift) or drift > TRACE_DRIFT_TOL:
            raise IntegrationError(
                f"trace drifted by {drift:.3e} at t={step * dt:g}; reduce dt (currently {dt:g})"
            )
        # RK4 preserves the trace exactly, so an unstable step shows up in the purity first
        if not np.isfinite(pur[-1]) or pur[-1] > 1.0 + TRACE_DRIFT_TOL:
            raise IntegrationError(
                f"purity {pur[-1]:.6g} exceeds 1 at t={step * dt:g}; RK4 is unstable, reduce dt "
                f"(currently {dt:g})"
            )
        if len(cur) > lag:
            j_now, j_then = np.mean(cur[-1]), np.mean(cur[-1 - lag])
            if abs(j_now - j_then) < steady_rtol * max(abs(j_now), 1e-300):
                if not converged:
                    converged, t_conv = True, step * dt
                    log.debug("steady current %.10g reached at t=%g", j_now, t_conv)
                if stop_at_steady:
                    break
            else:
                converged, t_conv = False, None
    return EvolutionResult(
        times=np.array(times), currents=np.array(cur), polarization=np.array(pol),
        trace=np.array(tr), purity=np.array(pur), rho=dense(rho), converged=converged,
        t_converged=t_conv, states=states,
    )


def steady_state(cfg: ChainConfig, method: str = "auto", table: CouplingTable | None = None, *,
                 dt: float | None = None, t_max: float = 20000.0, **kw) -> np.ndarray:
    """Steady-state density matrix by ``"ness-direct"``, ``"exact-rk4"`` or ``"auto"``."""
    if method == "auto":
        method = "ness-direct" if cfg.N <= NESS_DIRECT_MAX_N else "exact-rk4"
    if method == "ness-direct":
        return ness_direct(cfg, table)
    if method == "exact-rk4":
        res = evolve_rk4(cfg, dt=dt, t_end=t_max, table=table, stop_at_steady=True, **kw)
        if not res.converged:
            raise IntegrationError(f"no steady state within t={t_max:g}")
        return res.rho
    raise ConfigurationError(f"unknown steady-state method {method!r}")
