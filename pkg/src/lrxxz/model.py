"""Long-range XXZ chain: parameters, coupling table and Hamiltonian action.

    H = sum_i (J/4) (sx_i sx_{i+1} + sy_i sy_{i+1})
        + (1/4) (J/A) sum_{i<l} |l-i|^(-alpha) sz_i sz_l

with the weighing constant ``A = (1/(N-1)) sum_{i<l} |l-i|^(-alpha)``.  The
normalisation fixes the total Ising weight to ``J (N-1)`` for every N and
alpha, so alpha changes the range of the interaction but never the overall
anisotropy.  Large alpha (1000 in practice) is the nearest-neighbour
isotropic chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import basis
from .errors import ConfigurationError, SolverGuardError

DENSE_MAX_N = 12
ZZ_CACHE_MAX_N = 24


@dataclass(frozen=True)
class ChainConfig:
    """Physical and numerical parameters of one chain (hbar = 1)."""

    N: int
    J: float = 1.0
    alpha: float = 1000.0
    gamma: float = 2.0
    dt: float = 0.01
    t_end: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise ConfigurationError(f"N must be an integer >= 2, got {self.N!r}")
        if not self.J > 0:
            raise ConfigurationError(f"J must be positive, got {self.J!r}")
        if not self.alpha >= 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha!r}")
        if not self.gamma >= 0:
            raise ConfigurationError(f"gamma must be >= 0, got {self.gamma!r}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt!r}")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end!r}")
        if int(self.seed) < 0:
            raise ConfigurationError("seed must be non-negative")

    @property
    def dim(self) -> int:
        return 1 << self.N

    def with_(self, **changes) -> "ChainConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "N": int(self.N), "J": float(self.J), "alpha": float(self.alpha),
            "gamma": float(self.gamma), "dt": float(self.dt),
            "t_end": None if self.t_end is None else float(self.t_end),
            "seed": int(self.seed),
        }


def _inverse_powers(n: int, alpha: float) -> np.ndarray:
    r = np.arange(1, n, dtype=float)
    with np.errstate(under="ignore"):
        return np.float_power(r, -float(alpha))


def weighing_constant(N: int, alpha: float) -> float:
    """``A = (1/(N-1)) sum_{i<l} |l-i|^(-alpha)``."""
    if N < 2:
        raise ConfigurationError(f"N must be >= 2, got {N}")
    w = _inverse_powers(N, alpha)
    # N - r pairs sit at distance r
    return math.fsum((N - r) * w[r - 1] for r in range(1, N)) / (N - 1)


@dataclass(frozen=True)
class CouplingTable:
    """ZZ coupling ``jz_of_r[r-1] = J / (A r^alpha)`` for distances 1..N-1."""

    N: int
    J: float
    A: float
    jz_of_r: np.ndarray
    _zz: list = field(default_factory=list, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return 1 << self.N

    def pair_weight_total(self) -> float:
        return math.fsum((self.N - r) * self.jz_of_r[r - 1] for r in range(1, self.N))

    def zz_diagonal(self) -> np.ndarray:
        """Ising energy of every basis state (cached, read-only)."""
        if not self._zz:
            if self.N > ZZ_CACHE_MAX_N:
                raise SolverGuardError(f"ZZ diagonal for N={self.N} exceeds the in-memory limit")
            self._zz.append(_zz_diagonal(self))
        return self._zz[0]


def coupling_table(cfg: ChainConfig, zz_scale: float = 1.0) -> CouplingTable:
    """Coupling table for ``cfg``.

    ``zz_scale`` multiplies every Ising coupling; it exists for Jz-sensitivity
    studies and leaves the normalisation invariant broken on purpose when != 1.
    """
    A = weighing_constant(cfg.N, cfg.alpha)
    jz = zz_scale * cfg.J * _inverse_powers(cfg.N, cfg.alpha) / A
    jz.flags.writeable = False
    return CouplingTable(N=cfg.N, J=float(cfg.J), A=A, jz_of_r=jz)


def _zz_diagonal(table: CouplingTable) -> np.ndarray:
    n = table.N
    z = np.stack([basis.z_values(n, s) for s in range(n)]).astype(np.float64)
    diag = np.zeros(1 << n)
    for r in range(1, n):
        if table.jz_of_r[r - 1] == 0.0:
            continue
        corr = np.einsum("ik,ik->k", z[:-r], z[r:])
        diag += 0.25 * table.jz_of_r[r - 1] * corr
    diag.flags.writeable = False
    return diag


def diagonal_zz_energy(table: CouplingTable, k: int) -> float:
    """Ising energy of basis state ``k`` evaluated directly from its bits."""
    n = table.N
    if not 0 <= k < (1 << n):
        raise ConfigurationError(f"basis index {k} out of range for N={n}")
    z = [1 if (k >> s) & 1 else -1 for s in range(n)]
    return 0.25 * math.fsum(
        table.jz_of_r[l - i - 1] * z[i] * z[l] for i in range(n - 1) for l in range(i + 1, n)
    )


def _check_dim(table: CouplingTable, state: np.ndarray, axis: int) -> None:
    if state.shape[axis] != table.dim:
        raise ConfigurationError(
            f"state dimension {state.shape[axis]} does not match 2**N = {table.dim}"
        )


def hamiltonian_apply(table: CouplingTable, state, out=None, *, axis=-1):
    """``H @ state`` along ``axis`` without building ``H``.

    One diagonal multiply plus N-1 flip-flop kernels.  ``out`` is an optional
    C-contiguous scratch buffer that is overwritten.
    """
    state = np.ascontiguousarray(state)
    _check_dim(table, state, axis)
    diag = table.zz_diagonal()
    if out is None:
        out = np.empty(state.shape, dtype=np.result_type(state.dtype, np.float64))
    if axis == -1:
        np.multiply(state, diag, out=out)
    else:
        np.multiply(state, diag.reshape((-1,) + (1,) * (state.ndim - 1)), out=out)
    half_j = 0.5 * table.J
    for i in range(table.N - 1):
        basis.hop_apply(state, i, out, accumulate=True, axis=axis, weight=half_j)
    return out


def hamiltonian_sparse(table: CouplingTable) -> sp.csr_matrix:
    """Sparse CSR Hamiltonian; used by the exact solvers only."""
    n, d = table.N, table.dim
    k = np.arange(d)
    rows, cols, vals = [k], [k], [np.asarray(table.zz_diagonal())]
    for i in range(n - 1):
        src = k[((k >> i) ^ (k >> (i + 1))) & 1 == 1]
        rows.append(src ^ (3 << i))
        cols.append(src)
        vals.append(np.full(src.size, 0.5 * table.J))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(d, d)
    )


# single-site matrices in the (down, up) index order used by the basis
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "+": np.array([[0, 0], [1, 0]], dtype=complex),
    "-": np.array([[0, 1], [0, 0]], dtype=complex),
}


def local_operator_sparse(n: int, site: int, op) -> sp.csr_matrix:
    """``op`` acting on ``site`` of an ``n``-site chain (Kronecker construction)."""
    op = PAULI[op] if isinstance(op, str) else np.asarray(op)
    # bit s of the index is site s, so site n-1 is the leftmost Kronecker factor
    return sp.kron(sp.kron(sp.identity(1 << (n - 1 - site)), op), sp.identity(1 << site), format="csr")


def local_operator_dense(n: int, site: int, op) -> np.ndarray:
    if n > DENSE_MAX_N:
        raise SolverGuardError(f"refusing dense operator for N={n} > {DENSE_MAX_N}")
    return local_operator_sparse(n, site, op).toarray()


def hamiltonian_dense(table: CouplingTable) -> np.ndarray:
    """Dense real-symmetric Hamiltonian assembled from Kronecker products of Pauli matrices.

    Independent of :func:`hamiltonian_apply`, which makes it usable as an
    oracle for the matrix-free path.
    """
    n = table.N
    if n > DENSE_MAX_N:
        raise SolverGuardError(
            f"refusing to build a dense {table.dim}x{table.dim} Hamiltonian (N={n} > {DENSE_MAX_N})"
        )
    sx = [local_operator_sparse(n, s, "x") for s in range(n)]
    sy = [local_operator_sparse(n, s, "y") for s in range(n)]
    sz = [local_operator_sparse(n, s, "z") for s in range(n)]
    H = sp.csr_matrix((table.dim, table.dim), dtype=complex)
    for i in range(n - 1):
        H = H + 0.25 * table.J * (sx[i] @ sx[i + 1] + sy[i] @ sy[i + 1])
    for i in range(n - 1):
        for l in range(i + 1, n):
            H = H + 0.25 * table.jz_of_r[l - i - 1] * (sz[i] @ sz[l])
    H = H.toarray()
    if np.abs(H.imag).max(initial=0.0) > 1e-12:
        raise AssertionError("Hamiltonian picked up an imaginary part")
    return H.real.copy()
