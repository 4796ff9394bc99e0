"""Spin current, polarisation profile and edge bottleneck.

The bond current is

    j_k = (J/2) <sx_k sy_{k+1} - sy_k sx_{k+1}> = -2 J Im <s+_k s-_{k+1}>,

positive when magnetisation flows from site 0 (pumped up) towards site N-1.
The ladder form is what gets evaluated; the Pauli form is only used by
:func:`current_operator_dense` as an independent check of the sign.

Every function accepts either a pure state (1-D amplitude vector) or a
density matrix (2-D square array).  Batches of pure states ``(..., 2**N)``
go through the ``*_pure`` variants directly.
"""

from __future__ import annotations

import numpy as np

from . import basis
from .errors import ConfigurationError
from .model import local_operator_dense


def _as_array(x):
    x = np.asarray(x)
    if x.ndim not in (1, 2):
        raise ConfigurationError("expected a state vector or a density matrix")
    return x


def ladder_correlation_pure(psi: np.ndarray, k: int) -> np.ndarray:
    """``<s+_k s-_{k+1}>`` for (a batch of) pure states."""
    psi = np.ascontiguousarray(psi)
    n = basis.n_sites(psi.shape[-1])
    basis._check_bond(n, k)
    v = basis._bond_view(psi, n, k, -1)
    # source (bit k+1 = 1, bit k = 0) -> target (0, 1)
    return np.sum(np.conj(v[..., 0, 1, :]) * v[..., 1, 0, :], axis=(-2, -1))


def ladder_correlation_rho(rho: np.ndarray, k: int) -> complex:
    rho = np.ascontiguousarray(rho)
    n = basis.n_sites(rho.shape[0])
    basis._check_bond(n, k)
    h, l = 1 << (n - 2 - k), 1 << k
    r = rho.reshape(h, 2, 2, l, h, 2, 2, l)
    # tr(rho O) with O = |target><source|: sum of rho[source, target]
    return complex(np.einsum("aiai->", r[:, 1, 0, :, :, 0, 1, :]))


def spin_current_pure(psi, k: int, J: float = 1.0):
    return -2.0 * J * np.imag(ladder_correlation_pure(psi, k))


def spin_current(x, k: int, J: float = 1.0):
    """Current on bond (k, k+1) for a pure state or density matrix."""
    x = _as_array(x)
    if x.ndim == 2:
        return -2.0 * J * ladder_correlation_rho(x, k).imag
    return float(spin_current_pure(x, k, J))


def bond_currents(x, J: float = 1.0) -> np.ndarray:
    """Currents on all N-1 bonds."""
    x = _as_array(x)
    n = basis.n_sites(x.shape[-1])
    return np.array([spin_current(x, k, J) for k in range(n - 1)])


def bond_currents_pure(psi, J: float = 1.0) -> np.ndarray:
    """Bond currents for a batch ``(..., 2**N)``; bonds on the last axis."""
    n = basis.n_sites(np.shape(psi)[-1])
    return np.stack([spin_current_pure(psi, k, J) for k in range(n - 1)], axis=-1)


def polarization_pure(psi) -> np.ndarray:
    """``<sz_i>`` for a batch ``(..., 2**N)``; sites on the last axis."""
    psi = np.asarray(psi)
    n = basis.n_sites(psi.shape[-1])
    prob = np.abs(psi) ** 2
    z = np.stack([basis.z_values(n, s) for s in range(n)], axis=-1).astype(float)
    return prob @ z


def polarization_profile(x) -> np.ndarray:
    """``<sz_i>`` for every site."""
    x = _as_array(x)
    if x.ndim == 2:
        n = basis.n_sites(x.shape[0])
        p = np.real(np.diagonal(x))
        return np.array([np.dot(p, basis.z_values(n, s)) for s in range(n)])
    return polarization_pure(x)


def bottleneck(x) -> float:
    """Polarisation difference of the first two sites, ``<sz_0> - <sz_1>``."""
    p = polarization_profile(x)
    if p.shape[-1] < 2:
        raise ConfigurationError("bottleneck needs at least two sites")
    return float(p[0] - p[1])


def current_operator_dense(n: int, k: int, J: float = 1.0) -> np.ndarray:
    """Dense ``(J/2)(sx_k sy_{k+1} - sy_k sx_{k+1})`` built from Pauli matrices."""
    basis._check_bond(n, k)
    sx0, sy0 = local_operator_dense(n, k, "x"), local_operator_dense(n, k, "y")
    sx1, sy1 = local_operator_dense(n, k + 1, "x"), local_operator_dense(n, k + 1, "y")
    return 0.5 * J * (sx0 @ sy1 - sy0 @ sx1)
