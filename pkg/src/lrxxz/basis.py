"""Computational basis of an N-site spin-1/2 chain.

A basis index ``k`` in ``[0, 2**N)`` encodes one spin configuration: bit ``s``
of ``k`` is the state of site ``s`` (1 = up, 0 = down).  Site 0 is the pumped
edge, site N-1 the drained edge.  Labels such as ``"udd"`` list sites left to
right, so the first character is site 0.

All operators act matrix-free on the basis axis of an array.  For state
vectors this is the last axis (leading axes are a batch); for density
matrices the row axis (``axis=0``) is used.  The action is implemented through
reshaped views that expose the bits of one or two adjacent sites as length-2
axes, so nothing of size ``2**N x 2**N`` is ever materialised here.
"""

from __future__ import annotations

from functools import lru_cache

import numba as nb
import numpy as np

from .errors import ConfigurationError

UP, DOWN = 1, 0
_LABELS = {"u": UP, "d": DOWN, "1": UP, "0": DOWN, "↑": UP, "↓": DOWN}


def n_sites(dim: int) -> int:
    """Number of sites for a basis of dimension ``dim``."""
    n = int(dim).bit_length() - 1
    if n < 1 or (1 << n) != dim:
        raise ConfigurationError(f"basis dimension {dim} is not a power of two")
    return n


def basis_index(label: str) -> int:
    """Basis code of a configuration label, e.g. ``"udd"`` -> 1."""
    try:
        return sum(_LABELS[c] << s for s, c in enumerate(label))
    except KeyError as exc:
        raise ConfigurationError(f"bad spin label {label!r}") from exc


def basis_label(code: int, n: int) -> str:
    return "".join("u" if (code >> s) & 1 else "d" for s in range(n))


def basis_state(n: int, code: int | str, dtype=np.complex128) -> np.ndarray:
    """Normalised product state ``|code>`` as a dense amplitude vector."""
    if isinstance(code, str):
        if len(code) != n:
            raise ConfigurationError(f"label {code!r} does not have {n} sites")
        code = basis_index(code)
    if not 0 <= code < (1 << n):
        raise ConfigurationError(f"basis index {code} out of range for N={n}")
    psi = np.zeros(1 << n, dtype=dtype)
    psi[code] = 1.0
    return psi


@lru_cache(maxsize=None)
def site_bits(n: int, site: int) -> np.ndarray:
    """Bit value of ``site`` for every basis index (read-only, cached)."""
    _check_site(n, site)
    bits = ((np.arange(1 << n) >> site) & 1).astype(np.int8)
    bits.flags.writeable = False
    return bits


def z_values(n: int, site: int) -> np.ndarray:
    """Eigenvalue of sigma^z at ``site`` (+1 up, -1 down) for every basis index."""
    return 2 * site_bits(n, site).astype(np.int8) - 1


def _check_site(n: int, site: int) -> None:
    if not 0 <= site < n:
        raise ConfigurationError(f"site {site} out of range for N={n}")


def _check_bond(n: int, i: int) -> None:
    if not 0 <= i < n - 1:
        raise ConfigurationError(f"bond {i} out of range for N={n}")


def _n_of(a: np.ndarray, axis: int) -> int:
    return n_sites(a.shape[axis])


def _site_view(a: np.ndarray, n: int, site: int, axis: int) -> np.ndarray:
    """View of ``a`` with the bit of ``site`` exposed as its own length-2 axis."""
    split = (1 << (n - 1 - site), 2, 1 << site)
    if axis == -1:
        return a.reshape(a.shape[:-1] + split)
    if axis == 0:
        return a.reshape(split + a.shape[1:])
    raise ValueError("axis must be 0 or -1")


def _bond_view(a: np.ndarray, n: int, i: int, axis: int) -> np.ndarray:
    """View exposing (bit i+1, bit i) as two adjacent length-2 axes."""
    split = (1 << (n - 2 - i), 2, 2, 1 << i)
    if axis == -1:
        return a.reshape(a.shape[:-1] + split)
    if axis == 0:
        return a.reshape(split + a.shape[1:])
    raise ValueError("axis must be 0 or -1")


def _sel(axis: int, *bits: int) -> tuple:
    if axis == -1:
        return (Ellipsis, *bits, slice(None))
    return (slice(None), *bits, Ellipsis)


def _prepare_out(state, out, accumulate, dtype=None):
    if out is None:
        return np.zeros(state.shape, dtype=dtype or state.dtype), True
    if out.shape != state.shape:
        raise ConfigurationError(f"scratch shape {out.shape} != state shape {state.shape}")
    if not out.flags.c_contiguous:
        raise ConfigurationError("scratch buffer must be C-contiguous")
    if not accumulate:
        out[...] = 0
    return out, False


def apply_sigma_z(state, site, out=None, *, accumulate=False, axis=-1):
    """sigma^z at ``site``: +1 on up, -1 on down amplitudes."""
    state = np.ascontiguousarray(state)
    n = _n_of(state, axis)
    _check_site(n, site)
    out, _ = _prepare_out(state, out, accumulate)
    v = _site_view(state, n, site, axis)
    o = _site_view(out, n, site, axis)
    o[_sel(axis, UP)] += v[_sel(axis, UP)]
    o[_sel(axis, DOWN)] -= v[_sel(axis, DOWN)]
    return out


def apply_sigma_plus(state, site, out=None, *, accumulate=False, axis=-1):
    """Raising operator at ``site``: moves down amplitudes to the flipped index."""
    state = np.ascontiguousarray(state)
    n = _n_of(state, axis)
    _check_site(n, site)
    out, _ = _prepare_out(state, out, accumulate)
    _site_view(out, n, site, axis)[_sel(axis, UP)] += _site_view(state, n, site, axis)[_sel(axis, DOWN)]
    return out


def apply_sigma_minus(state, site, out=None, *, accumulate=False, axis=-1):
    """Lowering operator at ``site`` (adjoint of :func:`apply_sigma_plus`)."""
    state = np.ascontiguousarray(state)
    n = _n_of(state, axis)
    _check_site(n, site)
    out, _ = _prepare_out(state, out, accumulate)
    _site_view(out, n, site, axis)[_sel(axis, DOWN)] += _site_view(state, n, site, axis)[_sel(axis, UP)]
    return out


def hop_apply(state, i, out=None, *, accumulate=False, axis=-1, weight=0.5):
    """Flip-flop on bond (i, i+1): ``weight * (s+_i s-_{i+1} + s-_i s+_{i+1})``.

    The default weight 1/2 equals ``(sx sx + sy sy)/4``.  Antiparallel pairs are
    swapped, parallel pairs are annihilated.
    """
    state = np.ascontiguousarray(state)
    n = _n_of(state, axis)
    _check_bond(n, i)
    out, _ = _prepare_out(state, out, accumulate)
    v = _bond_view(state, n, i, axis)
    o = _bond_view(out, n, i, axis)
    # axes are (bit i+1, bit i)
    o[_sel(axis, 1, 0)] += weight * v[_sel(axis, 0, 1)]
    o[_sel(axis, 0, 1)] += weight * v[_sel(axis, 1, 0)]
    return out


def population(state, site, value=UP, axis=-1):
    """Probability that ``site`` is in ``value`` (per batch entry for pure states)."""
    n = _n_of(state, axis)
    _check_site(n, site)
    v = _site_view(np.ascontiguousarray(state), n, site, axis)[_sel(axis, value)]
    if axis == -1:
        return np.sum(np.abs(v) ** 2, axis=(-2, -1))
    raise ValueError("population is defined for state vectors only")


# Bit helpers for compiled kernels; keep in sync with the convention above.
@nb.njit(inline="always")
def bit(k, s):
    return (k >> s) & 1


@nb.njit(inline="always")
def antiparallel(k, i):
    return ((k >> i) ^ (k >> (i + 1))) & 1


@nb.njit(inline="always")
def flip_pair(k, i):
    return k ^ (3 << i)
