"""Closed-form two- and three-site eigensystems used as oracles.

The toy Hamiltonians keep their own parameters (Jx, Jz1, Jz2) separate from
:class:`~lrxxz.model.ChainConfig`:

    N=2:  H = (Jx/2)(s+_0 s-_1 + h.c.) + q Jz  sz_0 sz_1
    N=3:  H = (Jx/2)(s+_0 s-_1 + s+_1 s-_2 + h.c.)
              + q [Jz1 (sz_0 sz_1 + sz_1 sz_2) + Jz2 sz_0 sz_2]

with Ising prefactor ``q``.  The closed form

    f(+/-) = (Jz1 - Jz2 +/- sqrt(8 Jx^2 + Jz1^2 - 2 Jz1 Jz2 + Jz2^2)) / (2 Jx)

makes ``|uud> - f |udu> + |duu>`` an exact eigenvector only for q = 1/4,
which is therefore the default (``ZZ_FACTOR``).  With q = 1/4 the three-site
toy model at ``Jx = J``, ``Jz1 = J/A``, ``Jz2 = J/(A 2^alpha)`` is exactly
the chain Hamiltonian of :mod:`lrxxz.model`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import basis
from .errors import ConfigurationError
from .model import ChainConfig, PAULI, coupling_table, weighing_constant

ZZ_FACTOR = 0.25
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ThreeSiteCouplings:
    Jx: float
    Jz1: float
    Jz2: float

    @classmethod
    def from_chain(cls, alpha: float, J: float = 1.0, Jx: float | None = None) -> "ThreeSiteCouplings":
        """Ising couplings of the normalised N=3 chain (with ``J``), hopping ``Jx`` (default ``J``)."""
        A = weighing_constant(3, alpha)
        with np.errstate(under="ignore"):
            jz2 = float(J * np.float_power(2.0, -float(alpha)) / A)
        return cls(Jx=J if Jx is None else float(Jx), Jz1=J / A, Jz2=jz2)


def f_pm(c: ThreeSiteCouplings) -> tuple[float, float]:
    """Both roots ``(f+, f-)`` of the three-site closed form."""
    if c.Jx == 0:
        raise ConfigurationError("f+- is undefined for Jx = 0")
    d = c.Jz1 - c.Jz2
    root = math.sqrt(8.0 * c.Jx**2 + c.Jz1**2 - 2.0 * c.Jz1 * c.Jz2 + c.Jz2**2)
    return (d + root) / (2.0 * c.Jx), (d - root) / (2.0 * c.Jx)


def _kron_pair(n, i, l, a, b):
    ops = [np.eye(2, dtype=complex) for _ in range(n)]
    ops[i], ops[l] = PAULI[a], PAULI[b]
    out = np.ones((1, 1), dtype=complex)
    # site n-1 is the leftmost factor (bit s of the index is site s)
    for s in reversed(range(n)):
        out = np.kron(out, ops[s])
    return out


def _toy_hamiltonian(n, Jx, zz, q):
    H = np.zeros((1 << n, 1 << n), dtype=complex)
    for i in range(n - 1):
        H += 0.5 * Jx * (_kron_pair(n, i, i + 1, "+", "-") + _kron_pair(n, i, i + 1, "-", "+"))
    for (i, l), jz in zz.items():
        H += q * jz * _kron_pair(n, i, l, "z", "z")
    return H.real


def hamiltonian_n2(Jx: float, Jz: float, zz_factor: float = ZZ_FACTOR) -> np.ndarray:
    return _toy_hamiltonian(2, Jx, {(0, 1): Jz}, zz_factor)


def hamiltonian_n3(c: ThreeSiteCouplings, zz_factor: float = ZZ_FACTOR) -> np.ndarray:
    return _toy_hamiltonian(3, c.Jx, {(0, 1): c.Jz1, (1, 2): c.Jz1, (0, 2): c.Jz2}, zz_factor)


def _ket(terms, n) -> np.ndarray:
    v = np.zeros(1 << n)
    for coef, label in terms:
        v[basis.basis_index(label)] += coef
    return v


def eigvecs_n2() -> list[tuple[str, np.ndarray]]:
    """The four two-site eigenvectors (unnormalised), valid for every Jx, Jz."""
    return [
        ("psi1", _ket([(1, "uu")], 2)),
        ("psi2", _ket([(1, "dd")], 2)),
        ("psi3", _ket([(1, "ud"), (1, "du")], 2)),
        ("psi4", _ket([(1, "ud"), (-1, "du")], 2)),
    ]


def analytic_eigvecs_n3(c: ThreeSiteCouplings, normalize: bool = False) -> list[tuple[str, np.ndarray]]:
    """The eight three-site eigenvectors; psi1..psi4 depend on the couplings through f+-."""
    fp, fm = f_pm(c)
    vecs = [
        ("psi1", _ket([(1, "uud"), (-fp, "udu"), (1, "duu")], 3)),
        ("psi2", _ket([(1, "uud"), (-fm, "udu"), (1, "duu")], 3)),
        ("psi3", _ket([(1, "udd"), (-fp, "dud"), (1, "ddu")], 3)),
        ("psi4", _ket([(1, "udd"), (-fm, "dud"), (1, "ddu")], 3)),
        ("psi5", _ket([(1, "udd"), (-1, "ddu")], 3)),
        ("psi6", _ket([(1, "uud"), (-1, "duu")], 3)),
        ("psi7", _ket([(1, "uuu")], 3)),
        ("psi8", _ket([(1, "ddd")], 3)),
    ]
    if normalize:
        vecs = [(name, v / np.linalg.norm(v)) for name, v in vecs]
    return vecs


def xx_eigvecs_n3() -> list[tuple[str, np.ndarray]]:
    """Eigenvectors without Ising coupling, with the explicit +-sqrt(2) weights."""
    return [
        ("psi1", _ket([(1, "uud"), (SQRT2, "udu"), (1, "duu")], 3)),
        ("psi2", _ket([(1, "uud"), (-SQRT2, "udu"), (1, "duu")], 3)),
        ("psi3", _ket([(1, "udd"), (SQRT2, "dud"), (1, "ddu")], 3)),
        ("psi4", _ket([(1, "udd"), (-SQRT2, "dud"), (1, "ddu")], 3)),
    ] + analytic_eigvecs_n3(ThreeSiteCouplings(1.0, 0.0, 0.0))[4:]


def eigen_residual(H: np.ndarray, v: np.ndarray) -> float:
    """``||H v - lambda v|| / ||v||`` with the Rayleigh quotient as lambda."""
    v = np.asarray(v, dtype=complex)
    Hv = H @ v
    lam = np.vdot(v, Hv) / np.vdot(v, v)
    return float(np.linalg.norm(Hv - lam * v) / np.linalg.norm(v))


def two_spin_current_amplitudes(c3: complex, c4: complex, J: float = 1.0) -> float:
    """Two-site current from the amplitudes of ``|ud>`` (c3) and ``|du>`` (c4).

    ``<j> = -2 J Im(c3* c4) = i J (c3* c4 - c4* c3)``; e.g. ``(|ud> - i|du>)/sqrt(2)``
    carries the maximal current ``+J``.
    """
    return float((1j * J * (np.conj(c3) * c4 - np.conj(c4) * c3)).real)


def chain_couplings_n3(cfg: ChainConfig) -> ThreeSiteCouplings:
    """Exact correspondence of a three-site chain with the toy model (q = 1/4)."""
    if cfg.N != 3:
        raise ConfigurationError("chain_couplings_n3 needs N=3")
    t = coupling_table(cfg)
    return ThreeSiteCouplings(Jx=cfg.J, Jz1=float(t.jz_of_r[0]), Jz2=float(t.jz_of_r[1]))


@dataclass(frozen=True)
class CurveRow:
    alpha: float
    Jz1: float
    Jz2: float
    f_plus: float
    f_minus: float


def eigvec_alpha_curve(alpha_grid, Jx: float = 0.5, J: float = 1.0) -> list[CurveRow]:
    """f+- against alpha for normalised three-site Ising couplings (with ``J``) and hopping ``Jx``."""
    rows = []
    for a in alpha_grid:
        c = ThreeSiteCouplings.from_chain(float(a), J=J, Jx=Jx)
        fp, fm = f_pm(c)
        rows.append(CurveRow(float(a), c.Jz1, c.Jz2, fp, fm))
    return rows


CURVE_METADATA = (
    "# Jz1 = J/A, Jz2 = J/(A 2^alpha) with A from the N=3 weighing constant at J; "
    "Jx is the hopping of the toy model; Ising prefactor 1/4"
)


def curve_csv(rows: list[CurveRow], Jx: float = 0.5, J: float = 1.0) -> str:
    buf = io.StringIO()
    buf.write(f"{CURVE_METADATA}\n# Jx={Jx!r} J={J!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "Jz1", "Jz2", "f_plus", "f_minus"])
    for r in rows:
        w.writerow([format(x, ".17g") for x in (r.alpha, r.Jz1, r.Jz2, r.f_plus, r.f_minus)])
    return buf.getvalue()
