"""Power-law fits, saturation detection and NDC scans over sweep records."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError, FitError, InconclusiveError

DEFAULT_EPSILON = 0.03
DEFAULT_FIT_NMIN = 4


@dataclass(frozen=True)
class SweepRecord:
    """One (N, alpha, gamma) steady-state point."""

    N: int
    alpha: float
    gamma: float
    j_ness: float
    j_stderr: float = 0.0
    bottleneck: float = float("nan")
    bottleneck_stderr: float = 0.0
    solver: str = "ness-direct"
    n_traj: int = 0
    transient_cut: float = 0.0
    t_end: float = 0.0
    seed: int = 0
    status: str = "ok"
    profile: tuple = field(default=(), compare=False)

    @property
    def stochastic(self) -> bool:
        return self.solver == "trajectories"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["profile"] = list(self.profile)
        return d


@dataclass
class FitResult:
    alpha: float
    gamma: float
    gamma_exp: float  # j ~ amplitude * N**(-gamma_exp)
    gamma_exp_stderr: float
    amplitude: float
    n_range: tuple
    Ns: list
    residuals: list  # log(j) - log(fit), per point
    transition_N: int | None = None
    regime: str = "diffusive"
    epsilon: float = DEFAULT_EPSILON
    weighted: bool = False

    def predict(self, N) -> np.ndarray:
        return self.amplitude * np.asarray(N, dtype=float) ** (-self.gamma_exp)


def _same_series(records) -> tuple[float, float]:
    if not records:
        raise DataError("no records")
    keys = {(r.alpha, r.gamma) for r in records}
    if len(keys) != 1:
        raise DataError(f"records mix parameter sets {sorted(keys)}")
    return next(iter(keys))


def _usable(records):
    return [r for r in records if r.status == "ok" and np.isfinite(r.j_ness)]


def powerlaw_fit(records, n_min: int | None = DEFAULT_FIT_NMIN, n_max: int | None = None) -> FitResult:
    """Least-squares fit of ``log j = log a - gamma log N`` on ``n_min <= N <= n_max``.

    Stochastic records are weighted by their relative standard error; if any
    point in range is exact (zero error) the fit is unweighted.
    """
    records = _usable(records)
    alpha, gamma = _same_series(records)
    sel = [r for r in records if (n_min is None or r.N >= n_min) and (n_max is None or r.N <= n_max)]
    Ns = sorted({r.N for r in sel})
    if len(Ns) != len(sel):
        raise DataError("duplicate N in fit range")
    if len(sel) < 3:
        raise FitError(f"power-law fit needs >= 3 points, got {len(sel)}")
    sel = sorted(sel, key=lambda r: r.N)
    j = np.array([r.j_ness for r in sel])
    if np.any(j <= 0):
        raise DataError("power-law fit needs strictly positive currents")
    x, y = np.log([r.N for r in sel]), np.log(j)
    se = np.array([r.j_stderr for r in sel])
    weighted = bool(np.all(se > 0))
    w = j / se if weighted else np.ones_like(j)  # 1 / sigma(log j)
    X = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(X * w[:, None], y * w, rcond=None)
    resid = y - X @ coef
    dof = len(sel) - 2
    if weighted:
        cov = np.linalg.inv((X * w[:, None]).T @ (X * w[:, None]))
    else:
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * np.linalg.inv(X.T @ X)
    return FitResult(
        alpha=alpha, gamma=gamma, gamma_exp=float(-coef[1]),
        gamma_exp_stderr=float(math.sqrt(max(cov[1, 1], 0.0))), amplitude=float(math.exp(coef[0])),
        n_range=(sel[0].N, sel[-1].N), Ns=[r.N for r in sel], residuals=resid.tolist(),
        weighted=weighted,
    )


def _series(records, key: str):
    records = _usable(records)
    _same_series(records)
    Ns = [r.N for r in records]
    if Ns != sorted(Ns) or len(set(Ns)) != len(Ns):
        raise DataError("records must be sorted by N without duplicates")
    vals = np.array([getattr(r, key) for r in records], dtype=float)
    return Ns, vals


def relative_changes(records, key: str = "j_ness") -> list[tuple[int, int, float]]:
    """``(N_a, N_b, |v_b - v_a| / |v_a|)`` for consecutive records."""
    Ns, v = _series(records, key)
    return [(Ns[i], Ns[i + 1], abs(v[i + 1] - v[i]) / abs(v[i])) for i in range(len(Ns) - 1)]


def detect_transition(records, epsilon: float = DEFAULT_EPSILON, key: str = "j_ness") -> int | None:
    """Smallest N from which every consecutive relative change stays below ``epsilon``.

    At least two consecutive pairs must satisfy the bound; otherwise (or if
    the last pair violates it) there is no transition in the data.
    """
    if not epsilon > 0:
        raise DataError("epsilon must be positive")
    changes = relative_changes(records, key)
    tail = 0
    for _, _, c in reversed(changes):
        if c < epsilon:
            tail += 1
        else:
            break
    if tail < 2:
        return None
    return changes[len(changes) - tail][0]


def classify_regime(records, N: int, epsilon: float = DEFAULT_EPSILON,
                    transition_N: int | None = None) -> str:
    """"ballistic" at and beyond the detected transition, "diffusive" otherwise."""
    if transition_N is None:
        transition_N = detect_transition(records, epsilon)
    return "ballistic" if transition_N is not None and N >= transition_N else "diffusive"


def fit_series(records, epsilon: float = DEFAULT_EPSILON, n_min: int | None = DEFAULT_FIT_NMIN) -> FitResult:
    """Fit plus transition and regime for one (alpha, gamma) series.

    The power law is fitted on the diffusive branch only (below the
    transition) when that branch still has three points.
    """
    records = sorted(_usable(records), key=lambda r: r.N)
    nt = detect_transition(records, epsilon)
    n_max = None
    if nt is not None and len([r for r in records if (n_min or 0) <= r.N <= nt]) >= 3:
        n_max = nt
    fit = powerlaw_fit(records, n_min=n_min, n_max=n_max)
    fit.transition_N, fit.epsilon = nt, epsilon
    fit.regime = classify_regime(records, records[-1].N, transition_N=nt)
    return fit


@dataclass(frozen=True)
class NdcResult:
    gamma_max: float
    j_max: float
    index: int
    gammas: tuple
    currents: tuple

    def current_at(self, gamma: float) -> float:
        """Log-linear interpolation of the scanned current."""
        return float(np.interp(math.log(gamma), np.log(self.gammas), self.currents))


def ndc_scan(records) -> NdcResult:
    """Location of the current maximum over Gamma (fixed N, alpha).

    The discrete maximum is refined by a parabola through it and its two
    neighbours in ``log Gamma``.  A maximum on the edge of the scanned range
    is inconclusive.
    """
    records = _usable(records)
    if len({(r.N, r.alpha) for r in records}) != 1:
        raise DataError("NDC scan needs a single (N, alpha)")
    records = sorted(records, key=lambda r: r.gamma)
    g = np.array([r.gamma for r in records], dtype=float)
    j = np.array([r.j_ness for r in records], dtype=float)
    if len(g) < 5:
        raise DataError("NDC scan needs at least 5 Gamma points")
    if len(set(g)) != len(g) or g[0] <= 0:
        raise DataError("Gamma values must be positive and distinct")
    if g[-1] / g[0] < 10 - 1e-12:
        raise DataError("Gamma points must span at least a decade")
    k = int(np.argmax(j))
    if k == 0 or k == len(g) - 1:
        raise InconclusiveError(
            f"current maximum at the scan edge (Gamma={g[k]:g}); widen the Gamma range"
        )
    x = np.log(g[k - 1:k + 2])
    c2, c1, c0 = np.polyfit(x, j[k - 1:k + 2], 2)
    xv = -c1 / (2 * c2) if c2 < 0 else x[1]
    xv = float(np.clip(xv, x[0], x[2]))
    return NdcResult(gamma_max=math.exp(xv), j_max=float(c0 + c1 * xv + c2 * xv * xv), index=k,
                     gammas=tuple(g.tolist()), currents=tuple(j.tolist()))
