"""Desk-scale self-checks run by ``lrxxz verify``.

Each check returns ``(ok, detail)``.  Functions are looked up through their
modules at call time, so patching an implementation (for instance flipping
the sign of the current) is seen by the checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import analytic, jumps, master, model, observables


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def check_hamiltonian() -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    cfg = model.ChainConfig(N=6, alpha=1.3)
    t = model.coupling_table(cfg)
    H = model.hamiltonian_dense(t)
    v = rng.normal(size=(100, cfg.dim)) + 1j * rng.normal(size=(100, cfg.dim))
    err = np.abs(model.hamiltonian_apply(t, v) - v @ H.T).max()
    return bool(err < 1e-12), f"max |H_dense v - H v| = {err:.2e}"


def check_current_convention() -> tuple[bool, str]:
    """Matrix-free current against the Pauli operator and the two-site amplitude formula."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in (2, 3, 4):
        for _ in range(20):
            psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
            psi /= np.linalg.norm(psi)
            for k in range(n - 1):
                ref = np.vdot(psi, observables.current_operator_dense(n, k) @ psi).real
                worst = max(worst, abs(observables.spin_current(psi, k) - ref))
    psi = np.zeros(4, dtype=complex)
    psi[1], psi[2] = 1 / math.sqrt(2), -1j / math.sqrt(2)  # |ud> - i|du>
    amp = analytic.two_spin_current_amplitudes(psi[1], psi[2])
    got = observables.spin_current(psi, 0)
    ness = master.ness_direct(model.ChainConfig(N=2))
    j2 = observables.spin_current(ness, 0)
    ok = worst < 1e-12 and abs(got - amp) < 1e-12 and abs(got - 1.0) < 1e-12 and j2 > 0
    return ok, f"operator mismatch {worst:.1e}; two-site formula {amp:+.3f} vs {got:+.3f}; N=2 NESS j={j2:+.4f}"


def check_analytic() -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        c = analytic.ThreeSiteCouplings(*rng.uniform(-2.0, 2.0, size=3))
        if abs(c.Jx) < 1e-3:
            continue
        H = analytic.hamiltonian_n3(c)
        worst = max(worst, max(analytic.eigen_residual(H, v) for _, v in analytic.analytic_eigvecs_n3(c)))
    fp, fm = analytic.f_pm(analytic.ThreeSiteCouplings(0.7, 0.4, 0.4))
    spot = abs(fp - math.sqrt(2)) + abs(fm + math.sqrt(2))
    fp2, fm2 = analytic.f_pm(analytic.ThreeSiteCouplings(1.0, 1.0, 0.0))
    spot2 = abs(fp2 - 2) + abs(fm2 + 1)
    ok = worst < 1e-10 and spot < 1e-12 and spot2 < 1e-12
    return ok, f"max eigen-residual {worst:.1e}; f(Jz1=Jz2) error {spot:.1e}; f(1,1,0) error {spot2:.1e}"


def check_two_site_jz() -> tuple[bool, str]:
    js, ps = [], []
    base = model.ChainConfig(N=2)
    for alpha in (0.1, 1.0, 1000.0):
        for scale in (0.0, 1.0, 10.0):
            cfg = base.with_(alpha=alpha)
            rho = master.ness_direct(cfg, model.coupling_table(cfg, zz_scale=scale))
            js.append(observables.spin_current(rho, 0))
            ps.append(observables.polarization_profile(rho))
    spread = max(np.ptp(js), np.ptp(np.array(ps), axis=0).max())
    return bool(spread < 1e-10), f"j={js[0]:.12f}; spread over alpha and Jz scale {spread:.1e}"


def check_liouvillian() -> tuple[bool, str]:
    rng = np.random.default_rng(2)
    cfg = model.ChainConfig(N=4, alpha=0.7, gamma=1.3)
    rho = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    a = master.liouvillian_apply(cfg, rho)
    b = (master.liouvillian_sparse(cfg) @ rho.ravel()).reshape(16, 16)
    err, tr = np.abs(a - b).max(), abs(np.trace(a))
    return bool(err < 1e-12 and tr < 1e-12), f"kernel vs sparse {err:.1e}; |tr L(rho)| {tr:.1e}"


def check_exact_routes() -> tuple[bool, str]:
    cfg = model.ChainConfig(N=4, alpha=2.0)
    j_direct = observables.bond_currents(master.ness_direct(cfg)).mean()
    res = master.evolve_rk4(cfg, dt=0.05, t_end=3000.0, stop_at_steady=True, steady_rtol=1e-10)
    j_rk4 = res.current[-1]
    return bool(abs(j_direct - j_rk4) < 1e-6), f"ness-direct {j_direct:.8f} vs RK4 {j_rk4:.8f}"


def check_trajectories(n_traj: int = 300) -> tuple[bool, str]:
    cfg = model.ChainConfig(N=5, alpha=2.0, gamma=2.0)
    exact = observables.bond_currents(master.ness_direct(cfg)).mean()
    st = jumps.ensemble_average(cfg, n_traj=n_traj, t_end=300.0)
    z = abs(st.steady_current - exact) / st.steady_current_se
    return bool(z < 3), (f"trajectories {st.steady_current:.5f} +- {st.steady_current_se:.5f} "
                         f"vs exact {exact:.5f} ({z:.2f} SE)")


CHECKS = (
    ("hamiltonian-dense-vs-apply", check_hamiltonian),
    ("current-sign-convention", check_current_convention),
    ("analytic-eigensystem", check_analytic),
    ("two-site-jz-independence", check_two_site_jz),
    ("liouvillian-kernel", check_liouvillian),
    ("ness-direct-vs-rk4", check_exact_routes),
    ("trajectories-vs-exact-N5", check_trajectories),
)


def run_checks(names=None) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
