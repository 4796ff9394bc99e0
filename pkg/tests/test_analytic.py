import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrxxz import analytic, master, model, observables as obs
from lrxxz.analytic import ThreeSiteCouplings
from lrxxz.errors import ConfigurationError

SQ2 = math.sqrt(2)
finite = st.floats(-3.0, 3.0, allow_nan=False)


@given(jx=finite.filter(lambda x: abs(x) > 1e-3), jz=finite)
def test_f_pm_equal_ising(jx, jz):
    fp, fm = analytic.f_pm(ThreeSiteCouplings(jx, jz, jz))
    s = math.copysign(1.0, jx)
    assert abs(fp - s * SQ2) < 1e-12 and abs(fm + s * SQ2) < 1e-12


def test_f_pm_spot_values():
    assert analytic.f_pm(ThreeSiteCouplings(1.0, 1.0, 0.0)) == pytest.approx((2.0, -1.0), abs=1e-15)
    assert analytic.f_pm(ThreeSiteCouplings(0.5, 0.0, 0.0)) == pytest.approx((SQ2, -SQ2), abs=1e-15)
    with pytest.raises(ConfigurationError):
        analytic.f_pm(ThreeSiteCouplings(0.0, 1.0, 1.0))


@given(jx=finite.filter(lambda x: abs(x) > 1e-3), jz1=finite, jz2=finite)
def test_three_site_eigenvectors(jx, jz1, jz2):
    c = ThreeSiteCouplings(jx, jz1, jz2)
    H = analytic.hamiltonian_n3(c)
    vecs = analytic.analytic_eigvecs_n3(c)
    assert len(vecs) == 8
    for _, v in vecs:
        assert analytic.eigen_residual(H, v) < 1e-10
    # the eight vectors span the space
    assert np.linalg.matrix_rank(np.stack([v for _, v in vecs])) == 8


def test_normalised_variants():
    for _, v in analytic.analytic_eigvecs_n3(ThreeSiteCouplings(0.5, 0.3, 0.1), normalize=True):
        assert np.linalg.norm(v) == pytest.approx(1.0)


def test_literal_unit_ising_prefactor_is_not_an_eigenbasis():
    c = ThreeSiteCouplings(0.5, 0.8, 0.1)
    H = analytic.hamiltonian_n3(c, zz_factor=1.0)
    worst = max(analytic.eigen_residual(H, v) for _, v in analytic.analytic_eigvecs_n3(c))
    assert worst > 0.1


def test_xx_limit_list():
    c = ThreeSiteCouplings(1.0, 0.0, 0.0)
    H = analytic.hamiltonian_n3(c)
    got = analytic.analytic_eigvecs_n3(c)
    ref = analytic.xx_eigvecs_n3()
    for (_, a), (_, b) in zip(got, ref):
        # psi1 carries -f+ = -sqrt(2) where the XX list writes the +sqrt(2) partner first
        assert analytic.eigen_residual(H, b) < 1e-12
        overlap = abs(np.dot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
        assert overlap == pytest.approx(1.0, abs=1e-12) or abs(overlap) < 1e-12
    span_a = np.stack([v for _, v in got[:4]])
    span_b = np.stack([v for _, v in ref[:4]])
    assert np.linalg.matrix_rank(np.vstack([span_a, span_b])) == 4


def test_aligned_states_carry_no_current():
    c = ThreeSiteCouplings(0.5, 0.2, 0.1)
    vecs = dict(analytic.analytic_eigvecs_n3(c, normalize=True))
    for name in ("psi7", "psi8"):
        assert np.abs(obs.bond_currents(vecs[name].astype(complex))).max() == 0.0


@given(jx=finite, jz=finite)
def test_two_site_eigenvectors(jx, jz):
    H = analytic.hamiltonian_n2(jx, jz)
    for _, v in analytic.eigvecs_n2():
        assert analytic.eigen_residual(H, v) < 1e-12


def test_toy_model_equals_chain_hamiltonian():
    for alpha in (0.1, 1.0, 2.5, 1000.0):
        cfg = model.ChainConfig(N=3, alpha=alpha)
        H_chain = model.hamiltonian_dense(model.coupling_table(cfg))
        H_toy = analytic.hamiltonian_n3(analytic.chain_couplings_n3(cfg))
        assert np.abs(H_chain - H_toy).max() < 1e-14
    with pytest.raises(ConfigurationError):
        analytic.chain_couplings_n3(model.ChainConfig(N=4))


def test_alpha_curve_limits_and_monotonicity():
    grid = np.logspace(-2, 1, 400)
    rows = analytic.eigvec_alpha_curve(grid, Jx=0.5)
    fp = np.array([r.f_plus for r in rows])
    fm = np.array([r.f_minus for r in rows])
    assert np.all(np.diff(fp) > 0) and np.all(np.diff(fm) > 0)
    big = analytic.eigvec_alpha_curve([1000.0], Jx=0.5)[0]
    assert big.Jz2 / big.Jz1 < 1e-30
    ref = analytic.f_pm(ThreeSiteCouplings(0.5, big.Jz1, 0.0))
    assert (big.f_plus, big.f_minus) == pytest.approx(ref, abs=1e-15)
    # Ising self-cancellation: the XX weights are approached as alpha -> 0
    dev = [abs(r.f_plus - SQ2) for r in analytic.eigvec_alpha_curve([0.1, 0.01, 0.001, 0.0], Jx=0.5)]
    assert dev[0] > dev[1] > dev[2] > dev[3] and dev[3] < 1e-15


def test_curve_csv_has_metadata():
    text = analytic.curve_csv(analytic.eigvec_alpha_curve([0.5, 1.0]))
    lines = text.splitlines()
    assert lines[0].startswith("#") and "Ising prefactor" in lines[0]
    assert lines[2] == "alpha,Jz1,Jz2,f_plus,f_minus"
    assert len(lines) == 5


@pytest.mark.parametrize("scale", [0.0, 1.0, 10.0])
def test_two_site_ness_blind_to_ising(scale):
    ref = master.ness_direct(model.ChainConfig(N=2))
    for alpha in (0.1, 1.0, 1000.0):
        cfg = model.ChainConfig(N=2, alpha=alpha)
        rho = master.ness_direct(cfg, model.coupling_table(cfg, zz_scale=scale))
        assert abs(obs.spin_current(rho, 0) - obs.spin_current(ref, 0)) < 1e-10
        assert np.abs(obs.polarization_profile(rho) - obs.polarization_profile(ref)).max() < 1e-10
