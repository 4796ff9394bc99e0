import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrxxz import analytic, basis, jumps, model, observables as obs
from lrxxz.errors import ConfigurationError

from conftest import random_density, random_state

SQ2 = 1 / np.sqrt(2)


def ket(label):
    return basis.basis_state(len(label), label)


def test_product_state_carries_no_current():
    assert obs.spin_current(ket("ud"), 0) == 0.0
    assert obs.spin_current(np.outer(ket("ud"), ket("ud").conj()), 0) == 0.0


def test_maximal_two_site_current_and_sign():
    # |ud> - i|du> moves the up spin from site 0 towards site 1
    fwd = SQ2 * (ket("ud") - 1j * ket("du"))
    back = SQ2 * (ket("ud") + 1j * ket("du"))
    assert obs.spin_current(fwd, 0) == pytest.approx(1.0, abs=1e-15)
    assert obs.spin_current(back, 0) == pytest.approx(-1.0, abs=1e-15)
    assert obs.spin_current(fwd, 0, J=2.5) == pytest.approx(2.5, abs=1e-15)
    c3, c4 = fwd[basis.basis_index("ud")], fwd[basis.basis_index("du")]
    assert analytic.two_spin_current_amplitudes(c3, c4) == pytest.approx(1.0, abs=1e-15)


@given(seed=st.integers(0, 2**32 - 1))
def test_two_spin_amplitude_formula(seed):
    psi = random_state(np.random.default_rng(seed), 2)
    c3, c4 = psi[basis.basis_index("ud")], psi[basis.basis_index("du")]
    assert obs.spin_current(psi, 0) == pytest.approx(analytic.two_spin_current_amplitudes(c3, c4), abs=1e-14)


def test_real_eigenstates_carry_no_current():
    t = model.coupling_table(model.ChainConfig(N=5, alpha=1.2))
    _, vecs = np.linalg.eigh(model.hamiltonian_dense(t))
    for v in vecs.T:
        assert np.abs(obs.bond_currents(v)).max() < 1e-14


@given(n=st.integers(2, 5), seed=st.integers(0, 2**32 - 1))
def test_ladder_form_matches_pauli_operator(n, seed):
    rng = np.random.default_rng(seed)
    psi, rho = random_state(rng, n), random_density(rng, n)
    for k in range(n - 1):
        op = obs.current_operator_dense(n, k)
        assert obs.spin_current(psi, k) == pytest.approx(np.vdot(psi, op @ psi).real, abs=1e-12)
        assert obs.spin_current(rho, k) == pytest.approx(np.trace(rho @ op).real, abs=1e-12)


@given(n=st.integers(2, 6), seed=st.integers(0, 2**32 - 1))
def test_operator_norm_bounds(n, seed):
    rng = np.random.default_rng(seed)
    for x in (random_state(rng, n), random_density(rng, n, rank=2)):
        assert np.all(np.abs(obs.bond_currents(x)) <= 1.0 + 1e-12)
        assert np.all(np.abs(obs.polarization_profile(x)) <= 1.0 + 1e-12)


def test_profile_examples():
    assert np.allclose(obs.polarization_profile(ket("udd")), [1, -1, -1])
    rho = np.outer(ket("udd"), ket("udd"))
    assert np.allclose(obs.polarization_profile(rho), [1, -1, -1])


def test_bottleneck_examples():
    assert obs.bottleneck(ket("udddd")) == 2.0
    assert obs.bottleneck(ket("uuuu")) == 0.0


def test_batch_variants_match_single():
    rng = np.random.default_rng(4)
    psis = np.stack([random_state(rng, 4) for _ in range(5)])
    assert np.allclose(obs.bond_currents_pure(psis), [obs.bond_currents(p) for p in psis])
    assert np.allclose(obs.polarization_pure(psis), [obs.polarization_profile(p) for p in psis])


def test_bad_input_rejected():
    with pytest.raises(ConfigurationError):
        obs.spin_current(np.zeros((2, 2, 2)), 0)
    with pytest.raises(ConfigurationError):
        obs.spin_current(ket("uud"), 2)


def test_trajectory_average_equals_reconstructed_density():
    cfg = model.ChainConfig(N=4, alpha=1.0)
    prop = jumps.Propagator(cfg)
    finals = [jumps.run_trajectory(cfg, traj_id=i, t_end=20.0, propagator=prop).psi for i in range(200)]
    finals = np.array(finals)
    rho = np.einsum("ti,tj->ij", finals, finals.conj()) / len(finals)
    pure = obs.bond_currents_pure(finals).mean(axis=0)
    assert np.abs(pure - obs.bond_currents(rho)).max() < 1e-12
    assert np.abs(obs.polarization_pure(finals).mean(axis=0) - obs.polarization_profile(rho)).max() < 1e-12


@pytest.mark.parametrize("alpha", [0.5, 2.0, 1000.0])
def test_ness_bond_uniform(exact_ness, alpha):
    rho = exact_ness(6, alpha, 2.0)
    j = obs.bond_currents(rho)
    assert np.abs(j - j[0]).max() < 1e-8


def test_xx_like_profile_flat_inside(exact_ness):
    p = obs.polarization_profile(exact_ness(8, 0.1, 2.0))
    assert np.abs(p[1:-1]).max() < 0.02
    assert abs(p[0]) > 0.5 and abs(p[-1]) > 0.5


def test_nearest_neighbour_bottleneck_decreases(exact_ness):
    bn = [obs.bottleneck(exact_ness(n, 1000.0, 2.0)) for n in range(4, 10)]
    assert np.all(np.diff(bn) < 0)


def test_current_and_bottleneck_saturate_together(exact_ness, exact_current):
    from lrxxz.analysis import SweepRecord, detect_transition

    recs = []
    for n in range(3, 10):
        rho = exact_ness(n, 0.5, 2.0)
        recs.append(SweepRecord(N=n, alpha=0.5, gamma=2.0, j_ness=float(obs.bond_currents(rho).mean()),
                                bottleneck=obs.bottleneck(rho)))
    nj = detect_transition(recs, key="j_ness")
    nb = detect_transition(recs, key="bottleneck")
    assert nj is not None and nb is not None and abs(nj - nb) <= 1
