import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrxxz import basis, blocks, master, model, observables as obs
from lrxxz.errors import ConfigurationError, IntegrationError, NessAmbiguityError, SolverGuardError
from lrxxz.master import LindbladSpec

from conftest import random_density


def cfg_(N, **kw):
    return model.ChainConfig(N=N, **kw)


def test_single_spin_pumped_up_is_stationary():
    # one site, H = 0, only the raising channel
    up = np.array([[0, 0], [0, 1]], dtype=complex)
    out = np.empty_like(up)
    g = 2.0
    master._lindblad_kernel(up, out, np.zeros(2), 1, 0.0, np.array([0]), np.array([1]),
                            np.array([g]), np.array([g, 0.0]))
    assert np.abs(out).max() == 0.0
    down = np.array([[1, 0], [0, 0]], dtype=complex)
    master._lindblad_kernel(down, out, np.zeros(2), 1, 0.0, np.array([0]), np.array([1]),
                            np.array([g]), np.array([g, 0.0]))
    assert np.allclose(out, [[-g, 0], [0, g]])


def test_eigenprojector_stationary_without_driving():
    cfg = cfg_(4, alpha=1.3, gamma=0.0)
    _, vecs = np.linalg.eigh(model.hamiltonian_dense(model.coupling_table(cfg)))
    v = vecs[:, 3]
    assert np.abs(master.liouvillian_apply(cfg, np.outer(v, v.conj()))).max() < 1e-12


@given(n=st.integers(2, 5), alpha=st.sampled_from([0.1, 1.0, 2.0, 1000.0]),
       gamma=st.floats(0.0, 5.0), seed=st.integers(0, 2**32 - 1))
def test_generator_traceless_and_matches_sparse(n, alpha, gamma, seed):
    cfg = cfg_(n, alpha=alpha, gamma=gamma)
    rng = np.random.default_rng(seed)
    rho = rng.normal(size=(cfg.dim, cfg.dim)) + 1j * rng.normal(size=(cfg.dim, cfg.dim))
    a = master.liouvillian_apply(cfg, rho)
    b = (master.liouvillian_sparse(cfg) @ rho.ravel()).reshape(rho.shape)
    assert abs(np.trace(a)) < 1e-12 * max(1.0, np.abs(rho).sum())
    assert np.abs(a - b).max() < 1e-12 * max(1.0, np.abs(rho).max())


def test_shape_checked():
    with pytest.raises(ConfigurationError):
        master.liouvillian_apply(cfg_(3), np.eye(4))


def test_lindblad_spec_validation():
    with pytest.raises(ConfigurationError):
        LindbladSpec(((0, "sideways", 1.0),))
    with pytest.raises(ConfigurationError):
        LindbladSpec(((0, "raise", -1.0),))
    spec = LindbladSpec.boundary(cfg_(5, gamma=1.5))
    assert spec.jump_ops == ((0, "raise", 1.5), (4, "lower", 1.5))


def test_unitary_evolution_conserves_purity():
    cfg = cfg_(4, alpha=0.8, gamma=0.0)
    res = master.evolve_rk4(cfg, dt=0.01, t_end=100.0, sample_interval=5.0)
    assert np.abs(res.purity - 1.0).max() < 1e-8


def test_two_site_converges_to_direct_solution():
    cfg = cfg_(2)
    res = master.evolve_rk4(cfg, dt=0.01, t_end=500.0, sample_interval=10.0)
    assert np.abs(master.liouvillian_apply(cfg, res.rho)).max() < 1e-8
    assert np.abs(res.rho - master.ness_direct(cfg)).max() < 1e-8


def test_direct_and_rk4_agree_at_seven_sites(exact_ness):
    cfg = cfg_(7, alpha=2.0)
    j_direct = obs.bond_currents(master.ness_direct(cfg)).mean()
    res = master.evolve_rk4(cfg, dt=0.1, t_end=5000.0, stop_at_steady=True)
    assert res.converged
    assert abs(res.current[-1] - j_direct) < 1e-6


def test_ness_residual_and_uniqueness_guard():
    cfg = cfg_(4, alpha=0.5)
    rho = master.ness_direct(cfg)
    assert np.abs(master.liouvillian_apply(cfg, rho)).max() < 1e-10
    with pytest.raises(NessAmbiguityError):
        master.ness_direct(cfg_(3, gamma=0.0))
    with pytest.raises(SolverGuardError):
        master.ness_direct(cfg_(8))


@pytest.mark.parametrize("alpha", [0.1, 1.0, 1000.0])
def test_two_site_current_independent_of_alpha(alpha):
    ref = obs.spin_current(master.ness_direct(cfg_(2, alpha=1000.0)), 0)
    assert abs(obs.spin_current(master.ness_direct(cfg_(2, alpha=alpha)), 0) - ref) < 1e-10


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_density_invariants_along_evolution(N):
    cfg = cfg_(N, alpha=1.5)
    res = master.evolve_rk4(cfg, "mixed", dt=0.05, t_end=30.0, sample_interval=3.0, keep_states=True,
                            representation="dense")
    for rho in res.states:
        assert abs(np.trace(rho) - 1) < 1e-10
        assert np.abs(rho - rho.conj().T).max() < 1e-10
        assert np.linalg.eigvalsh(rho).min() > -1e-8


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_ness_polarisation_antisymmetric(exact_ness, alpha):
    p = obs.polarization_profile(exact_ness(7, alpha, 2.0))
    assert np.abs(p + p[::-1]).max() < 1e-8


def test_ness_independent_of_initial_state():
    cfg = cfg_(5, alpha=1.0)
    ref = master.ness_direct(cfg)
    for init in ("down", "updown", "mixed"):
        res = master.evolve_rk4(cfg, init, dt=0.1, t_end=5000.0, stop_at_steady=True, steady_rtol=1e-10)
        assert np.abs(res.rho - ref).max() < 1e-8


def test_trace_drift_raises():
    # a non-trace-one start is caught at the first sample
    with pytest.raises(IntegrationError, match="reduce dt"):
        master.evolve_rk4(cfg_(3), 2.0 * master.initial_density(3), dt=0.01, t_end=1.0)


def test_unstable_step_caught_by_purity_guard():
    with pytest.raises(IntegrationError, match="unstable"):
        master.evolve_rk4(cfg_(4, gamma=20.0), dt=1.0, t_end=200.0)


def test_sample_grid_validated():
    with pytest.raises(ConfigurationError):
        master.evolve_rk4(cfg_(3), dt=0.3, t_end=3.0, sample_interval=1.0)
    with pytest.raises(ConfigurationError):
        master.evolve_rk4(cfg_(3), dt=0.1, t_end=None)


def test_steady_state_dispatch(exact_current):
    cfg = cfg_(5, alpha=2.0)
    a = master.steady_state(cfg, "ness-direct")
    b = master.steady_state(cfg, "exact-rk4", dt=0.1)
    assert np.abs(a - b).max() < 1e-6
    with pytest.raises(ConfigurationError):
        master.steady_state(cfg, "guess")


# --- magnetisation blocks -------------------------------------------------

def block_diagonal(rng, n):
    d = 1 << n
    r = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    pc = np.array([bin(k).count("1") for k in range(d)])
    r[pc[:, None] != pc[None, :]] = 0
    return r


def test_layout_sizes():
    lay = blocks.layout(6)
    assert lay.total == 924  # C(12, 6)
    assert list(lay.sizes) == [1, 6, 15, 20, 15, 6, 1]
    assert np.array_equal(np.sort(lay.codes), np.arange(64))


@given(n=st.integers(2, 6), alpha=st.sampled_from([0.3, 1.0, 1000.0]), gamma=st.floats(0.0, 4.0),
       seed=st.integers(0, 2**32 - 1))
def test_block_generator_matches_dense(n, alpha, gamma, seed):
    cfg = cfg_(n, alpha=alpha, gamma=gamma)
    rng = np.random.default_rng(seed)
    rho = block_diagonal(rng, n)
    gen = master._block_generator(cfg, model.coupling_table(cfg), LindbladSpec.boundary(cfg))
    flat = blocks.from_dense(rho)
    assert np.abs(blocks.to_dense(gen(flat), n) - master.liouvillian_apply(cfg, rho)).max() < 1e-12
    cur, pol, tr, pur = gen.observe(flat, 1.0)
    assert np.abs(cur - obs.bond_currents(rho)).max() < 1e-11
    assert np.abs(pol - obs.polarization_profile(rho)).max() < 1e-11
    assert abs(tr - np.trace(rho).real) < 1e-11


def test_block_rejects_cross_sector_coherence():
    rho = random_density(np.random.default_rng(0), 3)
    with pytest.raises(ConfigurationError):
        blocks.from_dense(rho)
    with pytest.raises(ConfigurationError):
        master.evolve_rk4(cfg_(3), rho, dt=0.1, t_end=1.0, representation="blocks")
    # auto falls back to the dense representation
    res = master.evolve_rk4(cfg_(3), rho, dt=0.1, t_end=1.0)
    assert res.rho.shape == (8, 8)


def test_block_and_dense_evolution_agree():
    cfg = cfg_(5, alpha=0.7)
    a = master.evolve_rk4(cfg, dt=0.05, t_end=20.0, representation="blocks")
    b = master.evolve_rk4(cfg, dt=0.05, t_end=20.0, representation="dense")
    assert np.abs(a.currents - b.currents).max() < 1e-13
    assert np.abs(a.rho - b.rho).max() < 1e-13


def test_blocks_need_boundary_channels():
    cfg = cfg_(3)
    spec = LindbladSpec(((1, "raise", 1.0),))
    with pytest.raises(ConfigurationError):
        master.evolve_rk4(cfg, dt=0.1, t_end=1.0, spec=spec, representation="blocks")
    res = master.evolve_rk4(cfg, dt=0.1, t_end=1.0, spec=spec)
    assert res.polarization[-1][1] > -1.0


def test_initial_density_kinds():
    assert master.initial_density(3)[1, 1] == 1.0
    assert master.initial_density(3, "down")[0, 0] == 1.0
    assert np.allclose(master.initial_density(2, "mixed"), np.eye(4) / 4)
    k = basis.basis_index("udu")
    assert master.initial_density(3, "udu")[k, k] == 1.0
    with pytest.raises(ConfigurationError):
        master.initial_density(3, "ud")
