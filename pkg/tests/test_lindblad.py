import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qutrit_transfer.lindblad import (
    IntegrationError,
    IntegratorConfig,
    _Generator,
    evolve,
    evolve_pure,
    lindblad_rhs,
)
from qutrit_transfer.model import Channel
from qutrit_transfer.operators import HarmonicHamiltonian, annihilation, check_density_matrix, ket_to_dm


def _random_system(seed, n, n_terms=2, n_channels=2):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    terms = [(rng.uniform(-3, 3), 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))))
             for _ in range(n_terms)]
    h = HarmonicHamiltonian(0.5 * (s + s.conj().T), terms)
    channels = [Channel(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), rng.uniform(0, 1))
                for _ in range(n_channels)]
    return h, channels, rng


def _random_rho(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = z @ z.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("n", [3, 5, 18])
@pytest.mark.parametrize("t", [0.0, 1.3])
def test_generator_matches_reference_formula(n, t):
    """Superoperator (small n) and sparse (large n) paths agree with the dense formula."""
    h, channels, rng = _random_system(n, n)
    gen = _Generator(h, channels)
    x = np.stack([_random_rho(rng, n), rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))])
    got = gen(t, x)
    for k in range(2):
        np.testing.assert_allclose(got[k], lindblad_rhs(t, x[k], h, channels), atol=1e-10)


def test_generic_callable_hamiltonian():
    h, channels, rng = _random_system(3, 4)
    gen = _Generator(lambda t: h(t), channels)
    rho = _random_rho(rng, 4)
    np.testing.assert_allclose(gen(0.4, rho[None])[0], lindblad_rhs(0.4, rho, h, channels),
                               atol=1e-12)


def test_single_photon_decay_oracle():
    kappa = 0.01  # 1/ns, lifetime 100 ns
    rho0 = np.diag([0.0, 1.0, 0.0]).astype(complex)
    h = HarmonicHamiltonian(np.zeros((3, 3)))
    rec = evolve(rho0, h, [Channel(annihilation(3), kappa)], 1 / kappa, IntegratorConfig(dt=0.01))
    n1 = rec.final[1, 1].real
    assert abs(n1 - math.exp(-1)) / math.exp(-1) < 1e-6
    assert rec.final[0, 0].real == pytest.approx(1 - math.exp(-1), rel=1e-6)


def test_dephasing_decays_coherence():
    gamma = 0.2
    psi = np.array([1, 1]) / math.sqrt(2)
    proj = np.diag([0.0, 1.0])
    rec = evolve(ket_to_dm(psi), HarmonicHamiltonian(np.zeros((2, 2))), [Channel(proj, gamma)],
                 5.0, IntegratorConfig(dt=1e-3))
    assert abs(rec.final[0, 1]) == pytest.approx(0.5 * math.exp(-gamma * 5.0 / 2), rel=1e-9)
    assert rec.final[1, 1].real == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_trace_positivity_and_purity(seed):
    h, channels, rng = _random_system(seed, 4)
    rec = evolve(_random_rho(rng, 4), h, channels, 2.0,
                 IntegratorConfig(dt=2e-3, sample_stride=100))
    assert rec.max_trace_error < 1e-8
    assert rec.worst_eigenvalue >= -1e-7
    assert np.all(rec.purity <= 1 + 1e-9)
    check_density_matrix(rec.final)


def test_closed_system_matches_schrodinger():
    h, _, rng = _random_system(7, 5)
    psi = rng.normal(size=5) + 1j * rng.normal(size=5)
    psi /= np.linalg.norm(psi)
    cfg = IntegratorConfig(dt=1e-3)
    rec = evolve(ket_to_dm(psi), h, [], 3.0, cfg)
    phi = evolve_pure(psi, h, 3.0, cfg)
    np.testing.assert_allclose(rec.final, ket_to_dm(phi), atol=1e-9)
    assert rec.purity[-1] == pytest.approx(1.0, abs=1e-9)


def test_block_evolution_is_linear():
    h, channels, rng = _random_system(11, 3)
    cfg = IntegratorConfig(dt=2e-3)
    basis = np.eye(3)
    blocks = np.zeros((3, 3, 3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            blocks[i, j] = np.outer(basis[i], basis[j])
    out = evolve(blocks, h, channels, 1.0, cfg).final
    c = np.array([0.6, 0.48j, 0.64])
    rho = evolve(np.outer(c, c.conj()), h, channels, 1.0, cfg).final
    np.testing.assert_allclose(np.einsum("i,j,ijab->ab", c, c.conj(), out), rho, atol=1e-12)


def test_time_offset_shifts_phases():
    h, channels, rng = _random_system(5, 3)
    rho = _random_rho(rng, 3)
    cfg = IntegratorConfig(dt=2e-3)
    first = evolve(rho, h, channels, 0.5, cfg)
    second = evolve(first.final, h, channels, 0.5, cfg, t0=0.5)
    whole = evolve(rho, h, channels, 1.0, cfg)
    np.testing.assert_allclose(second.final, whole.final, atol=1e-12)


def test_step_doubling_agrees_with_fixed_step():
    h, channels, rng = _random_system(3, 4)
    rho = _random_rho(rng, 4)
    fixed = evolve(rho, h, channels, 2.0, IntegratorConfig(dt=5e-4)).final
    adaptive = evolve(rho, h, channels, 2.0,
                      IntegratorConfig(dt=0.05, method="rk4_step_doubling",
                                       local_tolerance=1e-12)).final
    np.testing.assert_allclose(adaptive, fixed, atol=1e-8)


def test_coarse_step_warns():
    h = HarmonicHamiltonian(np.diag([0.0, 100.0]))
    with pytest.warns(RuntimeWarning):
        evolve(np.diag([1.0, 0.0]), h, [], 0.01, IntegratorConfig(dt=0.01))


def test_unstable_step_aborts_on_trace_drift():
    h = HarmonicHamiltonian(np.zeros((2, 2)))
    ch = [Channel(np.array([[0, 1], [0, 0]]), 100.0)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(IntegrationError):
            evolve(np.diag([0.0, 1.0]), h, ch, 5.0,
                   IntegratorConfig(dt=0.1, sample_stride=1))


def test_invalid_inputs():
    h = HarmonicHamiltonian(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        evolve(np.eye(3) / 3, h, [], 1.0)
    with pytest.raises(ValueError):
        evolve_pure(np.array([1.0, 1.0]), h, 1.0)
