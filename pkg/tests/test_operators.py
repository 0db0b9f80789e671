import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qutrit_transfer.operators import (
    HarmonicHamiltonian,
    SpaceLayout,
    annihilation,
    check_density_matrix,
    check_ket,
    embed,
    expectation,
    ket_to_dm,
    purity,
    qutrit_transition,
)


def test_annihilation_matrix_elements():
    a = annihilation(4)
    for n in range(1, 4):
        assert a[n - 1, n] == pytest.approx(np.sqrt(n))
    assert np.count_nonzero(a) == 3


def test_commutator_is_identity_below_cutoff():
    a = annihilation(5)
    comm = a @ a.conj().T - a.conj().T @ a
    np.testing.assert_allclose(np.diag(comm)[:-1], 1.0)
    assert comm[-1, -1] == pytest.approx(-4.0)


def test_qutrit_transition_maps_levels():
    up = qutrit_transition("g", "e")
    np.testing.assert_array_equal(up @ np.array([1, 0, 0]), [0, 1, 0])
    np.testing.assert_array_equal(qutrit_transition("e", "f") @ [0, 1, 0], [0, 0, 1])
    with pytest.raises(ValueError):
        qutrit_transition("g", "h")


@pytest.mark.parametrize("n", [2, 3, 4])
def test_layout_dimension_and_index(n):
    lay = SpaceLayout(n)
    assert lay.dim == 9 * n * n
    assert lay.dims == (3, 3, n, n)
    assert lay.index("e", "f", 1, 0) == ((1 * 3 + 2) * n + 1) * n + 0
    ket = lay.basis_ket("f", "g", 0, 1)
    assert ket.sum() == 1 and ket[lay.index("f", "g", 0, 1)] == 1


def test_layout_rejects_bad_input():
    with pytest.raises(ValueError):
        SpaceLayout(1)
    with pytest.raises(ValueError):
        SpaceLayout(3).index("g", "g", 3, 0)


def test_single_excitation_sector():
    lay = SpaceLayout(3)
    idx = lay.sector(1)
    assert len(idx) == 7
    assert lay.index("g", "g") in idx
    assert lay.index("g", "g", 0, 1) in idx
    assert lay.index("e", "e") not in idx


def test_embed_matches_explicit_kron():
    lay = SpaceLayout(3)
    a = annihilation(3)
    i3, iN = np.eye(3), np.eye(3)
    np.testing.assert_allclose(embed(a, "res_a", lay), np.kron(np.kron(np.kron(i3, i3), a), iN))
    s = qutrit_transition("g", "f")
    np.testing.assert_allclose(embed(s, "qutrit2", lay),
                               np.kron(np.kron(np.kron(i3, s), iN), iN))


def test_embedded_factors_commute():
    lay = SpaceLayout(2)
    a = embed(annihilation(2), "res_a", lay)
    b = embed(annihilation(2), "res_b", lay)
    s = embed(qutrit_transition("g", "e"), "qutrit1", lay)
    for x, y in ((a, b), (a, s), (b, s)):
        np.testing.assert_allclose(x @ y, y @ x)


def test_density_matrix_checks():
    psi = np.array([1, 1j, 0]) / np.sqrt(2)
    rho = ket_to_dm(psi)
    check_density_matrix(rho)
    assert purity(rho) == pytest.approx(1.0)
    assert expectation(np.diag([0, 1, 0]), rho) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        check_density_matrix(2 * rho)
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.2, -0.2, 0]))
    with pytest.raises(ValueError):
        check_density_matrix(rho + np.triu(np.ones((3, 3)), 1))
    with pytest.raises(ValueError):
        check_ket(np.array([1.0, 1.0]))


def _random_terms(rng, n, k):
    return [(rng.normal(), rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
            for _ in range(k)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-50, 50))
def test_harmonic_hamiltonian_hermitian(seed, t):
    rng = np.random.default_rng(seed)
    n = 4
    s = rng.normal(size=(n, n))
    h = HarmonicHamiltonian(s + s.T, _random_terms(rng, n, 3))
    m = h(t)
    np.testing.assert_allclose(m, m.conj().T, atol=1e-12)


def test_harmonic_hamiltonian_value_and_restrict():
    rng = np.random.default_rng(1)
    terms = _random_terms(rng, 3, 2)
    h = HarmonicHamiltonian(np.zeros((3, 3)), terms)
    t = 0.7
    expect = sum(np.exp(1j * w * t) * x for w, x in terms)
    np.testing.assert_allclose(h(t), expect + expect.conj().T)
    idx = np.array([0, 2])
    np.testing.assert_allclose(h.restrict(idx)(t), h(t)[np.ix_(idx, idx)])
    np.testing.assert_allclose((h + h)(t), 2 * h(t))
    assert h.max_frequency == pytest.approx(max(abs(w) for w, _ in terms))
