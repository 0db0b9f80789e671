"""Dense operators on the qutrit-qutrit-resonator-resonator space.

Basis order is fixed as (qutrit1, qutrit2, res_a, res_b). Qutrit levels are
ordered (g, e, f) and Fock states ascend from 0, so the flat index of
``|q1, q2, n_a, n_b>`` is ``((q1 * 3 + q2) * N + n_a) * N + n_b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

LEVELS = {"g": 0, "e": 1, "f": 2}
FACTOR_LABELS = ("qutrit1", "qutrit2", "res_a", "res_b")

HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-8
POSITIVITY_ATOL = 1e-8


def _level(level):
    if isinstance(level, str):
        try:
            return LEVELS[level]
        except KeyError:
            raise ValueError(f"unknown qutrit level {level!r}") from None
    if level not in (0, 1, 2):
        raise ValueError(f"unknown qutrit level {level!r}")
    return int(level)


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factors with ``n_photons`` Fock levels per resonator."""

    n_photons: int = 3

    def __post_init__(self):
        if int(self.n_photons) != self.n_photons or self.n_photons < 2:
            raise ValueError(f"n_photons must be an integer >= 2, got {self.n_photons}")

    @property
    def factors(self):
        n = self.n_photons
        return (("qutrit1", 3), ("qutrit2", 3), ("res_a", n), ("res_b", n))

    @property
    def dims(self):
        return tuple(d for _, d in self.factors)

    @property
    def dim(self):
        return 9 * self.n_photons**2

    def index(self, q1="g", q2="g", n_a=0, n_b=0):
        n = self.n_photons
        if not (0 <= n_a < n and 0 <= n_b < n):
            raise ValueError(f"photon numbers ({n_a}, {n_b}) outside truncation {n}")
        return ((_level(q1) * 3 + _level(q2)) * n + n_a) * n + n_b

    def basis_ket(self, q1="g", q2="g", n_a=0, n_b=0):
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(q1, q2, n_a, n_b)] = 1.0
        return psi

    def excitations(self):
        """Excitation count per basis state: excited qutrits plus photons."""
        q = (np.arange(3) > 0).astype(int)
        n = np.arange(self.n_photons)
        grids = np.meshgrid(q, q, n, n, indexing="ij")
        return sum(grids).ravel()

    def sector(self, max_excitations=1):
        """Indices of basis states with at most ``max_excitations`` excitations."""
        return np.flatnonzero(self.excitations() <= max_excitations)


def as_operator(matrix):
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return m


def annihilation(n_levels):
    """Truncated bosonic lowering operator with ``<n-1|a|n> = sqrt(n)``."""
    if int(n_levels) != n_levels or n_levels < 2:
        raise ValueError(f"n_levels must be an integer >= 2, got {n_levels}")
    return np.diag(np.sqrt(np.arange(1, n_levels)), 1).astype(complex)


def qutrit_transition(from_level, to_level):
    """Return ``|to><from|`` on a single qutrit; equal levels give a projector."""
    m = np.zeros((3, 3), dtype=complex)
    m[_level(to_level), _level(from_level)] = 1.0
    return m


def embed(local_op, factor_label, layout):
    """Tensor ``local_op`` into the full space with identities elsewhere."""
    local_op = as_operator(local_op)
    labels = [label for label, _ in layout.factors]
    if factor_label not in labels:
        raise ValueError(f"unknown factor {factor_label!r}; expected one of {labels}")
    parts = []
    for label, d in layout.factors:
        if label == factor_label:
            if local_op.shape[0] != d:
                raise ValueError(
                    f"{factor_label} has dimension {d}, operator has {local_op.shape[0]}"
                )
            parts.append(local_op)
        else:
            parts.append(np.eye(d, dtype=complex))
    return reduce(np.kron, parts)


def expectation(op, rho):
    op = np.asarray(op)
    rho = np.asarray(rho)
    if op.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {op.shape} vs {rho.shape}")
    # Tr(op @ rho) without forming the product
    return complex(np.einsum("ij,ji->", op, rho))


def ket_to_dm(psi):
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def check_ket(psi, atol=1e-10):
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise ValueError(f"ket is not normalized (norm={norm:.15g})")
    return psi


def check_density_matrix(rho, hermitian_atol=HERMITIAN_ATOL, trace_atol=TRACE_ATOL,
                         positivity_atol=POSITIVITY_ATOL):
    """Validate Hermiticity, unit trace and positivity; return the array."""
    rho = as_operator(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > hermitian_atol:
        raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"density matrix trace {tr.real:.15g} differs from 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam < -positivity_atol:
        raise ValueError(f"density matrix has negative eigenvalue {lam:.3g}")
    return rho


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


class HarmonicHamiltonian:
    """Hermitian operator ``H(t) = static + sum_k (exp(i w_k t) X_k + h.c.)``.

    Frequencies are angular (rad/ns); ``terms`` pairs each frequency with the
    operator multiplying ``exp(+i w t)``.
    """

    def __init__(self, static, terms=()):
        self.static = as_operator(static)
        n = self.static.shape[0]
        terms = [(float(w), as_operator(x)) for w, x in terms]
        for _, x in terms:
            if x.shape != (n, n):
                raise ValueError(f"term shape {x.shape} does not match static {self.static.shape}")
        self.terms = tuple(terms)
        self._freqs = np.array([w for w, _ in terms], dtype=float)
        self._ops = np.array([x for _, x in terms], dtype=complex).reshape(len(terms), n, n)

    @property
    def dim(self):
        return self.static.shape[0]

    @property
    def max_frequency(self):
        """Largest explicit oscillation frequency in rad/ns (0 if static)."""
        return float(np.max(np.abs(self._freqs))) if len(self._freqs) else 0.0

    @property
    def energy_scale(self):
        """Upper bound on ``||H(t)||`` in rad/ns."""
        bound = np.linalg.norm(self.static, 2)
        for x in self._ops:
            bound += 2 * np.linalg.norm(x, 2)
        return float(bound)

    def __call__(self, t):
        if not len(self._freqs):
            return self.static.copy()
        x = np.tensordot(np.exp(1j * self._freqs * t), self._ops, axes=1)
        return self.static + x + x.conj().T

    def restrict(self, indices):
        ix = np.ix_(indices, indices)
        return HarmonicHamiltonian(self.static[ix], [(w, x[ix]) for w, x in self.terms])

    def __add__(self, other):
        if not isinstance(other, HarmonicHamiltonian):
            return NotImplemented
        return HarmonicHamiltonian(self.static + other.static, self.terms + other.terms)
