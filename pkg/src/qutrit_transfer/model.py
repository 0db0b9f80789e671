"""Device parameters, Hamiltonian builders and dissipation channels.

Parameters are configured as ordinary frequencies (GHz for level and
resonator frequencies, MHz for couplings) and lifetimes in microseconds.
Everything handed to the dynamics is angular (rad/ns) with times in ns; the
conversion happens only in the properties below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .operators import (
    HarmonicHamiltonian,
    annihilation,
    embed,
    qutrit_transition,
)

TWO_PI = 2.0 * math.pi
CONSTRAINT_MODES = ("equal_rates", "linear_ratio")


def _ghz(nu):
    return TWO_PI * nu


def _mhz(nu):
    return TWO_PI * nu * 1e-3


@dataclass(frozen=True)
class DeviceParams:
    """Frequencies in GHz, couplings and Rabi frequency in MHz (all nu = w/2pi)."""

    nu_eg_1: float = 3.5
    nu_eg_2: float = 3.5
    nu_fg_1: float = 8.8
    nu_fg_2: float = 8.8
    nu_a: float = 2.5
    nu_b: float = 8.0
    g_1: float = 100.0
    g_2: float = 100.0
    mu_1: float = 100.0 * math.sqrt(0.8)
    mu_2: float = 100.0 * math.sqrt(0.8)
    g_ab: float = 10.0
    Omega: float = 100.0

    def __post_init__(self):
        for name in ("nu_eg_1", "nu_eg_2", "nu_fg_1", "nu_fg_2", "nu_a", "nu_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("g_1", "g_2", "mu_1", "mu_2", "g_ab", "Omega"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        for j in (1, 2):
            if not self.nu_eg(j) - self.nu_a > 0:
                raise ValueError(f"delta_{j} must be positive (nu_eg_{j} > nu_a)")
            if not self.nu_fg(j) - self.nu_b > 0:
                raise ValueError(f"Delta_{j} must be positive (nu_fg_{j} > nu_b)")

    def nu_eg(self, j):
        return (self.nu_eg_1, self.nu_eg_2)[j - 1]

    def nu_fg(self, j):
        return (self.nu_fg_1, self.nu_fg_2)[j - 1]

    # angular quantities, rad/ns
    @property
    def delta(self):
        return tuple(_ghz(self.nu_eg(j) - self.nu_a) for j in (1, 2))

    @property
    def Delta(self):
        return tuple(_ghz(self.nu_fg(j) - self.nu_b) for j in (1, 2))

    @property
    def Delta_ab(self):
        return _ghz(self.nu_b - self.nu_a)

    @property
    def g(self):
        return (_mhz(self.g_1), _mhz(self.g_2))

    @property
    def mu(self):
        return (_mhz(self.mu_1), _mhz(self.mu_2))

    @property
    def crosstalk(self):
        return _mhz(self.g_ab)

    @property
    def rabi(self):
        return _mhz(self.Omega)

    @property
    def omega_a(self):
        return _ghz(self.nu_a)

    @property
    def omega_b(self):
        return _ghz(self.nu_b)

    @property
    def lambda1(self):
        g1, g2 = self.g
        d1, d2 = self.delta
        return 0.5 * g1 * g2 * (1 / d1 + 1 / d2)

    @property
    def lambda2(self):
        m1, m2 = self.mu
        d1, d2 = self.Delta
        return 0.5 * m1 * m2 * (1 / d1 + 1 / d2)

    @classmethod
    def from_detuning_ratio(cls, D=10.0, *, delta_GHz=1.0, Delta_GHz=0.8,
                            nu_eg_GHz=3.5, nu_fg_GHz=8.8, crosstalk_ratio=0.1,
                            Omega_MHz=100.0, mode="equal_rates", c=1.0, d=1.0):
        """Identical qutrits with ``g = delta / D`` and ``mu`` from the constraint mode.

        ``crosstalk_ratio`` scales ``g_ab`` with the homogeneous ``g``; the
        inhomogeneity factors ``c`` and ``d`` are applied last.
        """
        if not D > 0:
            raise ValueError(f"D must be positive, got {D}")
        g = 1e3 * delta_GHz / D
        base = cls(
            nu_eg_1=nu_eg_GHz, nu_eg_2=nu_eg_GHz, nu_fg_1=nu_fg_GHz, nu_fg_2=nu_fg_GHz,
            nu_a=nu_eg_GHz - delta_GHz, nu_b=nu_fg_GHz - Delta_GHz,
            g_1=g, g_2=g, mu_1=0.0, mu_2=0.0,
            g_ab=crosstalk_ratio * g, Omega=Omega_MHz,
        )
        return apply_inhomogeneity(solve_constraints(base, mode), c, d)


def coupling_for_b(g, delta, Delta, mode="equal_rates"):
    """Resonator-b coupling matching ``g`` under the selected constraint.

    ``equal_rates`` equalises the Stark shifts, ``g**2/delta == mu**2/Delta``;
    ``linear_ratio`` uses ``mu = g * Delta / delta``. Units of ``g`` are kept.
    """
    if not delta > 0 or not Delta > 0:
        raise ValueError(f"detunings must be positive, got delta={delta}, Delta={Delta}")
    if mode == "equal_rates":
        return g * math.sqrt(Delta / delta)
    if mode == "linear_ratio":
        return g * Delta / delta
    raise ValueError(f"unknown constraint mode {mode!r}; expected one of {CONSTRAINT_MODES}")


def solve_constraints(params, mode="equal_rates"):
    """Homogeneous couplings ``g_2 = g_1`` and ``mu_1 = mu_2`` from ``g_1``."""
    delta = params.nu_eg_1 - params.nu_a
    Delta = params.nu_fg_1 - params.nu_b
    mu = coupling_for_b(params.g_1, delta, Delta, mode)
    return replace(params, g_2=params.g_1, mu_1=mu, mu_2=mu)


def apply_inhomogeneity(params, c=1.0, d=1.0):
    return replace(params, g_2=c * params.g_1, mu_2=d * params.mu_1)


@dataclass(frozen=True)
class DecoherenceRates:
    """Decay and dephasing rates in 1/us; tuple fields hold (qutrit 1, qutrit 2)."""

    kappa_a: float = 10.0
    kappa_b: float = 10.0
    gamma_eg: tuple = (0.2, 0.2)
    gamma_fe: tuple = (0.2, 0.2)
    gamma_fg: tuple = (0.2, 0.2)
    gamma_phi_e: tuple = (0.5, 0.5)
    gamma_phi_f: tuple = (0.5, 0.5)

    def __post_init__(self):
        for name in ("gamma_eg", "gamma_fe", "gamma_fg", "gamma_phi_e", "gamma_phi_f"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != 2:
                raise ValueError(f"{name} needs one rate per qutrit")
            object.__setattr__(self, name, value)
        for name, value in self.items():
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and non-negative, got {value}")

    def items(self):
        yield "kappa_a", self.kappa_a
        yield "kappa_b", self.kappa_b
        for name in ("gamma_eg", "gamma_fe", "gamma_fg", "gamma_phi_e", "gamma_phi_f"):
            for j, v in enumerate(getattr(self, name), start=1):
                yield f"{name}_{j}", v

    @classmethod
    def from_lifetimes(cls, kappa_inv_us=0.1, relax_us=5.0, dephase_us=2.0):
        """Rates from lifetimes; ``None`` or ``inf`` switches a channel off."""

        def rate(lifetime):
            if lifetime is None or math.isinf(lifetime):
                return 0.0
            if not lifetime > 0:
                raise ValueError(f"lifetimes must be positive, got {lifetime}")
            return 1.0 / lifetime

        k, r, p = rate(kappa_inv_us), rate(relax_us), rate(dephase_us)
        return cls(kappa_a=k, kappa_b=k, gamma_eg=(r, r), gamma_fe=(r, r),
                   gamma_fg=(r, r), gamma_phi_e=(p, p), gamma_phi_f=(p, p))

    @classmethod
    def none(cls):
        return cls(0.0, 0.0, (0, 0), (0, 0), (0, 0), (0, 0), (0, 0))


class Channel(NamedTuple):
    """Dissipator ``rate * L[op]``; ``rate`` in 1/ns."""

    op: np.ndarray
    rate: float
    label: str = ""
    kind: str = "decay"


def quality_factors(params, rates):
    """``Q = omega / kappa`` for both resonators (inf for a lossless mode)."""

    def q(omega, kappa_per_us):
        return math.inf if kappa_per_us == 0 else omega / (kappa_per_us * 1e-3)

    return q(params.omega_a, rates.kappa_a), q(params.omega_b, rates.kappa_b)


# --- operator helpers -----------------------------------------------------

def _qutrit_op(j, from_level, to_level, layout):
    return embed(qutrit_transition(from_level, to_level), f"qutrit{j}", layout)


def _modes(layout):
    a = embed(annihilation(layout.n_photons), "res_a", layout)
    b = embed(annihilation(layout.n_photons), "res_b", layout)
    return a, b


def _crosstalk_term(params, layout):
    a, b = _modes(layout)
    return params.Delta_ab, params.crosstalk * (a @ b.conj().T)


def stage1_hamiltonian(params, layout, include_crosstalk=True):
    """Qutrit-resonator exchange Hamiltonian of the swap stage as a harmonic operator."""
    a, b = _modes(layout)
    terms = []
    for j in (1, 2):
        terms.append((params.delta[j - 1],
                      params.g[j - 1] * (a @ _qutrit_op(j, "g", "e", layout))))
        terms.append((params.Delta[j - 1],
                      params.mu[j - 1] * (b @ _qutrit_op(j, "g", "f", layout))))
    if include_crosstalk:
        terms.append(_crosstalk_term(params, layout))
    return HarmonicHamiltonian(np.zeros((layout.dim, layout.dim), dtype=complex), terms)


def stage2_hamiltonian(params, layout, include_crosstalk=True):
    """Resonant e<->f drive on qutrit 2 with the qutrits decoupled from the modes."""
    x = params.rabi * _qutrit_op(2, "f", "e", layout)
    terms = [_crosstalk_term(params, layout)] if include_crosstalk else []
    return HarmonicHamiltonian(x + x.conj().T, terms)


def effective_hamiltonian(params, layout):
    """Dispersive Hamiltonian: Stark shifts, a^dag b sigma_fe terms and qutrit exchange."""
    a, b = _modes(layout)
    ad, bd = a.conj().T, b.conj().T
    static = np.zeros((layout.dim, layout.dim), dtype=complex)
    terms = []
    for j in (1, 2):
        g, mu = params.g[j - 1], params.mu[j - 1]
        dl, Dl = params.delta[j - 1], params.Delta[j - 1]
        p_g = _qutrit_op(j, "g", "g", layout)
        p_e = _qutrit_op(j, "e", "e", layout)
        p_f = _qutrit_op(j, "f", "f", layout)
        static += g**2 / dl * (a @ ad @ p_e - ad @ a @ p_g)
        static += mu**2 / Dl * (b @ bd @ p_f - bd @ b @ p_g)
        amp = 0.5 * g * mu * (1 / dl + 1 / Dl)
        terms.append((-(dl - Dl), amp * (ad @ b @ _qutrit_op(j, "e", "f", layout))))
    d1, d2 = params.delta
    D1, D2 = params.Delta
    terms.append((d1 - d2, params.lambda1
                   * (_qutrit_op(1, "g", "e", layout) @ _qutrit_op(2, "e", "g", layout))))
    terms.append((D1 - D2, params.lambda2
                   * (_qutrit_op(1, "g", "f", layout) @ _qutrit_op(2, "f", "g", layout))))
    return HarmonicHamiltonian(static, terms)


def h_stage1(t, params, layout, include_crosstalk=True):
    return stage1_hamiltonian(params, layout, include_crosstalk)(t)


def h_stage2(t, params, layout, include_crosstalk=True):
    return stage2_hamiltonian(params, layout, include_crosstalk)(t)


def h_effective_full(t, params, layout):
    return effective_hamiltonian(params, layout)(t)


def h_effective_reduced(params, layout):
    """Time-independent exchange ``lambda * (sigma_eg,1^+ sigma_eg,2^- + ... + h.c.)``."""
    l1, l2 = params.lambda1, params.lambda2
    if abs(l1 - l2) > 1e-12 * max(abs(l1), abs(l2)):
        raise ValueError(f"exchange rates differ: lambda1={l1!r}, lambda2={l2!r}")
    x = (_qutrit_op(1, "g", "e", layout) @ _qutrit_op(2, "e", "g", layout)
         + _qutrit_op(1, "g", "f", layout) @ _qutrit_op(2, "f", "g", layout))
    return l1 * (x + x.conj().T)


def collapse_operators(rates, layout):
    """Dissipation channels with non-zero rate, converted to 1/ns."""
    a, b = _modes(layout)
    channels = [Channel(a, rates.kappa_a, "kappa_a"), Channel(b, rates.kappa_b, "kappa_b")]
    for j in (1, 2):
        channels += [
            Channel(_qutrit_op(j, "e", "g", layout), rates.gamma_eg[j - 1], f"gamma_eg_{j}"),
            Channel(_qutrit_op(j, "f", "e", layout), rates.gamma_fe[j - 1], f"gamma_fe_{j}"),
            Channel(_qutrit_op(j, "f", "g", layout), rates.gamma_fg[j - 1], f"gamma_fg_{j}"),
        ]
    for j in (1, 2):
        channels += [
            Channel(_qutrit_op(j, "e", "e", layout), rates.gamma_phi_e[j - 1],
                    f"gamma_phi_e_{j}", "dephasing"),
            Channel(_qutrit_op(j, "f", "f", layout), rates.gamma_phi_f[j - 1],
                    f"gamma_phi_f_{j}", "dephasing"),
        ]
    return [ch._replace(rate=ch.rate * 1e-3) for ch in channels if ch.rate > 0]


def restrict_channels(channels, indices):
    ix = np.ix_(indices, indices)
    return [ch._replace(op=ch.op[ix]) for ch in channels]


@dataclass(frozen=True)
class InitialStateSpec:
    """Qutrit-1 amplitudes on (g, e, f)."""

    alpha: complex = 1 / math.sqrt(3)
    beta: complex = 1 / math.sqrt(3)
    gamma: complex = 1 / math.sqrt(3)

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2 + abs(self.gamma) ** 2
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state amplitudes are not normalized (sum |c|^2 = {norm:.15g})")

    @classmethod
    def from_angles(cls, gamma, theta):
        """``alpha = sqrt(1 - gamma^2) sin(theta)``, ``beta = sqrt(1 - gamma^2) cos(theta)``."""
        if not 0 <= gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        r = math.sqrt(1.0 - gamma**2)
        return cls(r * math.sin(theta), r * math.cos(theta), gamma)

    @property
    def amplitudes(self):
        return np.array([self.alpha, self.beta, self.gamma], dtype=complex)
