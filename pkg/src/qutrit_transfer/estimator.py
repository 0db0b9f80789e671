"""Estimator wrapper: ``fit`` simulates the protocol, ``predict`` scores input states.

Because the dynamics are linear in the initial density matrix, a single fit
propagates the nine operators ``|i><j|`` of the qutrit-1 input space and any
number of input states can then be scored without re-integrating.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .lindblad import IntegratorConfig
from .model import DecoherenceRates, DeviceParams
from .protocol import SimulationConfig, build_schedule, transfer_map

TIMINGS = ("nominal", "device")


def check_states(X, atol=1e-10):
    """Validate an ``(n_samples, 3)`` array of qutrit amplitudes (real or complex)."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(f"expected amplitudes of shape (n_samples, 3), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("no states given")
    X = X.astype(complex)
    if not np.all(np.isfinite(X)):
        raise ValueError("amplitudes contain NaN or inf")
    norms = np.sum(np.abs(X) ** 2, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > atol)
    if len(bad):
        raise ValueError(f"state {bad[0]} is not normalized (sum |c|^2 = {norms[bad[0]]:.15g})")
    return X


def states_from_angles(gamma, theta):
    """Amplitude rows for ``alpha = sqrt(1-gamma^2) sin(theta)``, ``beta = ... cos(theta)``."""
    gamma = np.asarray(gamma, dtype=float)
    theta = np.asarray(theta, dtype=float)
    gamma, theta = np.broadcast_arrays(gamma, theta)
    r = np.sqrt(1.0 - gamma**2)
    return np.stack([r * np.sin(theta), r * np.cos(theta), gamma], axis=-1).reshape(-1, 3)


class StateTransferSimulator(BaseEstimator):
    """Simulated qutrit-to-qutrit transfer at one device operating point.

    Frequencies are given as nu = omega / 2pi (GHz for levels, MHz for the
    drive) and lifetimes in microseconds; ``None`` lifetimes disable the
    corresponding channel. ``dissipation=False`` switches off every channel.

    ``timing="nominal"`` times the swap from the design couplings (``c = d = 1``),
    so ``c`` and ``d`` act as unknown fabrication errors; ``"device"`` uses the
    exchange rate of the perturbed device. Both agree when ``c = d = 1``.
    """

    def __init__(self, D=10.0, kappa_inv_us=0.1, *, constraint_mode="equal_rates",
                 crosstalk=True, crosstalk_ratio=0.1, dissipation=True,
                 hamiltonian="full", c=1.0, d=1.0, nu_eg_GHz=3.5, nu_fg_GHz=8.8,
                 delta_GHz=1.0, Delta_GHz=0.8, Omega_MHz=100.0, T_relax_us=5.0,
                 T_phi_us=2.0, n_photons=3, dt_ns=1e-3, method="rk4_fixed",
                 local_tolerance=1e-10, restrict_sector=True, sample_stride=500,
                 timing="nominal"):
        self.D = D
        self.kappa_inv_us = kappa_inv_us
        self.constraint_mode = constraint_mode
        self.crosstalk = crosstalk
        self.crosstalk_ratio = crosstalk_ratio
        self.dissipation = dissipation
        self.hamiltonian = hamiltonian
        self.c = c
        self.d = d
        self.nu_eg_GHz = nu_eg_GHz
        self.nu_fg_GHz = nu_fg_GHz
        self.delta_GHz = delta_GHz
        self.Delta_GHz = Delta_GHz
        self.Omega_MHz = Omega_MHz
        self.T_relax_us = T_relax_us
        self.T_phi_us = T_phi_us
        self.n_photons = n_photons
        self.dt_ns = dt_ns
        self.method = method
        self.local_tolerance = local_tolerance
        self.restrict_sector = restrict_sector
        self.sample_stride = sample_stride
        self.timing = timing

    def device_params(self, c=None, d=None):
        return DeviceParams.from_detuning_ratio(
            self.D, delta_GHz=self.delta_GHz, Delta_GHz=self.Delta_GHz,
            nu_eg_GHz=self.nu_eg_GHz, nu_fg_GHz=self.nu_fg_GHz,
            crosstalk_ratio=self.crosstalk_ratio, Omega_MHz=self.Omega_MHz,
            mode=self.constraint_mode,
            c=self.c if c is None else c, d=self.d if d is None else d,
        )

    def schedule(self):
        if self.timing not in TIMINGS:
            raise ValueError(f"timing must be one of {TIMINGS}, got {self.timing!r}")
        if self.timing == "nominal":
            return build_schedule(self.device_params(c=1.0, d=1.0))
        return build_schedule(self.device_params())

    def decoherence_rates(self):
        if not self.dissipation:
            return DecoherenceRates.none()
        return DecoherenceRates.from_lifetimes(self.kappa_inv_us, self.T_relax_us, self.T_phi_us)

    def simulation_config(self):
        return SimulationConfig(
            n_photons=self.n_photons, crosstalk=self.crosstalk, hamiltonian=self.hamiltonian,
            restrict_sector=self.restrict_sector,
            integrator=IntegratorConfig(dt=self.dt_ns, method=self.method,
                                        local_tolerance=self.local_tolerance,
                                        sample_stride=self.sample_stride),
        )

    def fit(self, X=None, y=None):
        """Integrate the protocol; ``X`` and ``y`` are ignored."""
        self.params_ = self.device_params()
        self.rates_ = self.decoherence_rates()
        self.map_ = transfer_map(self.params_, self.rates_, self.simulation_config(),
                                 self.schedule())
        self.schedule_ = self.map_.schedule
        self.quality_factors_ = (self.map_.q_a, self.map_.q_b)
        self.peak_photons_ = self.map_.peak_photons
        self.max_trace_error_ = self.map_.max_trace_error
        self.min_eigenvalue_ = self.map_.worst_eigenvalue
        return self

    def predict(self, X):
        """Transfer fidelity for each row of amplitudes ``(alpha, beta, gamma)``."""
        check_is_fitted(self, "map_")
        return self.map_.fidelities(check_states(X))

    def score(self, X, y=None):
        return float(np.mean(self.predict(X)))

    def final_state(self, state):
        check_is_fitted(self, "map_")
        return self.map_.final_state(check_states(state)[0])

    @property
    def operation_time_ns(self):
        check_is_fitted(self, "schedule_")
        return self.schedule_.total_time


UNIFORM_STATE = np.full(3, 1 / math.sqrt(3))
UNEQUAL_STATE = np.array([1 / math.sqrt(2), 1 / math.sqrt(3), 1 / math.sqrt(6)])
