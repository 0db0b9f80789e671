"""Two-stage transfer: resonator-mediated swap, then a pi pulse on qutrit 2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lindblad import IntegratorConfig, TrajectoryRecord, evolve
from .model import (
    InitialStateSpec,
    collapse_operators,
    effective_hamiltonian,
    quality_factors,
    restrict_channels,
    stage1_hamiltonian,
    stage2_hamiltonian,
)
from .operators import SpaceLayout, annihilation, embed, ket_to_dm, qutrit_transition

HAMILTONIAN_KINDS = ("full", "effective")
QUTRIT_LEVELS = ("g", "e", "f")


@dataclass(frozen=True)
class ProtocolSchedule:
    """Exchange rates (rad/ns) and stage durations (ns)."""

    lambda1: float
    lambda2: float
    lam: float
    rabi: float
    t1: float
    t2: float

    @property
    def stages(self):
        return (("stage1", self.t1), ("stage2", self.t2))

    @property
    def lambda_ratio(self):
        return self.lambda2 / self.lambda1

    @property
    def total_time(self):
        return self.t1 + self.t2


def build_schedule(params):
    """Swap for ``pi / (2 lambda1)`` then drive for ``pi / Omega``."""
    l1, l2 = params.lambda1, params.lambda2
    if not l1 > 0:
        raise ValueError(f"lambda1 must be positive, got {l1}")
    if not params.rabi > 0:
        raise ValueError("Rabi frequency must be positive")
    return ProtocolSchedule(
        lambda1=l1, lambda2=l2, lam=l1, rabi=params.rabi,
        t1=math.pi / (2.0 * l1), t2=math.pi / params.rabi,
    )


@dataclass(frozen=True)
class SimulationConfig:
    n_photons: int = 3
    crosstalk: bool = True
    hamiltonian: str = "full"
    restrict_sector: bool = True
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.hamiltonian not in HAMILTONIAN_KINDS:
            raise ValueError(f"hamiltonian must be one of {HAMILTONIAN_KINDS}")
        SpaceLayout(self.n_photons)

    @property
    def layout(self):
        return SpaceLayout(self.n_photons)


def _coerce_spec(spec):
    if isinstance(spec, InitialStateSpec):
        return spec
    return InitialStateSpec(*spec)


def initial_ket(spec, layout):
    c = _coerce_spec(spec).amplitudes
    return sum(c[i] * layout.basis_ket(q, "g") for i, q in enumerate(QUTRIT_LEVELS))


def initial_state(spec, layout):
    """Pure product state with qutrit 1 in ``spec``, everything else in ground/vacuum."""
    return ket_to_dm(initial_ket(spec, layout))


def ideal_target(spec, layout):
    """``|g>_1 |0>_a |0>_b`` times the input amplitudes carried by qutrit 2."""
    c = _coerce_spec(spec).amplitudes
    return sum(c[i] * layout.basis_ket("g", q) for i, q in enumerate(QUTRIT_LEVELS))


def state_fidelity(psi, rho):
    """``sqrt(<psi|rho|psi>)``, clipped to [0, 1] against roundoff."""
    overlap = float(np.real(np.vdot(psi, rho @ psi)))
    return math.sqrt(min(max(overlap, 0.0), 1.0))


def analytic_stage1_state(spec, lam, t, layout):
    """Closed-form swap-stage state under the dispersive exchange, Stark phase included."""
    c = _coerce_spec(spec).amplitudes
    phase = np.exp(-1j * lam * t)
    cos, sin = math.cos(lam * t), math.sin(lam * t)
    psi = c[0] * layout.basis_ket("g", "g")
    for i, q in ((1, "e"), (2, "f")):
        psi = psi + c[i] * phase * (cos * layout.basis_ket(q, "g")
                                    - 1j * sin * layout.basis_ket("g", q))
    return psi


@dataclass
class _Stages:
    layout: SpaceLayout
    indices: np.ndarray
    h1: object
    h2: object
    channels: list
    observables: dict


def _observables(layout):
    a = embed(annihilation(layout.n_photons), "res_a", layout)
    b = embed(annihilation(layout.n_photons), "res_b", layout)
    na, nb = a.conj().T @ a, b.conj().T @ b
    obs = {"n_a": na, "n_b": nb, "n_photons": na + nb}
    for j in (1, 2):
        for q in ("e", "f"):
            obs[f"p_{q}{j}"] = embed(qutrit_transition(q, q), f"qutrit{j}", layout)
    return obs


def _prepare(params, rates, config):
    layout = config.layout
    if config.hamiltonian == "effective":
        h1 = effective_hamiltonian(params, layout)
    else:
        h1 = stage1_hamiltonian(params, layout, config.crosstalk)
    h2 = stage2_hamiltonian(params, layout, config.crosstalk)
    channels = collapse_operators(rates, layout)
    obs = _observables(layout)
    if config.restrict_sector:
        # every term conserves or lowers the excitation count, so the
        # single-excitation sector is invariant and the reduction is exact
        idx = layout.sector(1)
        ix = np.ix_(idx, idx)
        h1, h2 = h1.restrict(idx), h2.restrict(idx)
        channels = restrict_channels(channels, idx)
        obs = {k: v[ix] for k, v in obs.items()}
    else:
        idx = np.arange(layout.dim)
    return _Stages(layout, idx, h1, h2, channels, obs)


def _run_stages(x0, stages, schedule, config):
    integ = config.integrator
    rec1 = evolve(x0, stages.h1, stages.channels, schedule.t1, integ,
                  observables=stages.observables)
    rec2 = evolve(rec1.final, stages.h2, stages.channels, schedule.t2, integ,
                  t0=schedule.t1, observables=stages.observables)
    return rec1, rec2


@dataclass
class TransferResult:
    fidelity: float
    final_state: np.ndarray
    target: np.ndarray
    schedule: ProtocolSchedule
    records: tuple
    q_a: float
    q_b: float

    @property
    def peak_photons(self):
        return max(r.peak("n_photons") for r in self.records)

    @property
    def peak_n_a(self):
        return max(r.peak("n_a") for r in self.records)

    @property
    def peak_n_b(self):
        return max(r.peak("n_b") for r in self.records)

    @property
    def max_trace_error(self):
        return max(r.max_trace_error for r in self.records)

    @property
    def worst_eigenvalue(self):
        return min(r.worst_eigenvalue for r in self.records)

    def recompute_fidelity(self):
        return state_fidelity(self.target, self.final_state)


def run_transfer(spec, params, rates, config=SimulationConfig(), schedule=None):
    """Run both stages under the master equation and score against the ideal output.

    ``schedule`` defaults to the one built from ``params``.
    """
    spec = _coerce_spec(spec)
    schedule = schedule or build_schedule(params)
    stages = _prepare(params, rates, config)
    layout, idx = stages.layout, stages.indices
    rho0 = initial_state(spec, layout)[np.ix_(idx, idx)]
    rec1, rec2 = _run_stages(rho0, stages, schedule, config)
    rho = np.zeros((layout.dim, layout.dim), dtype=complex)
    rho[np.ix_(idx, idx)] = rec2.final
    target = ideal_target(spec, layout)
    q_a, q_b = quality_factors(params, rates)
    return TransferResult(
        fidelity=state_fidelity(target, rho), final_state=rho, target=target,
        schedule=schedule, records=(rec1, rec2), q_a=q_a, q_b=q_b,
    )


@dataclass
class TransferMap:
    """Protocol channel restricted to inputs ``(c_g, c_e, c_f)`` on qutrit 1.

    ``overlaps[k, l, i, j] = <out_k| Phi(|in_i><in_j|) |out_l>`` with
    ``in_i = |i, g, 0, 0>`` and ``out_k = |g, k, 0, 0>``.
    """

    overlaps: np.ndarray
    blocks: np.ndarray
    indices: np.ndarray
    layout: SpaceLayout
    schedule: ProtocolSchedule
    records: tuple
    q_a: float
    q_b: float

    def fidelities(self, amplitudes):
        c = np.atleast_2d(np.asarray(amplitudes, dtype=complex))
        f2 = np.einsum("sk,sl,si,sj,klij->s", c.conj(), c, c, c.conj(), self.overlaps)
        return np.sqrt(np.clip(f2.real, 0.0, 1.0))

    def final_state(self, spec):
        c = _coerce_spec(spec).amplitudes
        rho = np.zeros((self.layout.dim, self.layout.dim), dtype=complex)
        rho[np.ix_(self.indices, self.indices)] = np.einsum(
            "i,j,ijab->ab", c, c.conj(), self.blocks
        )
        return rho

    @property
    def peak_photons(self):
        return max(r.peak("n_photons") for r in self.records)

    @property
    def max_trace_error(self):
        return max(r.max_trace_error for r in self.records)

    @property
    def worst_eigenvalue(self):
        return min(r.worst_eigenvalue for r in self.records)


def transfer_map(params, rates, config=SimulationConfig(), schedule=None):
    """Propagate all nine input operators ``|in_i><in_j|`` through both stages."""
    schedule = schedule or build_schedule(params)
    stages = _prepare(params, rates, config)
    layout, idx = stages.layout, stages.indices
    pos = {int(v): p for p, v in enumerate(idx)}
    inputs = [pos[layout.index(q, "g")] for q in QUTRIT_LEVELS]
    outputs = [pos[layout.index("g", q)] for q in QUTRIT_LEVELS]
    n = len(idx)
    x0 = np.zeros((3, 3, n, n), dtype=complex)
    for i in range(3):
        for j in range(3):
            x0[i, j, inputs[i], inputs[j]] = 1.0
    rec1, rec2 = _run_stages(x0, stages, schedule, config)
    out = np.asarray(outputs)
    overlaps = rec2.final[:, :, out[:, None], out[None, :]].transpose(2, 3, 0, 1)
    q_a, q_b = quality_factors(params, rates)
    return TransferMap(
        overlaps=overlaps, blocks=rec2.final, indices=idx, layout=layout,
        schedule=schedule, records=(rec1, rec2), q_a=q_a, q_b=q_b,
    )
