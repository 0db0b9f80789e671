"""Parameter sweeps over detuning ratio, input state, coupling inhomogeneity and numerics."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import clone

from .estimator import UNIFORM_STATE, StateTransferSimulator, check_states, states_from_angles
from .protocol import run_transfer

SWEEP_KINDS = ("detuning", "state_grid", "coupling_inhomogeneity", "convergence")
WORKERS_ENV = "QTRANSFER_WORKERS"

COLUMNS = {
    "detuning": ("kappa_inv_us", "D", "g_MHz", "mu_MHz", "t1_ns", "t2_ns", "fidelity",
                 "peak_photons", "min_eigenvalue", "max_trace_error"),
    "state_grid": ("gamma", "theta", "alpha", "beta", "fidelity"),
    "coupling_inhomogeneity": ("c", "d", "fidelity", "peak_photons", "min_eigenvalue",
                               "max_trace_error"),
    "convergence": ("study", "n_photons", "dt_ps", "restricted", "fidelity", "deviation",
                    "min_eigenvalue", "max_trace_error"),
}


def _tuple(values):
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definitions; ``base`` holds :class:`StateTransferSimulator` parameters."""

    kind: str = "detuning"
    base: dict = field(default_factory=dict)
    D_values: tuple = tuple(float(D) for D in range(4, 21))
    kappa_inv_us: tuple = (0.1, 1.0, 10.0)
    state: tuple = tuple(UNIFORM_STATE)
    gamma_points: int = 21
    theta_points: int = 41
    sampling: str = "grid"
    n_random: int = 500
    seed: int = 0
    c_values: tuple = _tuple(np.linspace(0.95, 1.05, 11))
    d_values: tuple = _tuple(np.linspace(0.95, 1.05, 11))
    n_photons_values: tuple = (2, 3, 4)
    dt_values_ns: tuple = (2e-3, 1e-3, 5e-4)
    workers: int | None = None

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}; expected one of {SWEEP_KINDS}")
        for name in ("D_values", "kappa_inv_us", "c_values", "d_values",
                     "n_photons_values", "dt_values_ns"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must not be empty")
        if min(self.D_values) <= 1:
            raise ValueError("D values must exceed 1")
        if self.gamma_points < 1 or self.theta_points < 1 or self.n_random < 1:
            raise ValueError("state grid sizes must be positive")
        if self.sampling not in ("grid", "random"):
            raise ValueError("sampling must be 'grid' or 'random'")
        unknown = set(self.base) - set(StateTransferSimulator().get_params())
        if unknown:
            raise ValueError(f"unknown simulator parameters {sorted(unknown)}")
        check_states([self.state])

    def estimator(self, **overrides):
        return StateTransferSimulator(**{**self.base, **overrides})


@dataclass
class SweepResult:
    kind: str
    columns: tuple
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def column(self, name):
        return self.rows[:, self.columns.index(name)]

    @property
    def summary(self):
        f = self.column("fidelity")
        return {"min": float(f.min()), "mean": float(f.mean()), "max": float(f.max())}


def resolve_workers(workers=None):
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    if workers:
        return max(1, int(workers))
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0)) or 1
    return os.cpu_count() or 1


def run_tasks(fn, tasks, workers=None):
    """Evaluate ``fn`` over ``tasks``; output order always matches input order."""
    n = resolve_workers(workers)
    if n <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    out = [None] * len(tasks)
    with ProcessPoolExecutor(max_workers=min(n, len(tasks))) as pool:
        futures = {pool.submit(fn, t): i for i, t in enumerate(tasks)}
        for fut in as_completed(futures):
            out[futures[fut]] = fut.result()
    return out


def _diagnostics(est):
    return [est.peak_photons_, est.min_eigenvalue_, est.max_trace_error_]


def _detuning_point(task):
    est, state = task
    est.fit()
    p = est.params_
    kappa = math.inf if est.kappa_inv_us is None else est.kappa_inv_us
    return [kappa, est.D, p.g_1, p.mu_1, est.schedule_.t1, est.schedule_.t2,
            float(est.predict([state])[0]), *_diagnostics(est)]


def _coupling_point(task):
    est, state = task
    est.fit()
    return [est.c, est.d, float(est.predict([state])[0]), *_diagnostics(est)]


def _metadata(spec, **extra):
    meta = {"sweep": spec.kind, "spec": asdict(spec),
            "simulator": spec.estimator().get_params()}
    meta.update(extra)
    return meta


def sweep_detuning(spec):
    """Fidelity versus ``D = delta / g`` for every configured resonator lifetime."""
    state = np.asarray(spec.state)
    tasks = [(spec.estimator(D=D, kappa_inv_us=k), state)
             for k in spec.kappa_inv_us for D in spec.D_values]
    rows = run_tasks(_detuning_point, tasks, spec.workers)
    return SweepResult("detuning", COLUMNS["detuning"], np.array(rows, dtype=float),
                       _metadata(spec))


def state_samples(spec):
    if spec.sampling == "grid":
        gammas = np.linspace(0.0, 1.0, spec.gamma_points)
        thetas = np.linspace(0.0, 2 * np.pi, spec.theta_points)
        g, t = np.meshgrid(gammas, thetas, indexing="ij")
    else:
        rng = np.random.default_rng(spec.seed)
        g = rng.uniform(0.0, 1.0, spec.n_random)
        t = rng.uniform(0.0, 2 * np.pi, spec.n_random)
    return g.ravel(), t.ravel()


def sweep_state_grid(spec, estimator=None):
    """Fidelity over the ``(gamma, theta)`` family of input states from one fit."""
    est = estimator if estimator is not None else spec.estimator().fit()
    gammas, thetas = state_samples(spec)
    X = states_from_angles(gammas, thetas)
    f = est.predict(X)
    rows = np.column_stack([gammas, thetas, X[:, 0].real, X[:, 1].real, f])
    meta = _metadata(
        spec, sampling=spec.sampling, grid_density_is_a_choice=True,
        peak_photons=est.peak_photons_, min_eigenvalue=est.min_eigenvalue_,
        max_trace_error=est.max_trace_error_,
    )
    return SweepResult("state_grid", COLUMNS["state_grid"], rows, meta)


def sweep_coupling(spec):
    """Fidelity over ``g_2 = c g_1`` and ``mu_2 = d mu_1``."""
    state = np.asarray(spec.state)
    tasks = [(spec.estimator(c=c, d=d), state) for c in spec.c_values for d in spec.d_values]
    rows = run_tasks(_coupling_point, tasks, spec.workers)
    return SweepResult("coupling_inhomogeneity", COLUMNS["coupling_inhomogeneity"],
                       np.array(rows, dtype=float), _metadata(spec))


def _convergence_point(task):
    study, est, state = task
    result = run_transfer(tuple(state), est.device_params(), est.decoherence_rates(),
                          est.simulation_config(), est.schedule())
    return [study, est.n_photons, est.dt_ns * 1e3, float(est.restrict_sector),
            result.fidelity, 0.0, result.worst_eigenvalue, result.max_trace_error]


def convergence_study(spec):
    """Truncation levels in the full space, then step sizes in the invariant sector.

    ``deviation`` is measured against the finest setting of each study.
    """
    base = spec.estimator()
    state = np.asarray(spec.state)
    tasks = [(0, clone(base).set_params(n_photons=n, restrict_sector=False), state)
             for n in spec.n_photons_values]
    tasks += [(1, clone(base).set_params(dt_ns=dt), state) for dt in spec.dt_values_ns]
    rows = np.array(run_tasks(_convergence_point, tasks, spec.workers), dtype=float)
    for study, key in ((0, 1), (1, 2)):
        sel = rows[:, 0] == study
        finest = np.argmax(rows[sel, key]) if study == 0 else np.argmin(rows[sel, key])
        ref = rows[sel][finest, 4]
        rows[sel, 5] = np.abs(rows[sel, 4] - ref)
    return SweepResult("convergence", COLUMNS["convergence"], rows, _metadata(spec))


def run_sweep(spec):
    if spec.kind == "detuning":
        return sweep_detuning(spec)
    if spec.kind == "state_grid":
        return sweep_state_grid(spec)
    if spec.kind == "coupling_inhomogeneity":
        return sweep_coupling(spec)
    return convergence_study(spec)
