"""Master-equation and Schrodinger propagation with explicit Runge-Kutta steps.

States handed to :func:`evolve` are either a single density matrix ``(n, n)``
or a block operator ``(k, k, n, n)`` whose entry ``[i, j]`` is the image of
``|i><j|`` under the dynamics. The block form propagates a whole linear map
at once; its Hermitian "Choi" matrix ``X.transpose(0, 2, 1, 3).reshape(k*n, k*n)``
is what the positivity diagnostic inspects.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .operators import HarmonicHamiltonian, as_operator

METHODS = ("rk4_fixed", "rk4_step_doubling")
SUPEROPERATOR_MAX_DIM = 16
TRACE_ABORT = 1e-6


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control; ``dt`` in ns (1 ps by default)."""

    dt: float = 1e-3
    method: str = "rk4_fixed"
    local_tolerance: float = 1e-10
    max_steps: int = 50_000_000
    sample_stride: int = 500

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.local_tolerance > 0:
            raise ValueError("local_tolerance must be positive")
        if self.max_steps < 1 or self.sample_stride < 1:
            raise ValueError("max_steps and sample_stride must be >= 1")


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    trace_error: np.ndarray
    min_eigenvalue: np.ndarray
    purity: np.ndarray
    observables: dict = field(default_factory=dict)
    final: np.ndarray = None
    n_steps: int = 0

    @property
    def max_trace_error(self):
        return float(np.max(self.trace_error))

    @property
    def worst_eigenvalue(self):
        return float(np.min(self.min_eigenvalue))

    def peak(self, name):
        return float(np.max(self.observables[name]))


def _as_hamiltonian(h):
    if isinstance(h, HarmonicHamiltonian) or callable(h):
        return h
    return HarmonicHamiltonian(h)


def lindblad_rhs(t, rho, h_builder, channels):
    """``d rho / dt`` for ``H = h_builder(t)`` and ``(op, rate)`` channels."""
    rho = as_operator(rho)
    h = _as_hamiltonian(h_builder)(t)
    if h.shape != rho.shape:
        raise ValueError(f"dimension mismatch: H {h.shape} vs rho {rho.shape}")
    out = -1j * (h @ rho - rho @ h)
    for ch in channels:
        op, rate = ch[0], ch[1]
        if op.shape != rho.shape:
            raise ValueError(f"dimension mismatch: channel {op.shape} vs rho {rho.shape}")
        opd = op.conj().T
        opdop = opd @ op
        out += rate * (op @ rho @ opd - 0.5 * (opdop @ rho + rho @ opdop))
    return out


class _Generator:
    """Right-hand side on block states of shape ``(m, n, n)``."""

    def __init__(self, hamiltonian, channels):
        self.h = _as_hamiltonian(hamiltonian)
        n = self.h.dim if isinstance(self.h, HarmonicHamiltonian) else self.h(0.0).shape[0]
        self.n = n
        self.channels = [(as_operator(ch[0]), float(ch[1])) for ch in channels]
        for op, _ in self.channels:
            if op.shape != (n, n):
                raise ValueError(f"channel shape {op.shape} does not match dimension {n}")
        k = np.zeros((n, n), dtype=complex)
        for op, rate in self.channels:
            k += rate * (op.conj().T @ op)
        self.damping = 0.5j * k
        if isinstance(self.h, HarmonicHamiltonian) and n <= SUPEROPERATOR_MAX_DIM:
            self._build_superoperator()
            self._rhs = self._super_rhs
        else:
            # all jump terms as one sparse superoperator acting on vec(rho)
            jumps = sparse.csr_matrix((n * n, n * n), dtype=complex)
            for op, rate in self.channels:
                sop = sparse.csr_matrix(op)
                jumps = jumps + rate * sparse.kron(sop, sop.conj(), format="csr")
            self._jumps = jumps
            if isinstance(self.h, HarmonicHamiltonian):
                self._build_sparse_hamiltonian()
                self._rhs = self._sparse_rhs
            else:
                self._rhs = self._matrix_rhs

    def _commutator_super(self, a, b):
        # row-major vec: vec(A X + X B) = (A (x) I + I (x) B^T) vec(X)
        eye = np.eye(self.n)
        return np.kron(a, eye) + np.kron(eye, b.T)

    def _build_superoperator(self):
        h = self.h
        he = h.static - self.damping
        s0 = -1j * self._commutator_super(he, -he.conj().T)
        for op, rate in self.channels:
            s0 += rate * np.kron(op, op.conj())
        freqs, mats = [], []
        for w, x in h.terms:
            xd = x.conj().T
            freqs += [w, -w]
            mats += [-1j * self._commutator_super(x, -x), -1j * self._commutator_super(xd, -xd)]
        self._s0_t = s0.T.copy()
        self._freqs = np.array(freqs)
        self._mats_t = np.array([m.T for m in mats]).reshape(len(mats), *s0.shape)

    def _super_rhs(self, t, x):
        lt = self._s0_t
        if len(self._freqs):
            lt = lt + np.tensordot(np.exp(1j * self._freqs * t), self._mats_t, axes=1)
        m, n, _ = x.shape
        return (x.reshape(m, n * n) @ lt).reshape(m, n, n)

    def _matrix_rhs(self, t, x):
        he = self.h(t) - self.damping
        out = -1j * (he @ x - x @ he.conj().T)
        m, n, _ = x.shape
        if self._jumps.nnz:
            out += (self._jumps @ x.reshape(m, n * n).T).T.reshape(m, n, n)
        return out

    def _build_sparse_hamiltonian(self):
        # one CSR pattern shared by every term; only its data changes with t
        h = self.h
        mats = [h.static - self.damping]
        freqs = [0.0]
        for w, x in h.terms:
            mats += [x, x.conj().T]
            freqs += [w, -w]
        pattern = sparse.csr_matrix(sum(np.abs(m) for m in mats) + 0j)
        pattern.sort_indices()
        rows = np.repeat(np.arange(self.n), np.diff(pattern.indptr))
        self._coeffs = np.array([m[rows, pattern.indices] for m in mats])
        self._hfreqs = np.array(freqs)
        self._hcsr = pattern

    def _apply_h(self, t, x):
        self._hcsr.data = np.exp(1j * self._hfreqs * t) @ self._coeffs
        m, n, _ = x.shape
        if m == 1:
            return (self._hcsr @ x[0])[None]
        y = x.transpose(1, 0, 2).reshape(n, m * n)
        return (self._hcsr @ y).reshape(n, m, n).transpose(1, 0, 2)

    def _sparse_rhs(self, t, x):
        hx = self._apply_h(t, x)
        xh = self._apply_h(t, x.conj().transpose(0, 2, 1)).conj().transpose(0, 2, 1)
        out = -1j * (hx - xh)
        m, n, _ = x.shape
        if self._jumps.nnz:
            out += (self._jumps @ x.reshape(m, n * n).T).T.reshape(m, n, n)
        return out

    def __call__(self, t, x):
        return self._rhs(t, x)

    def max_frequency(self):
        if isinstance(self.h, HarmonicHamiltonian):
            return max(self.h.max_frequency, self.h.energy_scale)
        return None


def _rk4(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_dt(omega_max, config):
    # the adaptive method caps its own steps; dt is only its first guess
    if omega_max is None or omega_max == 0 or config.method != "rk4_fixed":
        return
    nu_max = omega_max / (2 * math.pi)
    limit = 1.0 / (20.0 * nu_max)
    if config.dt > limit * (1 + 1e-12):
        warnings.warn(
            f"dt={config.dt:g} ns exceeds 1/(20 nu_max)={limit:g} ns; proceeding",
            RuntimeWarning,
            stacklevel=3,
        )


def _integrate(f, y, t0, duration, config, sample, fix=None, h_max=None):
    """Drive ``y' = f(t, y)`` over ``[t0, t0 + duration]``; returns (y, steps)."""
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    stride = config.sample_stride
    sample(t0, y)
    if config.method == "rk4_fixed":
        n = max(1, math.ceil(duration / config.dt - 1e-9))
        if n > config.max_steps:
            raise IntegrationError(f"{n} steps exceed max_steps={config.max_steps}")
        h = duration / n
        for i in range(1, n + 1):
            y = _rk4(f, t0 + (i - 1) * h, y, h)
            if fix is not None:
                y = fix(y)
            if i % stride == 0 or i == n:
                sample(t0 + i * h, y)
        return y, n

    # step doubling: compare one full step against two half steps
    tol = config.local_tolerance
    h_cap = h_max if h_max else math.inf
    h = min(config.dt, h_cap)
    t, t_end = t0, t0 + duration
    accepted = attempts = 0
    while t < t_end - 1e-12 * duration:
        attempts += 1
        if attempts > config.max_steps:
            raise IntegrationError(f"step attempts exceed max_steps={config.max_steps}")
        h = min(h, t_end - t)
        full = _rk4(f, t, y, h)
        half = _rk4(f, t + 0.5 * h, _rk4(f, t, y, 0.5 * h), 0.5 * h)
        err = float(np.max(np.abs(half - full))) / 15.0
        if err <= tol:
            t += h
            y = half + (half - full) / 15.0
            if fix is not None:
                y = fix(y)
            accepted += 1
            if accepted % stride == 0 or t >= t_end - 1e-12 * duration:
                sample(t, y)
        factor = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        h = min(h * factor, h_cap)
    return y, accepted


def _blocks(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 2:
        return rho[None, None], True
    if rho.ndim == 4 and rho.shape[0] == rho.shape[1] and rho.shape[2] == rho.shape[3]:
        return rho.copy(), False
    raise ValueError(f"state must be (n, n) or (k, k, n, n), got shape {rho.shape}")


def _symmetrize(x):
    return 0.5 * (x + x.transpose(1, 0, 3, 2).conj())


def evolve(rho0, h_builder, channels, duration, config=IntegratorConfig(), *, t0=0.0,
           observables=None):
    """Integrate the master equation from ``t0`` for ``duration`` ns.

    ``observables`` maps names to operators recorded at every sample; for
    block states the recorded value is the largest expectation over input
    states. Raises :class:`IntegrationError` if the trace drifts by more
    than 1e-6.
    """
    x0, single = _blocks(rho0)
    k, _, n, _ = x0.shape
    gen = _Generator(h_builder, channels)
    if gen.n != n:
        raise ValueError(f"dimension mismatch: generator {gen.n} vs state {n}")
    _check_dt(gen.max_frequency(), config)
    h_max = None
    if gen.max_frequency():
        h_max = 2 * math.pi / (20.0 * gen.max_frequency())
    observables = dict(observables or {})
    trace0 = np.einsum("ijnn->ij", x0)
    rec = {"times": [], "trace_error": [], "min_eigenvalue": [], "purity": []}
    obs = {name: [] for name in observables}

    def sample(t, flat):
        x = flat.reshape(k, k, n, n)
        tr = np.einsum("ijnn->ij", x)
        drift = float(np.max(np.abs(tr - trace0)))
        if drift > TRACE_ABORT:
            raise IntegrationError(f"trace drift {drift:.3g} at t={t:.6g} ns")
        choi = x.transpose(0, 2, 1, 3).reshape(k * n, k * n)
        lam = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))[0]
        rec["times"].append(t)
        rec["trace_error"].append(drift)
        rec["min_eigenvalue"].append(lam)
        rec["purity"].append(
            float(np.real(np.einsum("ij,ji->", x[0, 0], x[0, 0]))) if single else math.nan
        )
        for name, op in observables.items():
            m = np.einsum("ab,ijba->ij", op, x)
            if single:
                obs[name].append(float(m[0, 0].real))
            else:
                obs[name].append(float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1]))

    def f(t, flat):
        return gen(t, flat.reshape(k * k, n, n)).reshape(k, k, n, n)

    y, steps = _integrate(f, x0, t0, duration, config, sample, fix=_symmetrize, h_max=h_max)
    record = TrajectoryRecord(
        times=np.array(rec["times"]),
        trace_error=np.array(rec["trace_error"]),
        min_eigenvalue=np.array(rec["min_eigenvalue"]),
        purity=np.array(rec["purity"]),
        observables={name: np.array(v) for name, v in obs.items()},
        final=y[0, 0] if single else y,
        n_steps=steps,
    )
    return record


def evolve_pure(psi0, h_builder, duration, config=IntegratorConfig(), *, t0=0.0):
    """Schrodinger propagation; the final norm must stay within 1e-6 of one."""
    psi = np.asarray(psi0, dtype=complex).ravel()
    norm0 = np.linalg.norm(psi)
    if abs(norm0 - 1.0) > 1e-10:
        raise ValueError(f"initial ket is not normalized (norm={norm0:.15g})")
    h = _as_hamiltonian(h_builder)
    omega = None
    if isinstance(h, HarmonicHamiltonian):
        omega = max(h.max_frequency, h.energy_scale)
        _check_dt(omega, config)

    def f(t, y):
        return -1j * (h(t) @ y)

    def sample(t, y):
        drift = abs(np.linalg.norm(y) - 1.0)
        if drift > TRACE_ABORT:
            raise IntegrationError(f"norm drift {drift:.3g} at t={t:.6g} ns")

    h_max = 2 * math.pi / (20.0 * omega) if omega else None
    y, _ = _integrate(f, psi, t0, duration, config, sample, h_max=h_max)
    return y
