"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment. Unknown keys, unparsable
values and out-of-range values are rejected with a :class:`ConfigError`
naming the key, and nothing is applied from a document that fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .estimator import TIMINGS, StateTransferSimulator
from .experiments import SweepSpec
from .lindblad import METHODS
from .model import CONSTRAINT_MODES, InitialStateSpec
from .protocol import HAMILTONIAN_KINDS


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _lifetime(v):
    return v > 0 or math.isinf(v)


def _opt(default, kind, help, check=None, section="device"):
    return field(default=default,
                 metadata={"kind": kind, "help": help, "check": check, "section": section})




@dataclass(frozen=True)
class RunConfig:
    # device, nu = omega / 2pi
    nu_eg_GHz: float = _opt(3.5, "float", "g<->e transition frequency of both qutrits", _positive)
    nu_fg_GHz: float = _opt(8.8, "float", "g<->f transition frequency of both qutrits", _positive)
    delta_GHz: float = _opt(1.0, "float", "qutrit g<->e detuning from resonator a", _positive)
    Delta_GHz: float = _opt(0.8, "float", "qutrit g<->f detuning from resonator b", _positive)
    Omega_MHz: float = _opt(100.0, "float", "Rabi frequency of the e<->f pulse on qutrit 2",
                            _positive)
    D: float = _opt(10.0, "float", "detuning ratio delta/g", lambda v: v > 1)
    constraint_mode: str = _opt("equal_rates", "choice",
                                "resonator-b coupling rule: " + " | ".join(CONSTRAINT_MODES),
                                CONSTRAINT_MODES)
    crosstalk: bool = _opt(True, "bool", "include the direct resonator-resonator coupling")
    crosstalk_ratio: float = _opt(0.1, "float", "crosstalk strength g_ab in units of g",
                                  _non_negative)
    c: float = _opt(1.0, "float", "g_2 / g_1", _positive)
    d: float = _opt(1.0, "float", "mu_2 / mu_1", _positive)
    timing: str = _opt("nominal", "choice", "swap duration from design couplings (nominal) or "
                       "from c, d (device)", TIMINGS)
    # decoherence, microseconds ("inf" disables a channel)
    kappa_inv_us: float = _opt(0.1, "float", "photon lifetime of both resonators", _lifetime,
                               "decoherence")
    T_relax_us: float = _opt(5.0, "float", "lifetime of each qutrit relaxation path", _lifetime,
                             "decoherence")
    T_phi_us: float = _opt(2.0, "float", "dephasing time of levels e and f", _lifetime,
                           "decoherence")
    dissipation: bool = _opt(True, "bool", "master equation (true) or closed dynamics (false)",
                             section="decoherence")
    # input state of qutrit 1, complex literals such as 0.5+0.1j are accepted
    alpha: complex = _opt(complex(1 / math.sqrt(3)), "complex", "amplitude on |g>", None, "state")
    beta: complex = _opt(complex(1 / math.sqrt(3)), "complex", "amplitude on |e>", None, "state")
    gamma: complex = _opt(complex(1 / math.sqrt(3)), "complex", "amplitude on |f>", None, "state")
    # numerics
    hamiltonian: str = _opt("full", "choice", "swap-stage model: full | effective",
                            HAMILTONIAN_KINDS, "numerics")
    n_photons: int = _opt(3, "int", "Fock levels kept per resonator", lambda v: v >= 2,
                          "numerics")
    restrict_sector: bool = _opt(True, "bool", "integrate only the invariant one-excitation "
                                 "sector", section="numerics")
    dt_ps: float = _opt(1.0, "float", "integrator step", _positive, "numerics")
    method: str = _opt("rk4_fixed", "choice", " | ".join(METHODS), METHODS, "numerics")
    local_tolerance: float = _opt(1e-10, "float", "step-doubling error target", _positive,
                                  "numerics")
    sample_stride: int = _opt(500, "int", "steps between recorded diagnostics", _positive,
                              "numerics")
    # sweeps
    D_min: float = _opt(4.0, "float", "smallest D of the detuning sweep", lambda v: v > 1,
                        "sweep")
    D_max: float = _opt(20.0, "float", "largest D of the detuning sweep", lambda v: v > 1,
                        "sweep")
    D_points: int = _opt(17, "int", "number of D values", _positive, "sweep")
    kappa_inv_list_us: tuple = _opt((0.1, 1.0, 10.0), "floats",
                                    "photon lifetimes of the detuning sweep", _lifetime, "sweep")
    gamma_points: int = _opt(21, "int", "gamma grid size of the state sweep", _positive, "sweep")
    theta_points: int = _opt(41, "int", "theta grid size of the state sweep", _positive, "sweep")
    sampling: str = _opt("grid", "choice", "state sweep sampling: grid | random",
                         ("grid", "random"), "sweep")
    n_random: int = _opt(500, "int", "number of random states", _positive, "sweep")
    seed: int = _opt(0, "int", "seed of the random state sampler", _non_negative, "sweep")
    c_min: float = _opt(0.95, "float", "coupling sweep range for c", _positive, "sweep")
    c_max: float = _opt(1.05, "float", "", _positive, "sweep")
    c_points: int = _opt(11, "int", "", _positive, "sweep")
    d_min: float = _opt(0.95, "float", "coupling sweep range for d", _positive, "sweep")
    d_max: float = _opt(1.05, "float", "", _positive, "sweep")
    d_points: int = _opt(11, "int", "", _positive, "sweep")
    n_photons_list: tuple = _opt((2, 3, 4), "ints", "truncations of the convergence study",
                                 lambda v: v >= 2, "sweep")
    dt_list_ps: tuple = _opt((2.0, 1.0, 0.5), "floats", "steps of the convergence study",
                             _positive, "sweep")
    workers: int = _opt(0, "int", "worker processes, 0 = all cores", _non_negative, "sweep")
    # output
    output_csv: str = _opt("", "str", "CSV destination, empty for stdout", None, "output")
    output_svg: str = _opt("", "str", "SVG destination, empty for none", None, "output")

    def __post_init__(self):
        if self.D_min > self.D_max:
            raise ConfigError("D_min", "must not exceed D_max")
        if self.c_min > self.c_max:
            raise ConfigError("c_min", "must not exceed c_max")
        if self.d_min > self.d_max:
            raise ConfigError("d_min", "must not exceed d_max")
        if self.nu_eg_GHz <= self.delta_GHz:
            raise ConfigError("delta_GHz", "resonator a frequency nu_eg - delta must be positive")
        if self.nu_fg_GHz <= self.Delta_GHz:
            raise ConfigError("Delta_GHz", "resonator b frequency nu_fg - Delta must be positive")
        try:
            self.initial_state()
        except ValueError as exc:
            raise ConfigError("alpha", str(exc)) from None

    @property
    def nu_a_GHz(self):
        return self.nu_eg_GHz - self.delta_GHz

    @property
    def nu_b_GHz(self):
        return self.nu_fg_GHz - self.Delta_GHz

    def initial_state(self):
        return InitialStateSpec(self.alpha, self.beta, self.gamma)

    def estimator_params(self):
        keys = set(StateTransferSimulator().get_params())
        params = {k: getattr(self, k) for k in keys if hasattr(self, k)}
        params["dt_ns"] = self.dt_ps * 1e-3
        for k in ("kappa_inv_us", "T_relax_us", "T_phi_us"):
            params[k] = None if math.isinf(params[k]) else params[k]
        return params

    def estimator(self):
        return StateTransferSimulator(**self.estimator_params())

    def sweep_spec(self, kind):
        base = self.estimator_params()
        base.pop("D")
        if kind == "detuning":
            base.pop("kappa_inv_us")
        if kind == "coupling_inhomogeneity":
            base.pop("c"), base.pop("d")
        if kind != "detuning":
            base["D"] = self.D
        kappas = tuple(None if math.isinf(k) else k for k in self.kappa_inv_list_us)
        return SweepSpec(
            kind=kind, base=base,
            D_values=tuple(float(v) for v in np.linspace(self.D_min, self.D_max, self.D_points)),
            kappa_inv_us=kappas,
            state=tuple(self.initial_state().amplitudes),
            gamma_points=self.gamma_points, theta_points=self.theta_points,
            sampling=self.sampling, n_random=self.n_random, seed=self.seed,
            c_values=tuple(float(v) for v in np.linspace(self.c_min, self.c_max, self.c_points)),
            d_values=tuple(float(v) for v in np.linspace(self.d_min, self.d_max, self.d_points)),
            n_photons_values=tuple(self.n_photons_list),
            dt_values_ns=tuple(v * 1e-3 for v in self.dt_list_ps),
            workers=self.workers or None,
        )

    def as_items(self):
        for f in fields(self):
            yield f.name, format_value(getattr(self, f.name))


_OPTIONS = {f.name: f for f in fields(RunConfig)}


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, complex):
        return repr(value.real) if value.imag == 0 else repr(value).strip("()")
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    return str(value)


def _parse_scalar(key, kind, text):
    try:
        if kind == "float":
            v = float(text)
            if math.isnan(v):
                raise ValueError
            return v
        if kind == "int":
            return int(text)
        if kind == "complex":
            v = complex(text.replace(" ", ""))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError
            return v
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind}") from None
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(key, f"cannot parse {text!r} as bool")
    return text


def parse_value(key, text):
    if key not in _OPTIONS:
        raise ConfigError(key, "unknown key")
    meta = _OPTIONS[key].metadata
    kind, check = meta["kind"], meta["check"]
    text = text.strip()
    if kind in ("floats", "ints"):
        parts = [p for p in text.split(",") if p.strip()]
        if not parts:
            raise ConfigError(key, "empty list")
        values = tuple(_parse_scalar(key, kind[:-1], p.strip()) for p in parts)
        if check is not None and not all(check(v) for v in values):
            raise ConfigError(key, f"value out of range in {text!r}")
        return values
    if kind == "choice":
        if text not in check:
            raise ConfigError(key, f"{text!r} is not one of {', '.join(check)}")
        return text
    value = _parse_scalar(key, kind, text)
    if check is not None and not check(value):
        raise ConfigError(key, f"value {text!r} out of range")
    return value


def parse_assignments(text):
    """``{key: raw_value}`` from ``key = value`` lines."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(key, f"line {lineno}: duplicate key")
        out[key] = value
    return out


def parse_config(text, overrides=None):
    """Validated :class:`RunConfig`; ``overrides`` (raw strings) win over ``text``."""
    raw = parse_assignments(text)
    raw.update(overrides or {})
    values = {key: parse_value(key, value) for key, value in raw.items()}
    try:
        return replace(RunConfig(), **values)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from None


def load_config(path=None, overrides=None):
    text = ""
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(None, f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)


_SECTION_TITLES = {
    "device": "device (frequencies as nu = omega / 2pi)",
    "decoherence": "decoherence (lifetimes in microseconds, inf disables)",
    "state": "input state of qutrit 1 (normalized; complex literals allowed)",
    "numerics": "numerics",
    "sweep": "sweeps",
    "output": "output",
}


def render_default_config():
    """Annotated default configuration text."""
    lines = ["# qutrit state-transfer run configuration", "# key = value; '#' starts a comment"]
    section = None
    defaults = RunConfig()
    for f in fields(RunConfig):
        meta = f.metadata
        if meta["section"] != section:
            section = meta["section"]
            lines += ["", f"# --- {_SECTION_TITLES[section]}"]
        value = format_value(getattr(defaults, f.name))
        entry = f"{f.name} = {value}"
        if meta["help"]:
            entry = f"{entry:<34}# {meta['help']}"
        lines.append(entry)
    return "\n".join(lines) + "\n"
