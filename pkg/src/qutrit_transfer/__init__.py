"""Simulation of two-stage qutrit-to-qutrit state transfer through two lossy resonators."""

__version__ = "0.1.0"

from .estimator import UNEQUAL_STATE, UNIFORM_STATE, StateTransferSimulator, check_states, states_from_angles
from .experiments import SweepResult, SweepSpec, run_sweep
from .lindblad import IntegrationError, IntegratorConfig, evolve, evolve_pure
from .model import DecoherenceRates, DeviceParams, InitialStateSpec
from .operators import SpaceLayout
from .protocol import SimulationConfig, build_schedule, run_transfer, transfer_map

__all__ = [
    "DecoherenceRates", "DeviceParams", "InitialStateSpec", "IntegrationError",
    "IntegratorConfig", "SimulationConfig", "SpaceLayout", "StateTransferSimulator",
    "SweepResult", "SweepSpec", "UNEQUAL_STATE", "UNIFORM_STATE", "build_schedule",
    "check_states", "evolve", "evolve_pure", "run_sweep", "run_transfer", "states_from_angles",
    "transfer_map",
]
