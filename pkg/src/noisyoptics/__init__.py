"""Noisy dual-rail linear-optics simulation with stochastic noisy gates."""

from .circuits import Element, OpticalCircuit, beam_splitter, phase_shifter, reck_decompose, transfer
from .engine import DensityMatrix, NoiseModel, RunConfig, kraus_oracle, run_trajectories
from .fock import FockVector, evolve, permanent, post_select
from .metrics import fidelity_from_hellinger, hellinger

__all__ = [
    "DensityMatrix",
    "Element",
    "FockVector",
    "NoiseModel",
    "OpticalCircuit",
    "RunConfig",
    "beam_splitter",
    "evolve",
    "fidelity_from_hellinger",
    "hellinger",
    "kraus_oracle",
    "permanent",
    "phase_shifter",
    "post_select",
    "reck_decompose",
    "run_trajectories",
    "transfer",
]
__version__ = "0.1.0"
