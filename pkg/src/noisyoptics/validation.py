"""Trajectory averages checked against the deterministic Fock-space oracle."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuits import OpticalCircuit, beam_splitter, phase_shifter
from .engine import NoiseModel, RunConfig, kraus_oracle, run_trajectories


def _ideal(el):
    return replace(el, active=False)


def lossy_phase_shifter_case() -> OpticalCircuit:
    """Interferometer whose middle phase shifter is the only lossy element."""
    els = (
        _ideal(beam_splitter(0, 1, np.pi / 2, 0.0)),
        phase_shifter(1, 0.7),
        _ideal(beam_splitter(0, 1, np.pi / 2, 0.0)),
    )
    return OpticalCircuit(2, els, input=(1, 0), qubit_map=((0, 1),))


def lossy_beam_splitter_case() -> OpticalCircuit:
    els = (
        _ideal(beam_splitter(0, 1, np.pi / 2, 0.0)),
        beam_splitter(0, 1, 1.1, 0.3),
    )
    return OpticalCircuit(2, els, input=(1, 0), qubit_map=((0, 1),))


def depolarization_case() -> OpticalCircuit:
    els = (_ideal(beam_splitter(0, 1, 0.8, 0.4)),)
    return OpticalCircuit(2, els, input=(1, 0), qubit_map=((0, 1),))


CASES = {
    "lossy-phase-shifter": (lossy_phase_shifter_case, "element"),
    "lossy-beam-splitter": (lossy_beam_splitter_case, "element"),
    "depolarization": (depolarization_case, "dep"),
}


@dataclass(frozen=True)
class OracleCheck:
    name: str
    p: float
    max_deviation: float
    max_sigmas: float
    passed: bool


def check_case(name: str, p: float, cfg: RunConfig, sigmas: float = 3.0, absolute: float = 0.01) -> OracleCheck:
    build, channel = CASES[name]
    circuit = build()
    noise = NoiseModel(p_dep=p) if channel == "dep" else NoiseModel(p_element=p)
    traj = run_trajectories(circuit, noise, cfg)
    exact = kraus_oracle(circuit, noise)
    dev = np.abs(traj.rho - exact.rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(dev > 1e-14, dev / traj.stderr, 0.0)
    worst = float(dev.max())
    zmax = float(np.nanmax(z))
    return OracleCheck(name, p, worst, zmax, bool(zmax <= sigmas and worst <= absolute))


def validate(
    probabilities=(0.01, 0.05),
    n_samples: int = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> list[OracleCheck]:
    cfg = RunConfig(n_samples=n_samples, master_seed=seed, threads=threads)
    return [check_case(name, p, cfg) for name in CASES for p in probabilities]
