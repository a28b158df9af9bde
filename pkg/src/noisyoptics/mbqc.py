"""Three-qubit linear cluster and the adaptive measurements that enact X."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .circuits import Element, OpticalCircuit, phase_shifter, transfer
from .engine import (
    DensityMatrix,
    HeraldFailure,
    NoiseModel,
    RunConfig,
    build_noisy_circuit,
    finish,
    has_noise,
    herald_outputs,
    kept_weight,
    map_chunks,
    nominal_herald_probability,
    sample_transfers,
)
from .fock import FockVector, evolve, transition_amplitudes
from .gbqc import Gate, QubitCircuit, h_gate_block, transpile
from .rng import uniforms

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

CLUSTER_X = QubitCircuit(3, (Gate("h", (1,)), Gate("h", (2,)), Gate("cz", (0, 1)), Gate("cz", (1, 2))))


def rotation_angle(alpha: float, s1: int) -> float:
    """Adapted measurement angle for qubit 2: ``(-1)^(1 + s1) * alpha``."""
    return (-1) ** (1 + int(s1)) * alpha


@dataclass(frozen=True)
class MeasurementStep:
    """Single-qubit measurement in the X basis (``angle=None``) or the XY plane.

    ``sign_rule`` maps the outcomes recorded so far to the actual angle.
    """

    qubit: int
    angle: float | None = None
    sign_rule: Callable[[Sequence[int], float], float] | None = None

    def resolve(self, outcomes: Sequence[int]) -> float | None:
        if self.angle is None:
            return None
        if self.sign_rule is None:
            return self.angle
        return self.sign_rule(outcomes, self.angle)


@dataclass(frozen=True)
class BranchRecord:
    outcomes: tuple[int, ...]
    probability: float
    conditional_state: FockVector
    output: np.ndarray | None = None


def cluster_x_circuit(reck: bool = True) -> OpticalCircuit:
    """``CZ23 CZ12 |0>|+>|+>`` on 6 system modes plus 8 herald modes."""
    return transpile(CLUSTER_X, reck=reck)


def measurement_elements(pair: Sequence[int], angle: float | None) -> list[Element]:
    """Basis change that turns the requested measurement into rail detection.

    X basis: Hadamard.  XY plane at ``angle``: phase ``-angle`` on the second
    rail, then Hadamard.  Elements are marked inactive so they stay ideal.
    """
    r0, r1 = pair
    els = [] if angle is None else [phase_shifter(r1, -angle)]
    els += h_gate_block(r0, r1)
    return [replace(el, active=False) for el in els]


def _project_pair(state: FockVector, pair: Sequence[int], bit: int) -> FockVector:
    want = (0, 1) if bit else (1, 0)
    return FockVector(
        state.mode_count,
        {o: a for o, a in state.terms.items() if (o[pair[0]], o[pair[1]]) == want},
    )


def measure_dual_rail(
    state: FockVector,
    pair: Sequence[int],
    angle: float | None = None,
    consumed: set | None = None,
) -> list[tuple[int, float, FockVector]]:
    """Both outcomes of measuring the qubit on ``pair``, with Born weights.

    The collapsed states are left unnormalized and keep every mode; the
    measured pair ends up in the rail pattern that was detected.
    """
    key = tuple(pair)
    if consumed is not None:
        if key in consumed:
            raise ValueError(f"qubit on modes {key} was already measured")
        consumed.add(key)
    rot = transfer(OpticalCircuit(state.mode_count, tuple(measurement_elements(pair, angle))))
    rotated = evolve(state, rot)
    out = []
    for bit in (0, 1):
        branch = _project_pair(rotated, pair, bit)
        out.append((bit, branch.norm_squared(), branch))
    return out


def correction(s1: int, s2: int) -> np.ndarray:
    """Undo the ``X^s2 Z^s1`` byproduct on the output qubit."""
    return np.linalg.matrix_power(PAULI_Z, s1) @ np.linalg.matrix_power(PAULI_X, s2)


def enumerate_branches(alpha: float = math.pi, reck: bool = True) -> list[BranchRecord]:
    """Noiseless run through every outcome pair, via explicit Fock-state evolution."""
    circuit = cluster_x_circuit(reck)
    state = evolve(FockVector.basis(circuit.input), transfer(circuit))
    for mode, h in enumerate(circuit.herald):
        if h is not None:
            state = FockVector(state.mode_count, {o: a for o, a in state.terms.items() if o[mode] == h})
    q1, q2, q3 = circuit.qubit_map
    records = []
    for s1, _, after1 in measure_dual_rail(state, q1):
        for s2, prob, after2 in measure_dual_rail(after1, q2, rotation_angle(alpha, s1)):
            records.append(BranchRecord((s1, s2), prob, after2, correction(s1, s2) @ _pair_amplitudes(after2, q3)))
    return records


def _pair_amplitudes(state: FockVector, pair: Sequence[int]) -> np.ndarray:
    """Logical amplitudes of one pair when every other mode is already fixed."""
    vec = np.zeros(2, dtype=complex)
    for occ, amp in state.terms.items():
        rails = (occ[pair[0]], occ[pair[1]])
        if rails == (1, 0):
            vec[0] += amp
        elif rails == (0, 1):
            vec[1] += amp
    return vec


def run_mbqc_x(
    noise: NoiseModel,
    cfg: RunConfig,
    alpha: float = math.pi,
    branches: str = "sample",
    reck: bool = True,
) -> DensityMatrix:
    """Corrected output-qubit state averaged over trajectories.

    ``branches="sample"`` draws one Born-weighted outcome pair per trajectory
    and reweights it by the trajectory's total branch weight;
    ``"enumerate"`` accumulates all four branches.  Both estimate the same
    average.
    """
    if branches not in ("sample", "enumerate"):
        raise ValueError(f"unknown branch mode {branches!r}")
    circuit = cluster_x_circuit(reck)
    q1, q2, q3 = circuit.qubit_map
    variants = []
    for s1 in (0, 1):
        meas = measurement_elements(q1, None) + measurement_elements(q2, rotation_angle(alpha, s1))
        base = circuit.with_elements(tuple(circuit.elements) + tuple(meas))
        variants.append(build_noisy_circuit(base, noise))
    herald = {i: h for i, h in enumerate(circuit.herald) if h is not None}
    outs = {}
    for s1 in (0, 1):
        for s2 in (0, 1):
            for b3 in (0, 1):
                occ = [herald.get(i, 0) for i in range(circuit.mode_count)]
                for (r0, r1), bit in zip((q1, q2, q3), (s1, s2, b3)):
                    occ[r0], occ[r1] = (0, 1) if bit else (1, 0)
                outs[(s1, s2, b3)] = tuple(occ)
    h_outs = herald_outputs(circuit)
    branch_ops = {(s1, s2): correction(s1, s2) for s1 in (0, 1) for s2 in (0, 1)}
    noisy = any(has_noise(v) for v in variants)
    n = cfg.n_samples if noisy else 1
    sample_element = len(variants[0].elements)

    def work(traj):
        psis = {}
        kept = None
        for s1, variant in enumerate(variants):
            transfers = sample_transfers(variant, cfg.master_seed, traj)
            keys = [(s1, s2, b3) for s2 in (0, 1) for b3 in (0, 1)]
            amps = transition_amplitudes(transfers, circuit.input, [outs[k] for k in keys])
            for s2 in (0, 1):
                raw = amps[:, [keys.index((s1, s2, 0)), keys.index((s1, s2, 1))]]
                psis[(s1, s2)] = raw @ branch_ops[(s1, s2)].T
            if kept is None:
                kept = kept_weight(transfers, circuit, h_outs)
        order = sorted(psis)
        stack = np.stack([psis[k] for k in order], axis=1)  # (B, 4, 2)
        probs = np.sum(np.abs(stack) ** 2, axis=-1)  # (B, 4)
        total = probs.sum(axis=1)
        if branches == "enumerate":
            outer = np.einsum("bki,bkj->bij", stack, np.conj(stack))
        else:
            u, _ = uniforms(cfg.master_seed, traj, sample_element)
            cdf = np.cumsum(probs, axis=1)
            pick = np.minimum(np.sum(cdf < (u * total)[:, None], axis=1), 3)
            chosen = stack[np.arange(len(traj)), pick]
            p_chosen = probs[np.arange(len(traj)), pick]
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(p_chosen > 0, total / p_chosen, 0.0)
            outer = scale[:, None, None] * chosen[:, :, None] * np.conj(chosen[:, None, :])
        return (
            outer.sum(0),
            (outer.real**2).sum(0),
            (outer.imag**2).sum(0),
            float(kept.sum()),
            float(total.sum()),
        )

    rho, sq_re, sq_im, kept, dual = map_chunks(n, work, cfg.threads)
    if kept <= 0:
        raise HeraldFailure("heralding never succeeded")
    norm = nominal_herald_probability(circuit) if cfg.normalize else 1.0
    return finish(rho, sq_re, sq_im, kept, dual, n, cfg.master_seed, norm)
