"""Dual-rail gate blocks and a small qubit-to-optics transpiler."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import (
    Element,
    OpticalCircuit,
    beam_splitter,
    phase_shifter,
    reck_decompose,
    transfer,
)

GATES = ("x", "h", "cz", "cx")

_S6 = math.sqrt(6.0)
# Knill's two-photon-ancilla CZ core on (rail1 of A, rail1 of B, ancilla, ancilla);
# heralding one photon in each ancilla leaves CZ with probability 2/27.
KNILL_CZ = np.array(
    [
        [-1 / 3, -math.sqrt(2) / 3, math.sqrt(2) / 3, 2 / 3],
        [math.sqrt(2) / 3, -1 / 3, -2 / 3, math.sqrt(2) / 3],
        [
            -math.sqrt(3 + _S6) / 3,
            math.sqrt(3 - _S6) / 3,
            -math.sqrt((3 + _S6) / 2) / 3,
            math.sqrt(1 / 6 - 1 / (3 * _S6)),
        ],
        [
            -math.sqrt(3 - _S6) / 3,
            -math.sqrt(3 + _S6) / 3,
            -math.sqrt(1 / 6 - 1 / (3 * _S6)),
            -math.sqrt((3 + _S6) / 2) / 3,
        ],
    ]
)
KNILL_SUCCESS = 2 / 27


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in GATES:
            raise ValueError(f"unsupported gate {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        want = 2 if kind in ("cz", "cx") else 1
        if len(targets) != want or len(set(targets)) != want:
            raise ValueError(f"{kind} needs {want} distinct targets, got {targets}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", targets)


@dataclass(frozen=True)
class QubitCircuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        gates = tuple(g if isinstance(g, Gate) else Gate(g[0], tuple(g[1])) for g in self.gates)
        for g in gates:
            if any(not 0 <= t < self.n_qubits for t in g.targets):
                raise ValueError(f"gate {g} targets a qubit outside 0..{self.n_qubits - 1}")
        object.__setattr__(self, "gates", gates)

    def to_dict(self) -> dict:
        return {"qubits": self.n_qubits, "gates": [{"kind": g.kind, "targets": list(g.targets)} for g in self.gates]}

    @classmethod
    def from_dict(cls, d: dict) -> "QubitCircuit":
        return cls(int(d["qubits"]), tuple(Gate(g["kind"], tuple(g["targets"])) for g in d["gates"]))

    @classmethod
    def from_json(cls, text: str) -> "QubitCircuit":
        return cls.from_dict(json.loads(text))


def x_gate_circuit(logical_input: int = 0) -> OpticalCircuit:
    """Two modes, one beam splitter at theta = pi."""
    inp = (0, 1) if logical_input else (1, 0)
    return OpticalCircuit(2, (beam_splitter(0, 1, math.pi, 0.0),), input=inp, qubit_map=((0, 1),))


def x_gate_block(r0: int, r1: int) -> list[Element]:
    return [beam_splitter(r0, r1, math.pi, 0.0)]


def h_gate_block(r0: int, r1: int) -> list[Element]:
    """Hadamard on the pair: 50:50 splitter, then a pi phase on the second rail.

    ``diag(1, -1) @ bs(pi/2, pi/2)`` is exactly the real Hadamard matrix.
    """
    return [beam_splitter(r0, r1, math.pi / 2, math.pi / 2), phase_shifter(r1, math.pi)]


@dataclass(frozen=True)
class HeraldedBlock:
    elements: tuple[Element, ...]
    herald: dict[int, int]
    ancilla_input: dict[int, int]
    ancilla_pairs: tuple[tuple[int, int], ...]
    success_probability: float


def heralded_cz_block(pair_a: Sequence[int], pair_b: Sequence[int], ancillas: Sequence[int]) -> HeraldedBlock:
    """Heralded CZ on two dual-rail qubits using four ancilla modes.

    The ancillas form two pairs ``(h0, h1)`` and ``(h2, h3)``, each fed with
    one photon in its first mode; success is one photon in ``h0`` and ``h2``
    and none in ``h1``/``h3``.  The core interferometer couples the second
    rails of both qubits with ``h0`` and ``h2`` and is laid out as a Reck
    mesh.
    """
    h0, h1, h2, h3 = ancillas
    local = [pair_a[1], pair_b[1], h0, h2]
    mesh = reck_decompose(KNILL_CZ)
    elements = []
    for el in mesh.elements:
        elements.append(Element(el.kind, tuple(local[k] for k in el.modes), theta=el.theta, phi=el.phi))
    return HeraldedBlock(
        tuple(elements),
        herald={h0: 1, h1: 0, h2: 1, h3: 0},
        ancilla_input={h0: 1, h1: 0, h2: 1, h3: 0},
        ancilla_pairs=((h0, h1), (h2, h3)),
        success_probability=KNILL_SUCCESS,
    )


def transpile(qc: QubitCircuit, reck: bool = True, inputs: Sequence[int] | None = None) -> OpticalCircuit:
    """Lay out ``qc`` on dual-rail pairs ``(2q, 2q + 1)`` with CZ ancillas appended.

    CX is lowered to H-CZ-H on the target.  With ``reck`` the whole linear
    network is re-expressed as one triangular mesh; heralds and inputs are
    unaffected because every detection happens at the end.
    """
    q = qc.n_qubits
    bits = list(inputs) if inputs is not None else [0] * q
    elements: list[Element] = []
    mode_count = 2 * q
    herald: dict[int, int] = {}
    anc_input: dict[int, int] = {}
    anc_pairs: list[tuple[int, int]] = []
    pair = lambda k: (2 * k, 2 * k + 1)  # noqa: E731
    for g in qc.gates:
        if g.kind == "x":
            elements += x_gate_block(*pair(g.targets[0]))
        elif g.kind == "h":
            elements += h_gate_block(*pair(g.targets[0]))
        else:
            a, b = g.targets
            if g.kind == "cx":
                elements += h_gate_block(*pair(b))
            block = heralded_cz_block(pair(a), pair(b), range(mode_count, mode_count + 4))
            mode_count += 4
            elements += block.elements
            herald.update(block.herald)
            anc_input.update(block.ancilla_input)
            anc_pairs += block.ancilla_pairs
            if g.kind == "cx":
                elements += h_gate_block(*pair(b))
    inp = [0] * mode_count
    for k, bit in enumerate(bits):
        inp[2 * k + int(bit)] = 1
    for mode, count in anc_input.items():
        inp[mode] = count
    qubit_map = tuple(pair(k) for k in range(q))
    circuit = OpticalCircuit(
        mode_count,
        tuple(elements),
        input=tuple(inp),
        herald=tuple(herald.get(i) for i in range(mode_count)),
        qubit_map=qubit_map,
        dep_pairs=qubit_map + tuple(anc_pairs),
    )
    if reck and elements:
        circuit = circuit.with_elements(reck_decompose(transfer(circuit)).elements)
    return circuit


BELL = QubitCircuit(2, (Gate("h", (0,)), Gate("cx", (0, 1))))


def bell_circuit(reck: bool = True) -> OpticalCircuit:
    return transpile(BELL, reck=reck)


def bell_target() -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / math.sqrt(2)
    return np.outer(v, v.conj())


def bell_experiment(p: float, cfg, scenarios=("dep", "loss", "both"), reck: bool = True) -> dict:
    """Bell-state preparation under each noise scenario at probability ``p``.

    Returns ``{scenario: (DensityMatrix, hellinger_to_ideal)}``.
    """
    from .engine import NoiseModel, pure_density, run_trajectories
    from .metrics import hellinger

    circuit = bell_circuit(reck)
    ideal = pure_density(np.array([1, 0, 0, 1]) / math.sqrt(2))
    out = {}
    for kind in scenarios:
        dm = run_trajectories(circuit, NoiseModel.scenario(kind, p), cfg)
        out[kind] = (dm, hellinger(dm, ideal))
    return out
