"""Ideal optical elements, circuits, and the triangular (Reck) mesh."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .fock import check_pairs

PS, BS, DEP, LOSS = "ps", "bs", "dep", "loss"
_ARITY = {PS: 1, BS: 2, DEP: 2, LOSS: 1}


def ps_matrix(theta: float) -> np.ndarray:
    """Phase shifter on one creation operator: ``[e^{i theta}]``."""
    return np.array([[np.exp(1j * theta)]])


def bs_matrix(theta: float, phi: float = 0.0) -> np.ndarray:
    """Beam splitter acting on ``(a0^dag, a1^dag)``.

    ``theta = pi/2`` is 50:50, ``theta = pi`` swaps the modes with a factor i.
    """
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    return np.array(
        [
            [c, 1j * np.exp(-1j * phi) * s],
            [1j * np.exp(1j * phi) * s, c],
        ]
    )


@dataclass(frozen=True)
class Element:
    """One placed element.  ``kind`` is one of ``ps``, ``bs``, ``dep``, ``loss``.

    ``loss_p`` is a per-element override of the loss probability (``None``
    means "use the noise model"); ``active=False`` keeps the element ideal
    even when noise is switched on.
    """

    kind: str
    modes: tuple[int, ...]
    theta: float = 0.0
    phi: float = 0.0
    loss_p: float | None = None
    active: bool = True

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown element kind {self.kind!r}")
        modes = tuple(int(m) for m in self.modes)
        if len(modes) != _ARITY[self.kind] or len(set(modes)) != len(modes):
            raise ValueError(f"{self.kind} needs {_ARITY[self.kind]} distinct modes, got {modes}")
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("element angles must be finite")
        if self.loss_p is not None and not 0 <= self.loss_p < 0.5:
            raise ValueError(f"loss probability {self.loss_p} outside [0, 0.5)")
        object.__setattr__(self, "modes", modes)

    def matrix(self) -> np.ndarray:
        if self.kind == PS:
            return ps_matrix(self.theta)
        if self.kind == BS:
            return bs_matrix(self.theta, self.phi)
        return np.eye(_ARITY[self.kind], dtype=complex)


def phase_shifter(mode: int, theta: float, **kw) -> Element:
    return Element(PS, (mode,), theta=theta, **kw)


def beam_splitter(m0: int, m1: int, theta: float, phi: float = 0.0, **kw) -> Element:
    return Element(BS, (m0, m1), theta=theta, phi=phi, **kw)


@dataclass(frozen=True)
class OpticalCircuit:
    """Elements in temporal order plus the input, herald and qubit layout.

    ``herald`` holds one entry per mode: an exact photon count to postselect,
    or ``None``.  ``dep_pairs`` lists the mode pairs that carry a source
    photon and receive depolarization; it defaults to ``qubit_map``.
    """

    mode_count: int
    elements: tuple[Element, ...] = ()
    input: tuple[int, ...] | None = None
    herald: tuple[int | None, ...] | None = None
    qubit_map: tuple[tuple[int, int], ...] = ()
    dep_pairs: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        m = self.mode_count
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            if any(not 0 <= k < m for k in el.modes):
                raise ValueError(f"element on modes {el.modes} outside a {m}-mode circuit")
        inp = tuple(self.input) if self.input is not None else (0,) * m
        her = tuple(self.herald) if self.herald is not None else (None,) * m
        if len(inp) != m or len(her) != m:
            raise ValueError("input and herald must have one entry per mode")
        object.__setattr__(self, "input", inp)
        object.__setattr__(self, "herald", her)
        pairs = tuple(check_pairs(self.qubit_map))
        object.__setattr__(self, "qubit_map", pairs)
        dep = pairs if self.dep_pairs is None else tuple(check_pairs(self.dep_pairs))
        object.__setattr__(self, "dep_pairs", dep)
        for a, b in pairs + dep:
            if not (0 <= a < m and 0 <= b < m):
                raise ValueError(f"pair ({a}, {b}) outside a {m}-mode circuit")
        for i, h in enumerate(her):
            if h is not None and any(i in p for p in pairs):
                raise ValueError(f"mode {i} is both heralded and part of a qubit")

    @property
    def photon_number(self) -> int:
        return sum(self.input)

    def with_elements(self, elements: Sequence[Element]) -> "OpticalCircuit":
        return replace(self, elements=tuple(elements))

    def counts(self) -> dict[str, int]:
        out = {k: 0 for k in _ARITY}
        for el in self.elements:
            out[el.kind] += 1
        return out


def embed(block: np.ndarray, modes: Sequence[int], mode_count: int) -> np.ndarray:
    full = np.eye(mode_count, dtype=complex)
    idx = np.asarray(modes)
    full[np.ix_(idx, idx)] = block
    return full


def transfer(circuit: OpticalCircuit) -> np.ndarray:
    """Ideal mode transfer of the whole circuit; noise elements count as identity."""
    total = np.eye(circuit.mode_count, dtype=complex)
    for el in circuit.elements:
        if el.kind in (PS, BS):
            idx = list(el.modes)
            total[idx, :] = el.matrix() @ total[idx, :]
    return total


def reck_decompose(unitary, atol: float = 1e-8) -> OpticalCircuit:
    """Triangular beam-splitter mesh realizing ``unitary`` exactly.

    Column operations null the target row by row from the bottom, left to
    right; each null costs a single beam splitter because both ``theta`` and
    ``phi`` are free.  The remaining diagonal becomes trailing phase shifters.
    """
    u = np.array(unitary, dtype=complex)
    m = u.shape[0]
    if u.shape != (m, m) or not np.allclose(u @ u.conj().T, np.eye(m), atol=atol):
        raise ValueError("reck_decompose needs a unitary matrix")
    elements = []
    for row in range(m - 1, 0, -1):
        for col in range(row):
            a, b = u[row, col], u[row, col + 1]
            if abs(a) == 0:
                theta, phi = 0.0, 0.0
            elif abs(b) == 0:
                theta, phi = math.pi, 0.0
            else:
                theta = 2 * math.atan2(abs(a), abs(b))
                phi = float(np.angle(1j * a / b))
            nulling = bs_matrix(theta, phi)
            u[:, [col, col + 1]] = u[:, [col, col + 1]] @ nulling
            # u_target = D @ (nulling_K^dag ... nulling_1^dag); bs(t, f)^dag = bs(t, f + pi)
            elements.append(beam_splitter(col, col + 1, theta, phi + math.pi))
    phases = [phase_shifter(k, float(np.angle(u[k, k]))) for k in range(m)]
    return OpticalCircuit(m, tuple(elements) + tuple(phases))


# -- JSON -------------------------------------------------------------------


def element_to_dict(el: Element) -> dict:
    d = {"kind": el.kind, "modes": list(el.modes), "theta": el.theta, "phi": el.phi}
    if el.loss_p is not None:
        d["loss_p"] = el.loss_p
    if not el.active:
        d["active"] = False
    return d


def circuit_to_dict(circuit: OpticalCircuit) -> dict:
    d = {
        "modes": circuit.mode_count,
        "input": list(circuit.input),
        "herald": list(circuit.herald),
        "qubit_map": [list(p) for p in circuit.qubit_map],
        "elements": [element_to_dict(el) for el in circuit.elements],
    }
    if circuit.dep_pairs != circuit.qubit_map:
        d["dep_pairs"] = [list(p) for p in circuit.dep_pairs]
    return d


def circuit_from_dict(d: dict) -> OpticalCircuit:
    elements = [
        Element(
            e["kind"],
            tuple(e["modes"]),
            theta=float(e.get("theta", 0.0)),
            phi=float(e.get("phi", 0.0)),
            loss_p=e.get("loss_p"),
            active=bool(e.get("active", True)),
        )
        for e in d.get("elements", [])
    ]
    return OpticalCircuit(
        int(d["modes"]),
        tuple(elements),
        input=tuple(d["input"]) if "input" in d else None,
        herald=tuple(d["herald"]) if "herald" in d else None,
        qubit_map=tuple(tuple(p) for p in d.get("qubit_map", [])),
        dep_pairs=tuple(tuple(p) for p in d["dep_pairs"]) if "dep_pairs" in d else None,
    )


def load_circuit(path) -> OpticalCircuit:
    with open(path) as fh:
        return circuit_from_dict(json.load(fh))


def dump_circuit(circuit: OpticalCircuit, path) -> None:
    with open(path, "w") as fh:
        json.dump(circuit_to_dict(circuit), fh, indent=2)
