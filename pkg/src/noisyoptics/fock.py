"""Fock-space states of indistinguishable photons and their evolution.

A passive (possibly lossy) optical network is described by the matrix ``M``
acting on creation operators, ``a_j^dag -> sum_i M[i, j] a_i^dag``.  Output
amplitudes are permanents of submatrices of ``M``; photon number is conserved
term by term and loss shows up only as a shrinking norm.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

Occupation = tuple[int, ...]

DEFAULT_PHOTON_CAP = 8
_PRUNE = 1e-15


class PhotonCapError(ValueError):
    """More photons than the configured resource guard allows."""


def permanent(matrix) -> complex:
    """Permanent of a square matrix (Ryser formula, Gray-code ordering).

    Each step of the Gray code toggles one column in or out of the running
    row sums, so the cost is O(2^n * n).
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    sign = 1 if n % 2 == 0 else -1
    in_set = [False] * n
    for k in range(1, 2**n):
        j = (k & -k).bit_length() - 1
        if in_set[j]:
            row_sums -= a[:, j]
        else:
            row_sums += a[:, j]
        in_set[j] = not in_set[j]
        sign = -sign
        total += sign * np.prod(row_sums)
    return complex(total)


def _gray_steps(n: int):
    """Yield (column, +1/-1, parity_sign) for the Gray-code walk over subsets."""
    in_set = [False] * n
    sign = 1 if n % 2 == 0 else -1
    for k in range(1, 2**n):
        j = (k & -k).bit_length() - 1
        step = -1 if in_set[j] else 1
        in_set[j] = not in_set[j]
        sign = -sign
        yield j, step, sign


def _expand(occ: Sequence[int]) -> list[int]:
    return [i for i, c in enumerate(occ) for _ in range(c)]


def _factorial_norm(occ: Sequence[int]) -> float:
    return math.prod(math.factorial(c) for c in occ)


def transition_amplitudes(matrices, input_occ: Sequence[int], outputs: Sequence[Sequence[int]]):
    """Amplitudes ``<out|Gamma(M)|in>`` for a batch of matrices and many outputs.

    ``matrices`` has shape ``(..., m, m)``; the result has shape
    ``(..., len(outputs))``.  All outputs share the Ryser walk over the input
    columns, which is what makes heralded multi-output evaluation cheap.
    """
    mats = np.asarray(matrices, dtype=complex)
    cols = _expand(input_occ)
    n = len(cols)
    batch_shape = mats.shape[:-2]
    outputs = [tuple(o) for o in outputs]
    if not outputs:
        return np.zeros(batch_shape + (0,), dtype=complex)
    for o in outputs:
        if sum(o) != n:
            raise ValueError(f"output {o} does not carry {n} photons")
    if n == 0:
        return np.ones(batch_shape + (len(outputs),), dtype=complex)
    rows = np.array([_expand(o) for o in outputs])  # (K, n)
    sub = mats[..., :, cols]  # (..., m, n)
    row_sums = np.zeros(batch_shape + (mats.shape[-2],), dtype=complex)
    total = np.zeros(batch_shape + (len(outputs),), dtype=complex)
    for j, step, sign in _gray_steps(n):
        if step > 0:
            row_sums += sub[..., :, j]
        else:
            row_sums -= sub[..., :, j]
        terms = np.prod(row_sums[..., rows], axis=-1)
        if sign > 0:
            total += terms
        else:
            total -= terms
    norms = np.array([math.sqrt(_factorial_norm(o) * _factorial_norm(input_occ)) for o in outputs])
    return total / norms


def occupations(modes: int, photons: int) -> list[Occupation]:
    """All occupation tuples of ``photons`` photons in ``modes`` modes (lexicographic)."""
    if modes == 0:
        return [()] if photons == 0 else []
    out = []
    for bars in itertools.combinations(range(photons + modes - 1), modes - 1):
        prev = -1
        occ = []
        for b in bars:
            occ.append(b - prev - 1)
            prev = b
        occ.append(photons + modes - 1 - prev - 1)
        out.append(tuple(occ))
    return sorted(out, reverse=True)


@dataclass(frozen=True)
class FockVector:
    """Sparse superposition of occupation vectors with a common photon number."""

    mode_count: int
    terms: Mapping[Occupation, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        photons = None
        for occ, amp in self.terms.items():
            occ = tuple(int(c) for c in occ)
            if len(occ) != self.mode_count:
                raise ValueError(f"occupation {occ} does not match {self.mode_count} modes")
            if any(c < 0 for c in occ):
                raise ValueError(f"negative occupation {occ}")
            if photons is None:
                photons = sum(occ)
            elif sum(occ) != photons:
                raise ValueError("all terms must carry the same photon number")
            clean[occ] = complex(amp)
        object.__setattr__(self, "terms", clean)

    @classmethod
    def basis(cls, occ: Sequence[int]) -> "FockVector":
        return cls(len(occ), {tuple(occ): 1.0})

    @property
    def photon_number(self) -> int | None:
        for occ in self.terms:
            return sum(occ)
        return None

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def amplitude(self, occ: Sequence[int]) -> complex:
        return self.terms.get(tuple(occ), 0j)

    def scaled(self, factor: complex) -> "FockVector":
        return FockVector(self.mode_count, {k: v * factor for k, v in self.terms.items()})

    def __add__(self, other: "FockVector") -> "FockVector":
        if other.mode_count != self.mode_count:
            raise ValueError("mode count mismatch")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0j) + v
        return FockVector(self.mode_count, terms)

    def inner(self, other: "FockVector") -> complex:
        return sum(np.conj(a) * other.terms.get(k, 0j) for k, a in self.terms.items())


def evolve(state: FockVector, matrix, photon_cap: int = DEFAULT_PHOTON_CAP) -> FockVector:
    """Send ``state`` through the mode transfer ``matrix``."""
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (state.mode_count, state.mode_count):
        raise ValueError(f"transfer of shape {m.shape} does not act on {state.mode_count} modes")
    n = state.photon_number
    if n is None:
        return FockVector(state.mode_count)
    if n > photon_cap:
        raise PhotonCapError(f"{n} photons exceeds the cap of {photon_cap}")
    off = np.abs(m - np.eye(state.mode_count)) > 0
    active = np.flatnonzero(off.any(axis=0) | off.any(axis=1))
    if len(active) < state.mode_count:
        return _evolve_local(state, m, active)
    outputs = occupations(state.mode_count, n)
    total = np.zeros(len(outputs), dtype=complex)
    for occ, amp in state.terms.items():
        total += amp * transition_amplitudes(m, occ, outputs)
    return FockVector(
        state.mode_count,
        {o: a for o, a in zip(outputs, total) if abs(a) > _PRUNE},
    )


def _evolve_local(state: FockVector, m: np.ndarray, active: np.ndarray) -> FockVector:
    """Evolve when ``m`` is the identity outside the ``active`` modes."""
    block = m[np.ix_(active, active)]
    cache: dict = {}
    terms: dict = {}
    for occ, amp in state.terms.items():
        sub = tuple(occ[i] for i in active)
        if sub not in cache:
            outs = occupations(len(active), sum(sub))
            cache[sub] = (outs, transition_amplitudes(block, sub, outs))
        outs, amps = cache[sub]
        base = list(occ)
        for o, a in zip(outs, amps):
            if abs(a) <= _PRUNE:
                continue
            for i, c in zip(active, o):
                base[i] = c
            key = tuple(base)
            terms[key] = terms.get(key, 0j) + amp * a
    return FockVector(state.mode_count, {k: v for k, v in terms.items() if abs(v) > _PRUNE})


def post_select(state: FockVector, pattern: Sequence[int | None]) -> tuple[FockVector, float]:
    """Project on the exact counts in ``pattern`` (``None`` = unconstrained).

    Constrained modes are removed from the returned state, which is left
    unnormalized; the second value is its squared norm.
    """
    if len(pattern) != state.mode_count:
        raise ValueError(f"pattern of length {len(pattern)} for {state.mode_count} modes")
    free = [i for i, p in enumerate(pattern) if p is None]
    kept = {}
    for occ, amp in state.terms.items():
        if all(p is None or occ[i] == p for i, p in enumerate(pattern)):
            kept[tuple(occ[i] for i in free)] = amp
    out = FockVector(len(free), kept)
    return out, out.norm_squared()


def check_pairs(qubit_map: Iterable[Sequence[int]]) -> list[tuple[int, int]]:
    pairs = [tuple(int(x) for x in p) for p in qubit_map]
    seen = set()
    for p in pairs:
        if len(p) != 2:
            raise ValueError(f"qubit pair {p} must name two modes")
        for mode in p:
            if mode in seen:
                raise ValueError(f"mode {mode} appears in more than one qubit pair")
            seen.add(mode)
    return pairs


def dual_rail_outputs(pairs: Sequence[tuple[int, int]], fixed: Mapping[int, int], mode_count: int):
    """Occupations encoding every computational basis state, big-endian in qubit order.

    Modes outside the pairs take their count from ``fixed`` (0 if absent).
    """
    outs = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        occ = [fixed.get(i, 0) for i in range(mode_count)]
        for (r0, r1), b in zip(pairs, bits):
            occ[r0], occ[r1] = (0, 1) if b else (1, 0)
        outs.append(tuple(occ))
    return outs


def dual_rail_decode(state: FockVector, qubit_map: Sequence[Sequence[int]]) -> tuple[np.ndarray, float]:
    """Map onto the ``2**Q`` computational basis; also return the discarded weight.

    Logical 0 is one photon in the first mode of a pair, logical 1 one photon
    in the second.  Modes outside every pair must be empty for a term to be
    kept.  Qubit 0 is the most significant bit.
    """
    pairs = check_pairs(qubit_map)
    q = len(pairs)
    vec = np.zeros(2**q, dtype=complex)
    in_pairs = {m for p in pairs for m in p}
    discarded = 0.0
    for occ, amp in state.terms.items():
        index = 0
        ok = all(occ[i] == 0 for i in range(state.mode_count) if i not in in_pairs)
        for r0, r1 in pairs:
            if not ok:
                break
            if (occ[r0], occ[r1]) == (1, 0):
                index = 2 * index
            elif (occ[r0], occ[r1]) == (0, 1):
                index = 2 * index + 1
            else:
                ok = False
        if ok:
            vec[index] += amp
        else:
            discarded += abs(amp) ** 2
    return vec, discarded
