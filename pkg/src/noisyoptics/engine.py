"""Trajectory ensembles over noisy optical circuits, plus a density-matrix oracle.

A trajectory draws one Gaussian sample per stochastic integral of every
noisy element, multiplies the resulting (sub-unitary) mode transfers, and
reads out the heralded dual-rail amplitudes with permanents.  Trajectories
are processed in fixed-size chunks; every draw is keyed on
``(seed, trajectory, element, draw)`` and chunk partial sums are merged in
chunk order, so results do not depend on the thread count.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from . import noise as nz
from .circuits import BS, DEP, LOSS, PS, Element, OpticalCircuit
from .fock import dual_rail_outputs, occupations, transition_amplitudes
from .rng import normals

CHUNK = 256
_DRAWS = {PS: 2, BS: 4, DEP: 3, LOSS: 1}


class HeraldFailure(RuntimeError):
    """No trajectory produced the herald pattern."""


class ResourceGuardError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Error probabilities; each must lie in ``[0, 0.5)``.

    ``p_dep`` depolarizes every source pair, ``p_element`` is the loss per
    physical mode of every phase shifter and beam splitter, ``p_detect`` the
    loss of the guide/detector at the end of every mode.
    """

    p_dep: float = 0.0
    p_element: float = 0.0
    p_detect: float = 0.0
    dep_enabled: bool = True
    element_enabled: bool = True
    detect_enabled: bool = True

    def __post_init__(self):
        for name in ("p_dep", "p_element", "p_detect"):
            p = getattr(self, name)
            if not 0 <= p < 0.5:
                raise nz.NoiseDomainError(f"{name}={p} outside [0, 0.5)")

    @classmethod
    def scenario(cls, kind: str, p: float) -> "NoiseModel":
        """``dep``, ``loss`` or ``both`` at a single probability ``p``."""
        if kind == "dep":
            return cls(p_dep=p)
        if kind == "loss":
            return cls(p_element=p, p_detect=p)
        if kind == "both":
            return cls(p_dep=p, p_element=p, p_detect=p)
        if kind == "none":
            return cls()
        raise ValueError(f"unknown noise scenario {kind!r}")

    @property
    def dep(self) -> float:
        return self.p_dep if self.dep_enabled else 0.0

    @property
    def element(self) -> float:
        return self.p_element if self.element_enabled else 0.0

    @property
    def detect(self) -> float:
        return self.p_detect if self.detect_enabled else 0.0


NOISELESS = NoiseModel()


@dataclass(frozen=True)
class RunConfig:
    n_samples: int = 500
    master_seed: int = 0
    normalize: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")


@dataclass(frozen=True)
class DensityMatrix:
    """Trajectory-averaged state on the decoded computational basis.

    ``herald_probability`` is the mean weight that passed the herald pattern,
    ``discarded_weight`` the part of it outside the dual-rail subspace, and
    ``normalization`` the factor ``rho`` was divided by (1 when unnormalized).
    """

    rho: np.ndarray
    herald_probability: float = 1.0
    discarded_weight: float = 0.0
    n_samples: int = 1
    seed: int = 0
    stderr: np.ndarray | None = None
    normalization: float = 1.0

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def to_dict(self) -> dict:
        return {
            "rho": [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in self.rho],
            "herald_probability": float(self.herald_probability),
            "discarded_weight": float(self.discarded_weight),
            "n_samples": int(self.n_samples),
            "seed": int(self.seed),
            "normalization": float(self.normalization),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityMatrix":
        rho = np.array([[complex(z["re"], z["im"]) for z in row] for row in d["rho"]])
        return cls(
            rho,
            herald_probability=d["herald_probability"],
            discarded_weight=d["discarded_weight"],
            n_samples=d["n_samples"],
            seed=d["seed"],
            normalization=d.get("normalization", 1.0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def pure_density(vec) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex)
    return DensityMatrix(np.outer(v, v.conj()))


# -- noisy circuit ------------------------------------------------------------


def build_noisy_circuit(circuit: OpticalCircuit, noise: NoiseModel) -> OpticalCircuit:
    """Source depolarization layers, lossy elements, and detection loss.

    Elements that already carry ``loss_p`` keep it.  With every probability
    zero the circuit comes back unchanged.
    """
    if noise.dep > 0 and not circuit.dep_pairs:
        raise ValueError("depolarization needs a qubit map (or dep_pairs) on the circuit")
    head = [Element(DEP, pair, loss_p=noise.dep) for pair in circuit.dep_pairs] if noise.dep > 0 else []
    body = []
    for el in circuit.elements:
        if el.kind in (PS, BS) and el.active and el.loss_p is None and noise.element > 0:
            el = replace(el, loss_p=noise.element)
        body.append(el)
    tail = (
        [Element(LOSS, (k,), loss_p=noise.detect) for k in range(circuit.mode_count)]
        if noise.detect > 0
        else []
    )
    return circuit.with_elements(head + body + tail)


def _is_noisy(el: Element) -> bool:
    return el.active and el.loss_p is not None and el.loss_p > 0


def sample_transfers(noisy: OpticalCircuit, seed: int, trajectories: np.ndarray, extra=()) -> np.ndarray:
    """Per-trajectory traced mode transfers, shape ``(B, m, m)``.

    ``extra`` is a sequence of ideal elements applied after the circuit (used
    for measurement basis changes).
    """
    traj = np.asarray(trajectories, dtype=np.uint64)
    b = traj.size
    m = noisy.mode_count
    total = np.broadcast_to(np.eye(m, dtype=complex), (b, m, m)).copy()
    for index, el in enumerate(tuple(noisy.elements) + tuple(extra)):
        idx = list(el.modes)
        if not _is_noisy(el) or index >= len(noisy.elements):
            if el.kind in (PS, BS):
                total[:, idx, :] = el.matrix() @ total[:, idx, :]
            continue
        eps = nz.epsilon_from_p(el.loss_p)
        z = normals(seed, traj, index, _DRAWS[el.kind])
        if el.kind == PS:
            i_c, i_s = nz.ics_from_normals(el.theta, z[:, 0], z[:, 1])
            g = nz.noisy_phase_shifter_traced(el.theta, eps, nz.StochasticDraw(i_c=i_c, i_s=i_s))
        elif el.kind == BS:
            i_c0, i_s0 = nz.ics_from_normals(el.theta / 2, z[:, 0], z[:, 1])
            i_c1, i_s1 = nz.ics_from_normals(el.theta / 2, z[:, 2], z[:, 3])
            draw = nz.StochasticDraw(i_c=i_c0, i_s=i_s0, i_c1=i_c1, i_s1=i_s1)
            g = nz.noisy_beam_splitter_traced(el.theta, el.phi, eps, eps, draw)
        elif el.kind == DEP:
            draw = nz.StochasticDraw(w_x=z[:, 0], w_y=z[:, 1], w_z=z[:, 2])
            g = nz.depolarization_layer(eps, draw)
        else:
            g = nz.loss_channel_traced(eps, nz.StochasticDraw(w=z[:, 0]))
        total[:, idx, :] = g @ total[:, idx, :]
    return total


def has_noise(noisy: OpticalCircuit) -> bool:
    return any(_is_noisy(el) for el in noisy.elements)


# -- readout --------------------------------------------------------------------


def herald_outputs(circuit: OpticalCircuit) -> list[tuple[int, ...]]:
    """Every occupation matching the herald pattern in the full photon-number sector."""
    fixed = {i: h for i, h in enumerate(circuit.herald) if h is not None}
    free = [i for i in range(circuit.mode_count) if i not in fixed]
    rest = circuit.photon_number - sum(fixed.values())
    if rest < 0:
        return []
    outs = []
    for occ in occupations(len(free), rest):
        full = [0] * circuit.mode_count
        for i, h in fixed.items():
            full[i] = h
        for i, c in zip(free, occ):
            full[i] = c
        outs.append(tuple(full))
    return outs


def qubit_outputs(circuit: OpticalCircuit) -> list[tuple[int, ...]]:
    fixed = {i: h for i, h in enumerate(circuit.herald) if h is not None}
    return dual_rail_outputs(circuit.qubit_map, fixed, circuit.mode_count)


def kept_weight(transfers: np.ndarray, circuit: OpticalCircuit, outputs=None) -> np.ndarray:
    """Squared norm that survives the herald, per trajectory."""
    if all(h is None for h in circuit.herald):
        # ||Gamma(M)|n>||^2 = <n|Gamma(M^dag M)|n>
        gram = np.conj(np.swapaxes(transfers, -1, -2)) @ transfers
        return np.real(transition_amplitudes(gram, circuit.input, [circuit.input])[..., 0])
    outs = herald_outputs(circuit) if outputs is None else outputs
    amps = transition_amplitudes(transfers, circuit.input, outs)
    return np.sum(np.abs(amps) ** 2, axis=-1)


def nominal_herald_probability(circuit: OpticalCircuit) -> float:
    """Herald success probability of the ideal circuit (1 without herald modes)."""
    if all(h is None for h in circuit.herald):
        return 1.0
    from .circuits import transfer

    return float(kept_weight(transfer(circuit)[None], circuit)[0])


# -- map-reduce -------------------------------------------------------------------


def chunk_ranges(n: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, n)) for s in range(0, n, chunk)]


def map_chunks(n: int, fn: Callable[[np.ndarray], tuple], threads: int = 1, chunk: int = CHUNK) -> list:
    """Evaluate ``fn`` on fixed trajectory chunks and merge by elementwise sum.

    The merge walks the partial results in chunk order, which fixes the
    floating-point summation tree.
    """
    ranges = chunk_ranges(n, chunk)
    work = [np.arange(a, b, dtype=np.uint64) for a, b in ranges]
    if threads > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, work))
    else:
        parts = [fn(w) for w in work]
    total = list(parts[0])
    for part in parts[1:]:
        total = [t + p for t, p in zip(total, part)]
    return total


def _moments(psi: np.ndarray):
    outer = psi[:, :, None] * np.conj(psi[:, None, :])
    return outer.sum(0), (outer.real**2).sum(0), (outer.imag**2).sum(0)


def finish(
    rho_sum,
    sq_re,
    sq_im,
    kept_sum,
    dual_sum,
    n,
    seed,
    normalization=1.0,
) -> DensityMatrix:
    rho = rho_sum / n
    var = np.maximum(sq_re / n - rho.real**2, 0.0) + np.maximum(sq_im / n - rho.imag**2, 0.0)
    stderr = np.sqrt(var / n)
    herald = float(kept_sum / n)
    return DensityMatrix(
        rho / normalization,
        herald_probability=herald,
        discarded_weight=max(herald - float(dual_sum / n), 0.0),
        n_samples=n,
        seed=seed,
        stderr=stderr / normalization,
        normalization=normalization,
    )


def run_trajectories(
    circuit: OpticalCircuit,
    noise: NoiseModel,
    cfg: RunConfig,
    track_herald: bool = True,
) -> DensityMatrix:
    """Average heralded, dual-rail-decoded trajectory projectors.

    With ``cfg.normalize`` the result is divided by the ideal circuit's herald
    probability, so loss still shows up as a trace below one.  A circuit
    without noisy elements is evaluated once.
    """
    if not circuit.qubit_map:
        raise ValueError("circuit needs a qubit map to decode")
    fixed = sum(h for h in circuit.herald if h is not None)
    if fixed + len(circuit.qubit_map) != circuit.photon_number:
        raise ValueError(
            f"herald pattern and qubit map account for {fixed + len(circuit.qubit_map)} photons, "
            f"input has {circuit.photon_number}"
        )
    noisy = build_noisy_circuit(circuit, noise)
    outs = qubit_outputs(circuit)
    h_outs = herald_outputs(circuit) if any(h is not None for h in circuit.herald) else None
    n = cfg.n_samples if has_noise(noisy) else 1

    def work(traj):
        transfers = sample_transfers(noisy, cfg.master_seed, traj)
        psi = transition_amplitudes(transfers, circuit.input, outs)
        rho, sq_re, sq_im = _moments(psi)
        dual = float(np.sum(np.abs(psi) ** 2))
        kept = float(np.sum(kept_weight(transfers, circuit, h_outs))) if track_herald else dual
        return rho, sq_re, sq_im, kept, dual

    rho, sq_re, sq_im, kept, dual = map_chunks(n, work, cfg.threads)
    if kept <= 0:
        raise HeraldFailure("heralding never succeeded")
    norm = nominal_herald_probability(circuit) if cfg.normalize else 1.0
    return finish(rho, sq_re, sq_im, kept, dual, n, cfg.master_seed, norm)


# -- oracle -------------------------------------------------------------------------

GH_NODES = 21
ORACLE_MAX_MODES = 4
ORACLE_MAX_PHOTONS = 2


def _gauss_hermite(n: int = GH_NODES):
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / math.sqrt(2 * math.pi)


class _FockSpace:
    """Dense fixed-photon-number Fock space for the oracle."""

    def __init__(self, modes: int, photons: int):
        self.modes = modes
        self.basis = occupations(modes, photons)
        self.index = {occ: i for i, occ in enumerate(self.basis)}
        self.counts = np.array(self.basis, dtype=int).reshape(len(self.basis), modes)

    def lift(self, u: np.ndarray) -> np.ndarray:
        """Fock-space operator of a mode transfer by expanding creation-operator products."""
        dim = len(self.basis)
        op = np.zeros((dim, dim), dtype=complex)
        for col, occ in enumerate(self.basis):
            poly = {(0,) * self.modes: 1.0 + 0j}
            for j, n_j in enumerate(occ):
                for _ in range(n_j):
                    nxt: dict = {}
                    for mono, c in poly.items():
                        for i in range(self.modes):
                            if u[i, j] == 0:
                                continue
                            key = mono[:i] + (mono[i] + 1,) + mono[i + 1 :]
                            nxt[key] = nxt.get(key, 0j) + c * u[i, j]
                    poly = nxt
            scale = 1.0 / math.sqrt(math.prod(math.factorial(k) for k in occ))
            for mono, c in poly.items():
                op[self.index[mono], col] += c * scale * math.sqrt(math.prod(math.factorial(k) for k in mono))
        return op

    def embed(self, block: np.ndarray, modes: Sequence[int]) -> np.ndarray:
        full = np.eye(self.modes, dtype=complex)
        idx = np.asarray(modes)
        full[np.ix_(idx, idx)] = block
        return full


def _damping_moments(eps, theta_eff, max_power: int, x, w) -> np.ndarray:
    """``E[cos^a(eps I_C) cos^b(eps I_S)]`` for ``a, b <= max_power``.

    The covariance comes from integrating the ramp directly, not from the
    closed form the trajectory sampler uses.
    """
    var_c = quad(lambda s: math.cos(theta_eff * s) ** 2, 0, 1)[0]
    var_s = quad(lambda s: math.sin(theta_eff * s) ** 2, 0, 1)[0]
    cov = quad(lambda s: math.cos(theta_eff * s) * math.sin(theta_eff * s), 0, 1)[0]
    l00 = math.sqrt(var_c)
    l10 = cov / l00
    l11 = math.sqrt(max(var_s - l10 * l10, 0.0))
    z0, z1 = np.meshgrid(x, x, indexing="ij")
    weights = np.outer(w, w)
    cc = np.cos(eps * l00 * z0)
    cs = np.cos(eps * (l10 * z0 + l11 * z1))
    out = np.zeros((max_power + 1, max_power + 1))
    for a in range(max_power + 1):
        for b in range(max_power + 1):
            out[a, b] = np.sum(weights * cc**a * cs**b)
    return out


def kraus_oracle(circuit: OpticalCircuit, noise: NoiseModel, normalize: bool = True) -> DensityMatrix:
    """Deterministic ensemble average by evolving the Fock-space density matrix.

    Each lossy element becomes a diagonal damping channel whose entries are
    Gauss-Hermite averages of products of the cosine factors; each
    depolarization layer becomes the average of its three random rotations,
    one quadrature per Wiener variable.
    """
    m, n = circuit.mode_count, circuit.photon_number
    if m > ORACLE_MAX_MODES or n > ORACLE_MAX_PHOTONS:
        raise ResourceGuardError(f"oracle limited to {ORACLE_MAX_MODES} modes / {ORACLE_MAX_PHOTONS} photons")
    space = _FockSpace(m, n)
    x, w = _gauss_hermite()
    dim = len(space.basis)

    def evolve(circ: OpticalCircuit) -> np.ndarray:
        rho = np.zeros((dim, dim), dtype=complex)
        i0 = space.index[tuple(circ.input)]
        rho[i0, i0] = 1.0
        for el in circ.elements:
            idx = list(el.modes)
            noisy = _is_noisy(el)
            if el.kind in (PS, BS) and not noisy:
                op = space.lift(space.embed(el.matrix(), idx))
                rho = op @ rho @ op.conj().T
            elif el.kind == PS:
                eps = nz.epsilon_from_p(el.loss_p)
                mom = _damping_moments(eps, el.theta, 2 * n, x, w)
                k = space.counts[:, idx[0]]
                power = k[:, None] + k[None, :]
                rho = rho * mom[power, power]
                op = space.lift(space.embed(el.matrix(), idx))
                rho = op @ rho @ op.conj().T
            elif el.kind == BS:
                eps = nz.epsilon_from_p(el.loss_p)
                mom = _damping_moments(eps, el.theta / 2, 2 * n, x, w)
                k0 = space.counts[:, idx[0]]
                k1 = space.counts[:, idx[1]]
                a = k0[:, None] + k0[None, :]  # power of d0
                b = k1[:, None] + k1[None, :]  # power of d1
                # d0 = cos(e IC0) cos(e IS1), d1 = cos(e IS0) cos(e IC1)
                rho = rho * mom[a, b] * mom[b, a]
                op = space.lift(space.embed(el.matrix(), idx))
                rho = op @ rho @ op.conj().T
            elif el.kind == LOSS:
                eps = nz.epsilon_from_p(el.loss_p)
                k = space.counts[:, idx[0]]
                power = k[:, None] + k[None, :]
                mom = np.array([np.sum(w * np.cos(eps * x) ** j) for j in range(2 * n + 1)])
                rho = rho * mom[power]
            elif el.kind == DEP:
                eps = nz.epsilon_from_p(el.loss_p)
                factors = (
                    lambda v: nz._diag(1.0, np.exp(1j * eps * v)),
                    lambda v: nz.rot_c(eps * v),
                    lambda v: nz.rot_b(eps * v),
                )
                for make in factors:
                    acc = np.zeros_like(rho)
                    for xi, wi in zip(x, w):
                        op = space.lift(space.embed(make(xi), idx))
                        acc += wi * (op @ rho @ op.conj().T)
                    rho = acc
        return rho

    def readout(rho: np.ndarray, circ: OpticalCircuit):
        kept_idx = [space.index[o] for o in herald_outputs(circ)]
        herald = float(np.real(sum(rho[i, i] for i in kept_idx)))
        q_idx = [space.index[o] for o in qubit_outputs(circ)]
        return rho[np.ix_(q_idx, q_idx)], herald

    noisy = build_noisy_circuit(circuit, noise)
    rho_q, herald = readout(evolve(noisy), circuit)
    norm = 1.0
    if normalize and any(h is not None for h in circuit.herald):
        _, norm = readout(evolve(circuit), circuit)
    return DensityMatrix(
        rho_q / norm,
        herald_probability=herald,
        discarded_weight=max(herald - float(np.real(np.trace(rho_q))), 0.0),
        n_samples=0,
        normalization=norm,
    )
