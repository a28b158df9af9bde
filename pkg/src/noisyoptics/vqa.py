"""Variational MAX-2-CUT on a dual-rail photonic ansatz."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .circuits import OpticalCircuit, beam_splitter
from .engine import DensityMatrix, NoiseModel, RunConfig, run_trajectories
from .rng import derive_seed


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.n_vertices - 1}")
        object.__setattr__(self, "edges", edges)


def square_graph() -> Graph:
    return Graph(4, ((0, 1), (1, 2), (2, 3), (3, 0)))


@dataclass(frozen=True)
class CostOperator:
    """Diagonal of ``sum_<ij> Z_i Z_j``; qubit 0 is the most significant bit."""

    diagonal: np.ndarray

    @property
    def minimum(self) -> float:
        return float(self.diagonal.min())


MAX_VERTICES = 10


def maxcut_cost(graph: Graph) -> CostOperator:
    n = graph.n_vertices
    if n > MAX_VERTICES:
        raise ValueError(f"at most {MAX_VERTICES} vertices are supported")
    idx = np.arange(2**n)
    z = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    diag = np.zeros(2**n)
    for i, j in graph.edges:
        diag += z[:, i] * z[:, j]
    return CostOperator(diag)


@dataclass(frozen=True)
class AnsatzLayout:
    """Rotation / ring-coupler / rotation layout on ``n_qubits`` dual-rail pairs.

    The coupler layer mixes the second rail of qubit ``q`` with the first rail
    of qubit ``q + 1`` (cyclically) at 50:50; it is fixed, not trained.
    """

    n_qubits: int = 4
    entangle: bool = True
    coupler_theta: float = math.pi / 2

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits


DEFAULT_LAYOUT = AnsatzLayout(entangle=False)


def ansatz_circuit(params: Sequence[float], layout: AnsatzLayout = DEFAULT_LAYOUT) -> OpticalCircuit:
    params = [float(x) for x in params]
    q = layout.n_qubits
    if len(params) != layout.n_params:
        raise ValueError(f"ansatz takes {layout.n_params} parameters, got {len(params)}")
    m = 2 * q
    els = [beam_splitter(2 * k, 2 * k + 1, params[k]) for k in range(q)]
    if layout.entangle:
        els += [beam_splitter(2 * k + 1, (2 * k + 2) % m, layout.coupler_theta) for k in range(q)]
    els += [beam_splitter(2 * k, 2 * k + 1, params[q + k]) for k in range(q)]
    return OpticalCircuit(
        m,
        tuple(els),
        input=tuple(1 - (i % 2) for i in range(m)),
        qubit_map=tuple((2 * k, 2 * k + 1) for k in range(q)),
    )


def energy(rho, cost: CostOperator) -> float:
    """``Tr(rho H_C)`` for a diagonal cost."""
    r = getattr(rho, "rho", rho)
    r = np.asarray(r)
    if r.shape != (cost.diagonal.size,) * 2:
        raise ValueError(f"density matrix of shape {r.shape} vs cost of size {cost.diagonal.size}")
    return float(np.real(np.sum(cost.diagonal * np.diag(r))))


def postselected_energy(dm: DensityMatrix, cost: CostOperator) -> float:
    """Energy of the state conditioned on a dual-rail detection pattern."""
    tr = dm.trace()
    if tr <= 0:
        raise ValueError("no weight left in the dual-rail subspace")
    return energy(dm.rho, cost) / tr


def approximation_ratio(e_final: float, e_exact: float) -> float:
    if e_exact == 0:
        raise ZeroDivisionError("exact energy is zero")
    return e_final / e_exact


@dataclass(frozen=True)
class OptimizationTrace:
    step: int
    params: tuple[float, ...]
    energy: float
    relative_error: float


@dataclass
class OptimizationResult:
    trace: list[OptimizationTrace]
    success: bool
    message: str
    initial_params: tuple[float, ...] = ()

    @property
    def final(self) -> OptimizationTrace:
        return self.trace[-1]


@dataclass(frozen=True)
class OptConfig:
    max_iters: int = 500
    seed: int = 0
    n_samples: int = 500
    tol: float = 1e-4
    rhobeg: float = 0.5
    threads: int = 1
    layout: AnsatzLayout = DEFAULT_LAYOUT


def initial_params(seed: int, restart: int, n: int) -> np.ndarray:
    """Uniform angles in ``[0, 2 pi)``; shared across noise scenarios for a restart."""
    rng = np.random.default_rng(derive_seed(seed, restart, 0xA57A))
    return rng.uniform(0, 2 * math.pi, n)


def evaluate(
    params: Sequence[float],
    cost: CostOperator,
    noise: NoiseModel,
    n_samples: int = 500,
    seed: int = 0,
    threads: int = 1,
    layout: AnsatzLayout = DEFAULT_LAYOUT,
) -> float:
    """Postselected energy of the ansatz at ``params`` for one trajectory stream."""
    run = RunConfig(n_samples=n_samples, master_seed=seed, normalize=False, threads=threads)
    dm = run_trajectories(ansatz_circuit(params, layout), noise, run, track_herald=False)
    return postselected_energy(dm, cost)


def optimize(
    graph: Graph,
    noise: NoiseModel,
    cfg: OptConfig = OptConfig(),
    restart: int = 0,
    x0: Sequence[float] | None = None,
) -> OptimizationResult:
    """COBYLA over the ansatz angles; every evaluation gets its own trajectory seed."""
    cost = maxcut_cost(graph)
    e0 = cost.minimum
    layout = cfg.layout
    if graph.n_vertices != layout.n_qubits:
        layout = AnsatzLayout(graph.n_vertices, layout.entangle, layout.coupler_theta)
    start = np.asarray(x0, dtype=float) if x0 is not None else initial_params(cfg.seed, restart, layout.n_params)
    start_t = tuple(float(t) for t in start)
    if e0 == 0:
        return OptimizationResult([], False, "terminated: exact energy is zero", start_t)
    trace: list[OptimizationTrace] = []

    def objective(theta):
        step = len(trace)
        seed = derive_seed(cfg.seed, restart, step)
        e = evaluate(theta, cost, noise, cfg.n_samples, seed, cfg.threads, layout)
        trace.append(OptimizationTrace(step, tuple(float(t) for t in theta), e, abs((e0 - e) / e0)))
        return e

    try:
        res = minimize(
            objective,
            start,
            method="COBYLA",
            tol=cfg.tol,
            options={"maxiter": cfg.max_iters, "rhobeg": cfg.rhobeg},
        )
        success, message = bool(res.success), str(res.message)
    except (ValueError, FloatingPointError) as exc:
        success, message = False, f"terminated: {exc}"
    return OptimizationResult(trace, success, message, start_t)
