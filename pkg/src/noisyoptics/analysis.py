"""Noise sweeps over the benchmark experiments and their tabular output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .engine import DensityMatrix, NoiseModel, RunConfig, pure_density, run_trajectories
from .gbqc import bell_circuit, x_gate_circuit
from .mbqc import run_mbqc_x
from .metrics import hellinger, hellinger_stderr

EXPERIMENTS = ("xgate-gbqc", "bell-gbqc", "xgate-mbqc", "vqa")
SCENARIOS = ("dep", "loss", "both")
COLUMNS = ("p", "scenario", "observable", "value", "stderr")


class ConfigError(ValueError):
    """Malformed or out-of-range experiment configuration."""


class SimulationError(RuntimeError):
    """An engine failure, tagged with the experiment and error probability."""


@dataclass(frozen=True)
class SweepSpec:
    experiment: str
    noise_type: str
    probabilities: tuple[float, ...]
    n_samples: int = 500
    seed: int = 0
    threads: int = 1
    restarts: int = 5
    max_iters: int = 500
    normalize: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.noise_type not in SCENARIOS:
            raise ConfigError(f"unknown noise type {self.noise_type!r}; expected one of {SCENARIOS}")
        ps = tuple(float(p) for p in self.probabilities)
        if not ps:
            raise ConfigError("at least one probability is required")
        if any(not 0 <= p < 0.5 for p in ps):
            raise ConfigError(f"probabilities must lie in [0, 0.5): {ps}")
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ConfigError(f"probabilities must be strictly ascending: {ps}")
        if self.n_samples < 1 or self.restarts < 1 or self.max_iters < 1 or self.threads < 1:
            raise ConfigError("n_samples, restarts, max_iters and threads must be positive")
        object.__setattr__(self, "probabilities", ps)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown sweep keys: {sorted(extra)}")
        try:
            return cls(**{**d, "probabilities": tuple(d["probabilities"])})
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad sweep spec: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probabilities"] = list(self.probabilities)
        # thread count does not affect results, so keep it out of outputs
        d.pop("threads")
        return d


@dataclass(frozen=True)
class Row:
    p: float
    scenario: str
    observable: str
    value: float
    stderr: float = math.nan


def ideal_density(experiment: str) -> DensityMatrix:
    if experiment in ("xgate-gbqc", "xgate-mbqc"):
        return pure_density([0, 1])
    if experiment == "bell-gbqc":
        return pure_density(np.array([1, 0, 0, 1]) / math.sqrt(2))
    raise ConfigError(f"no ideal state for {experiment!r}")


def simulate(experiment: str, noise: NoiseModel, cfg: RunConfig) -> DensityMatrix:
    if experiment == "xgate-gbqc":
        return run_trajectories(x_gate_circuit(), noise, cfg)
    if experiment == "bell-gbqc":
        return run_trajectories(bell_circuit(), noise, cfg)
    if experiment == "xgate-mbqc":
        return run_mbqc_x(noise, cfg)
    raise ConfigError(f"{experiment!r} does not produce a density matrix")


def state_rows(p: float, scenario: str, dm: DensityMatrix, ideal: DensityMatrix) -> list[Row]:
    d = dm.diagonal()
    se = np.diag(dm.stderr).real if dm.stderr is not None else np.full(d.size, math.nan)
    rows = [Row(p, scenario, f"rho_{k}{k}", float(d[k]), float(se[k])) for k in range(d.size)]
    h = hellinger(dm, ideal)
    rows.append(Row(p, scenario, "hellinger", h, hellinger_stderr(dm, ideal, se)))
    rows.append(Row(p, scenario, "trace", dm.trace()))
    rows.append(Row(p, scenario, "herald_probability", float(dm.herald_probability)))
    return rows


def vqa_rows(spec: SweepSpec) -> list[Row]:
    from .vqa import OptConfig, optimize, square_graph

    graph = square_graph()
    rows = []
    for p in spec.probabilities:
        cfg = OptConfig(max_iters=spec.max_iters, seed=spec.seed, n_samples=spec.n_samples, threads=spec.threads)
        noise = NoiseModel.scenario(spec.noise_type, p)
        try:
            results = [optimize(graph, noise, cfg, restart=r) for r in range(spec.restarts)]
        except Exception as exc:
            raise SimulationError(f"vqa at p={p}: {exc}") from exc
        errs = np.array([res.final.relative_error for res in results])
        energies = np.array([res.final.energy for res in results])
        spread = float(errs.std(ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else math.nan
        rows.append(Row(p, spec.noise_type, "median_relative_error", float(np.median(errs)), spread))
        rows.append(Row(p, spec.noise_type, "median_approximation_ratio", float(np.median(energies / -4.0)), spread))
        rows.append(Row(p, spec.noise_type, "median_final_energy", float(np.median(energies)), 4 * spread))
    return rows


def run_sweep(spec: SweepSpec) -> list[Row]:
    """One block of rows per error probability.

    Every point reuses ``spec.seed``, so neighbouring probabilities see the
    same underlying normal draws and trends are not masked by sampling noise.
    """
    if spec.experiment == "vqa":
        return vqa_rows(spec)
    ideal = ideal_density(spec.experiment)
    rows = []
    for p in spec.probabilities:
        cfg = RunConfig(spec.n_samples, spec.seed, spec.normalize, spec.threads)
        try:
            dm = simulate(spec.experiment, NoiseModel.scenario(spec.noise_type, p), cfg)
        except Exception as exc:
            raise SimulationError(f"{spec.experiment} at p={p}: {exc}") from exc
        rows += state_rows(p, spec.noise_type, dm, ideal)
    return rows


# -- serialization -------------------------------------------------------------


def _num(x: float) -> str:
    return repr(float(x))


def rows_to_csv(rows: Sequence[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_num(r.p), r.scenario, r.observable, _num(r.value), _num(r.stderr)])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[Row]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected header {header}")
    return [Row(float(p), s, o, float(v), float(e)) for p, s, o, v, e in reader]


def rows_to_json(rows: Sequence[Row], meta: dict | None = None) -> str:
    doc = {"columns": list(COLUMNS), "rows": [[r.p, r.scenario, r.observable, r.value, r.stderr] for r in rows]}
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=1)


def rows_from_json(text: str) -> list[Row]:
    doc = json.loads(text)
    return [Row(float(p), s, o, float(v), float(e)) for p, s, o, v, e in doc["rows"]]


def select(rows: Sequence[Row], observable: str, scenario: str | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(p, value, stderr)`` arrays for one observable."""
    hit = [r for r in rows if r.observable == observable and (scenario is None or r.scenario == scenario)]
    return (
        np.array([r.p for r in hit]),
        np.array([r.value for r in hit]),
        np.array([r.stderr for r in hit]),
    )
