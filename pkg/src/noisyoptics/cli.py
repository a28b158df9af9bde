"""Command-line entry point: ``noisyoptics {run,sweep,vqa,validate}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import ConfigError, Row, SimulationError, SweepSpec
from .engine import NoiseModel, RunConfig
from .noise import NoiseDomainError

EXIT_OK, EXIT_CONFIG, EXIT_SIM = 0, 2, 3


def _common(p: argparse.ArgumentParser, samples_default: int = 500) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=samples_default)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisyoptics", description="Noisy linear-optics simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one experiment at one error probability")
    run.add_argument("experiment", choices=[e for e in analysis.EXPERIMENTS if e != "vqa"])
    run.add_argument("--noise", choices=analysis.SCENARIOS, default="both")
    run.add_argument("-p", "--probability", type=float, default=1e-3)
    run.add_argument("--raw", action="store_true", help="skip herald normalization")
    _common(run)

    sweep = sub.add_parser("sweep", help="sweep described by a JSON file")
    sweep.add_argument("spec", type=Path)
    _common(sweep)

    vqa = sub.add_parser("vqa", help="MAX-2-CUT optimization from a JSON config")
    vqa.add_argument("config", type=Path, nargs="?")
    _common(vqa)

    val = sub.add_parser("validate", help="trajectory vs oracle checks")
    _common(val, samples_default=100_000)
    return parser


def _explicit(argv, flag: str) -> bool:
    return any(a == flag or a.startswith(flag + "=") for a in argv)


def _write(out: Path, stem: str, fmt: str, rows, meta=None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.{fmt}"
    text = analysis.rows_to_csv(rows) if fmt == "csv" else analysis.rows_to_json(rows, meta)
    path.write_text(text)
    return path


def cmd_run(args) -> int:
    ideal = analysis.ideal_density(args.experiment)
    noise = NoiseModel.scenario(args.noise, args.probability)
    cfg = RunConfig(args.samples, args.seed, not args.raw, args.threads)
    try:
        dm = analysis.simulate(args.experiment, noise, cfg)
    except Exception as exc:
        raise SimulationError(f"{args.experiment} at p={args.probability}: {exc}") from exc
    rows = analysis.state_rows(args.probability, args.noise, dm, ideal)
    stem = f"{args.experiment}_{args.noise}"
    path = _write(args.out, stem, args.format, rows, {"density_matrix": dm.to_dict()})
    print(path)
    return EXIT_OK


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def cmd_sweep(args, argv) -> int:
    d = _load_json(args.spec)
    for flag, key, val in (("--seed", "seed", args.seed), ("--samples", "n_samples", args.samples),
                           ("--threads", "threads", args.threads)):
        if _explicit(argv, flag) or key not in d:
            d[key] = val
    spec = SweepSpec.from_dict(d)
    rows = analysis.run_sweep(spec)
    path = _write(args.out, f"sweep_{spec.experiment}_{spec.noise_type}", args.format, rows, {"spec": spec.to_dict()})
    print(path)
    return EXIT_OK


VQA_KEYS = {"graph", "scenarios", "probabilities", "restarts", "seed", "n_samples", "max_iters"}


def cmd_vqa(args, argv) -> int:
    from .vqa import Graph, OptConfig, approximation_ratio, initial_params, maxcut_cost, optimize, square_graph

    d = _load_json(args.config) if args.config else {}
    extra = set(d) - VQA_KEYS
    if extra:
        raise ConfigError(f"unknown vqa keys: {sorted(extra)}")
    try:
        graph = Graph(int(d["graph"]["n_vertices"]), tuple(tuple(e) for e in d["graph"]["edges"])) if "graph" in d else square_graph()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad graph: {exc}") from exc
    seed = args.seed if _explicit(argv, "--seed") or "seed" not in d else int(d["seed"])
    samples = args.samples if _explicit(argv, "--samples") or "n_samples" not in d else int(d["n_samples"])
    scenarios = d.get("scenarios", ["none", "dep", "loss", "both"])
    probs = [float(p) for p in d.get("probabilities", [1e-4, 1e-3, 1e-2])]
    restarts = int(d.get("restarts", 5))
    cfg = OptConfig(max_iters=int(d.get("max_iters", 500)), seed=seed, n_samples=samples, threads=args.threads)
    for s in scenarios:
        if s not in ("none",) + analysis.SCENARIOS:
            raise ConfigError(f"unknown scenario {s!r}")
    if any(not 0 <= p < 0.5 for p in probs):
        raise ConfigError(f"probabilities must lie in [0, 0.5): {probs}")
    e0 = maxcut_cost(graph).minimum
    args.out.mkdir(parents=True, exist_ok=True)
    summary = {"exact_energy": e0, "seed": seed, "n_samples": samples, "runs": []}
    for s in scenarios:
        for p in ([0.0] if s == "none" else probs):
            noise = NoiseModel.scenario(s, p)
            for r in range(restarts):
                x0 = initial_params(seed, r, 2 * graph.n_vertices)
                try:
                    res = optimize(graph, noise, cfg, restart=r, x0=x0)
                except Exception as exc:
                    raise SimulationError(f"vqa {s} at p={p}: {exc}") from exc
                stem = f"trace_{s}_p{p:g}_r{r}"
                lines = ["step,energy,relative_error"] + [
                    f"{t.step},{t.energy!r},{t.relative_error!r}" for t in res.trace
                ]
                (args.out / f"{stem}.csv").write_text("\n".join(lines) + "\n")
                summary["runs"].append({
                    "scenario": s,
                    "p": p,
                    "restart": r,
                    "steps": len(res.trace),
                    "final_energy": res.final.energy,
                    "approximation_ratio": approximation_ratio(res.final.energy, e0),
                    "relative_error": res.final.relative_error,
                    "message": res.message,
                })
    medians = {}
    for run in summary["runs"]:
        medians.setdefault(f"{run['scenario']}@{run['p']:g}", []).append(run["approximation_ratio"])
    summary["median_approximation_ratio"] = {k: float(np.median(v)) for k, v in medians.items()}
    path = args.out / "vqa_summary.json"
    path.write_text(json.dumps(summary, indent=1))
    print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import validate

    checks = validate(n_samples=args.samples, seed=args.seed, threads=args.threads)
    rows = []
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} p={c.p:g} max_dev={c.max_deviation:.2e} max_sigma={c.max_sigmas:.2f}")
        rows.append(Row(c.p, c.name, "max_deviation", c.max_deviation, math.nan))
        rows.append(Row(c.p, c.name, "max_sigmas", c.max_sigmas, math.nan))
    _write(args.out, "validate", args.format, rows)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_SIM


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.samples < 1 or args.threads < 1:
            raise ConfigError("--samples and --threads must be positive")
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args, argv)
        if args.command == "vqa":
            return cmd_vqa(args, argv)
        return cmd_validate(args)
    except (ConfigError, NoiseDomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
