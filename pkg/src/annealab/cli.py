"""Command-line front end: gen, baseline, tune-scaling, tune-schedule, compare, export.

Exit codes: 0 success, 2 validation error, 3 runtime/simulation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .annealer import SimulationError
from .bayesopt import optresult_from_dict
from .harness import (ExperimentConfig, build_instance_set, config_from_dict, export_results,
                      load_instance_dir, load_registry, registry_get, registry_set,
                      run_comparison, save_registry, tune_scaling_grid, tune_schedules,
                      write_instance_dir)


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = config_from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.backend is not None:
        overrides["backend"] = args.backend
    return replace(cfg, **overrides) if overrides else cfg


def _train_set(cfg, out: Path, density: float):
    inst_dir = out / "instances"
    instances = None
    if (inst_dir / "manifest.json").exists():
        instances = load_instance_dir(inst_dir, density, "train")
    return build_instance_set(cfg, density, role="train", instances=instances)


def cmd_gen(args, cfg: ExperimentConfig, out: Path) -> None:
    root = write_instance_dir(cfg, out)
    print(f"wrote instance sets under {root}")


def cmd_baseline(args, cfg: ExperimentConfig, out: Path) -> None:
    payload = {}
    for density in cfg.densities:
        tset = _train_set(cfg, out, density)
        payload[f"{density:g}"] = [
            {"seed": inst.seed, "value": base.value, "config": list(base.config.values)}
            for inst, base in zip(tset.instances, tset.baselines)]
        print(f"density {density:g}: {len(tset.instances)} baselines, "
              f"best={max(b.value for b in tset.baselines):.6g}")
    path = out / "baselines.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=1), encoding="utf-8")
    print(f"wrote {path}")


def cmd_tune_scaling(args, cfg: ExperimentConfig, out: Path) -> None:
    density = args.density if args.density is not None else cfg.densities[0]
    tset = _train_set(cfg, out, density)
    schedule = {"T": args.T if args.T is not None else cfg.anneal_T[0],
                "t_mid": args.t_mid, "g_mid": args.g_mid}
    if cfg.problem == "maxclique":
        schedule["alpha2"] = args.alpha2
    rows = tune_scaling_grid(tset, schedule, cfg)
    path = export_results(rows, args.format, out / f"scaling_p{density:g}.{args.format}")
    best = max(rows, key=lambda r: r[1])
    print(f"best alpha1 = {best[0]:.2f} (improvement {best[1]:.6g}); wrote {path}")


def cmd_tune_schedule(args, cfg: ExperimentConfig, out: Path) -> None:
    method = args.method or cfg.method
    registry_path = out / "registry.json"
    registry = load_registry(registry_path) if registry_path.exists() else {}
    densities = [args.density] if args.density is not None else list(cfg.densities)
    for density in densities:
        tset = _train_set(cfg, out, density)
        result = tune_schedules(method, tset, cfg)
        params = dict(zip(result.space.names, result.best_point))
        params["T"] = cfg.anneal_T[0]
        registry_set(registry, cfg.problem, method, density, params)
        tag = f"{method.replace('+', '_')}_p{density:g}"
        export_results(result, "json", out / f"tuning_{tag}.json")
        if result.heatmap is not None:
            export_results(result, "csv", out / f"heatmap_{tag}.csv")
        print(f"{method} p={density:g}: best {result.best_value:.6g} at "
              f"{dict(zip(result.space.names, (round(v, 4) for v in result.best_point)))}")
    save_registry(registry, registry_path)
    print(f"wrote {registry_path}")


def cmd_compare(args, cfg: ExperimentConfig, out: Path) -> None:
    registry_path = out / "registry.json"
    registry = load_registry(registry_path) if registry_path.exists() else {}
    methods = tuple(args.methods.split(",")) if args.methods else ("FA", cfg.method)
    rows = run_comparison(methods, cfg.anneal_T, cfg.densities, cfg, registry)
    export_results(rows, "csv", out / "comparison.csv")
    export_results(rows, "json", out / "comparison.json")
    for r in rows:
        print(f"{r.method:6s} T={r.anneal_T:<8g} p={r.density:<4g} "
              f"mean improvement {r.mean_improvement:.6g}")
    print(f"wrote {out / 'comparison.csv'}")


def cmd_export(args, cfg: ExperimentConfig, out: Path) -> None:
    data = json.loads(Path(args.input).read_text(encoding="utf-8"))
    stem = Path(args.input).stem
    if isinstance(data, dict) and "history" in data:
        obj = optresult_from_dict(data)
    elif isinstance(data, list) and data and "method" in data[0]:
        obj = [harness.ResultRow(method=r["method"], anneal_T=r["T"], density=r["density"],
                                 mean_improvement=r["mean_improvement"],
                                 per_instance=tuple(r.get("per_instance", ())),
                                 metadata=r.get("metadata", {}))
               for r in data]
    else:
        raise ValueError(f"unrecognized results file {args.input}")
    path = export_results(obj, args.format, out / f"{stem}.{args.format}")
    print(f"wrote {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annealab",
                                     description="Desk-scale anneal-schedule experiments.")
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override top-level seed")
    parser.add_argument("--backend", choices=("statevector", "classical"), default=None)
    parser.add_argument("--out", default="out", help="output directory")
    sub = parser.add_subparsers(dest="cmd", required=True)

    sub.add_parser("gen", help="generate instance sets")
    sub.add_parser("baseline", help="compute forward-anneal baselines")

    ps = sub.add_parser("tune-scaling", help="grid-scan alpha1 at a fixed HG schedule")
    ps.add_argument("--density", type=float, default=None)
    ps.add_argument("--T", type=float, default=None)
    ps.add_argument("--t-mid", dest="t_mid", type=float, default=0.5)
    ps.add_argument("--g-mid", dest="g_mid", type=float, default=2.5)
    ps.add_argument("--alpha2", type=float, default=0.25)
    ps.add_argument("--format", choices=("csv", "svg"), default="csv")

    pt = sub.add_parser("tune-schedule", help="Bayesian-optimize schedule parameters")
    pt.add_argument("--method", choices=("RA", "HG", "RA+HG"), default=None)
    pt.add_argument("--density", type=float, default=None)

    pc = sub.add_parser("compare", help="evaluate tuned methods on validation instances")
    pc.add_argument("--methods", help="comma-separated subset of FA,RA,HG,RA+HG")

    pe = sub.add_parser("export", help="re-export a results JSON as CSV/SVG/JSON")
    pe.add_argument("--input", required=True)
    pe.add_argument("--format", choices=("csv", "json", "svg"), required=True)

    return parser


_COMMANDS = {
    "gen": cmd_gen,
    "baseline": cmd_baseline,
    "tune-scaling": cmd_tune_scaling,
    "tune-schedule": cmd_tune_schedule,
    "compare": cmd_compare,
    "export": cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.cmd](args, cfg, out)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
