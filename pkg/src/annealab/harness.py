"""Experiment orchestration: baselines, schedule tuning, comparisons, exports.

The protocol mirrors a hardware anneal-schedule study at desk scale:
generate weighted random graphs, take the best of a batch of short
forward anneals as the baseline (and as the planted solution), tune
schedule and scaling parameters against the average improvement over that
baseline, then compare methods on fresh validation instances.

Determinism: one top-level seed derives every instance, simulator, and
optimizer seed through ``derive_seed`` (SeedSequence over the master seed
plus CRC32-hashed tags), so a full study is bit-reproducible.  Training
and validation instance seeds differ by tag and are disjoint by
construction.
"""

from __future__ import annotations

import json
import logging
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .annealer import SimConfig, anneal
from .bayesopt import SENTINEL, Observation, OptResult, SearchSpace, optimize, optresult_to_json
from .ising import IsingModel, SpinConfig, energy, filter_slack, plant, qubo_to_ising
from .problems import (ProblemInstance, WeightedGraph, clique_check, cut_value, gen_er_graph,
                       graph_from_dict, maxclique_qubo, maxcut_ising)
from .samples import SampleSet
from .schedules import SchedulePlan, forward_path, hgain_path, reverse_path

logger = logging.getLogger(__name__)

METHODS = ("FA", "RA", "HG", "RA+HG")


def derive_seed(master: int, *tags) -> int:
    """Deterministic child seed: SeedSequence(master, crc32(tag), ...)."""
    parts = [int(master)]
    for tag in tags:
        if isinstance(tag, (int, np.integer)):
            parts.append(int(tag))
        else:
            parts.append(zlib.crc32(repr(tag).encode()))
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of a study; defaults are the desk-scale ones."""

    problem: str = "maxcut"  # "maxcut" | "maxclique"
    n: int = 12
    densities: tuple[float, ...] = (0.1, 0.5, 0.9)
    instances_per_density: int = 10
    validation_instances: int = 10
    baseline_shots: int = 1000
    baseline_T: float = 1.0
    method: str = "HG"
    backend: str = "statevector"
    seed: int = 0
    anneal_T: tuple[float, ...] = (1.0,)
    init_points: int = 100
    n_iter: int = 200
    noise: float = 0.01
    edge_weight_range: tuple[float, float] = (-1.0, 1.0)
    vertex_weight_range: tuple[float, float] = (0.001, 1.0)
    dt: float | None = None
    integrator: str = "rk4"
    sweeps: int | None = None
    statevector_limit: int = 16
    alpha_bounds: tuple[float, float] = (0.01, 1.0)
    heatmap_resolution: int = 50

    def __post_init__(self):
        if self.problem not in ("maxcut", "maxclique"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        for p in self.densities:
            if not 0.0 < p <= 1.0:
                raise ValueError(f"density {p} outside (0, 1]")
        for count in (self.instances_per_density, self.validation_instances,
                      self.baseline_shots, self.init_points):
            if count < 1:
                raise ValueError("counts must be positive")

    def to_dict(self) -> dict:
        return {
            "problem": self.problem, "n": self.n, "densities": list(self.densities),
            "instances_per_density": self.instances_per_density,
            "validation_instances": self.validation_instances,
            "baseline_shots": self.baseline_shots, "baseline_T": self.baseline_T,
            "method": self.method, "backend": self.backend, "seed": self.seed,
            "anneal_T": list(self.anneal_T), "init_points": self.init_points,
            "n_iter": self.n_iter, "noise": self.noise,
            "edge_weight_range": list(self.edge_weight_range),
            "vertex_weight_range": list(self.vertex_weight_range),
            "dt": self.dt, "integrator": self.integrator, "sweeps": self.sweeps,
            "statevector_limit": self.statevector_limit,
            "alpha_bounds": list(self.alpha_bounds),
            "heatmap_resolution": self.heatmap_resolution,
        }


def config_from_dict(data: dict) -> ExperimentConfig:
    kwargs = dict(data)
    for key in ("densities", "anneal_T", "edge_weight_range", "vertex_weight_range",
                "alpha_bounds"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(kwargs[key])
    return ExperimentConfig(**kwargs)


def _sim(cfg: ExperimentConfig, seed: int, shots: int | None = None) -> SimConfig:
    return SimConfig(dt=cfg.dt, integrator=cfg.integrator,
                     shots=shots if shots is not None else cfg.baseline_shots,
                     seed=seed, backend=cfg.backend,
                     statevector_limit=cfg.statevector_limit, sweeps=cfg.sweeps)


def build_model(instance: ProblemInstance) -> IsingModel:
    """Problem Ising model; clique QUBOs are converted before any planting."""
    if instance.kind == "maxcut":
        return maxcut_ising(instance.graph)
    return qubo_to_ising(maxclique_qubo(instance.graph))


def make_instance(cfg: ExperimentConfig, density: float, seed: int) -> ProblemInstance:
    if cfg.problem == "maxcut":
        graph = gen_er_graph(cfg.n, density, edge_w=cfg.edge_weight_range, seed=seed)
    else:
        graph = gen_er_graph(cfg.n, density, vertex_w=cfg.vertex_weight_range, seed=seed)
    return ProblemInstance(graph=graph, kind=cfg.problem, density=density, seed=seed)


@dataclass(frozen=True)
class BaselineResult:
    ok: bool
    value: float
    config: SpinConfig | None


def _objective_of_record(instance: ProblemInstance, config: tuple[int, ...]):
    """(valid, objective value) of one sampled +/-1 configuration."""
    if instance.kind == "maxcut":
        return True, cut_value(instance.graph, config)
    bits = tuple((v + 1) // 2 for v in config)
    ok, weight = clique_check(instance.graph, bits)
    return ok, weight


def best_objective(instance: ProblemInstance, samples: SampleSet):
    """Best valid objective over a sample set, or None when nothing is usable."""
    best_val, best_cfg, n_valid = None, None, 0
    for rec in samples.records:
        ok, val = _objective_of_record(instance, rec.config)
        if not ok:
            continue
        n_valid += rec.count
        if best_val is None or val > best_val:
            best_val, best_cfg = val, rec.config
    info = {"valid_shots": n_valid, "total_shots": samples.shots,
            "z_plus_fraction": samples.meta.get("z_plus_fraction")}
    return best_val, best_cfg, info


def run_baseline(instance: ProblemInstance, cfg: ExperimentConfig) -> BaselineResult:
    """Best objective over ``baseline_shots`` short forward anneals.

    Clique samples that are not cliques are excluded before taking the
    best; an instance with no valid sample gets an undefined baseline.
    """
    model = build_model(instance)
    plan = SchedulePlan(forward_path(cfg.baseline_T))
    seed = derive_seed(cfg.seed, "baseline", instance.kind, instance.density, instance.seed)
    samples = anneal(model, plan, None, _sim(cfg, seed))
    value, config, _ = best_objective(instance, samples)
    if value is None:
        logger.warning("baseline undefined for instance seed=%d (no valid sample)", instance.seed)
        return BaselineResult(ok=False, value=math.nan, config=None)
    return BaselineResult(ok=True, value=value, config=SpinConfig(config, "ising"))


@dataclass(frozen=True)
class InstanceSet:
    """Instances of one density plus their baselines (undefined ones dropped)."""

    kind: str
    density: float
    instances: tuple[ProblemInstance, ...]
    baselines: tuple[BaselineResult, ...]


def build_instance_set(cfg: ExperimentConfig, density: float, role: str = "train",
                       instances: list[ProblemInstance] | None = None) -> InstanceSet:
    if instances is None:
        count = cfg.instances_per_density if role == "train" else cfg.validation_instances
        seeds = [derive_seed(cfg.seed, role, cfg.problem, density, k) for k in range(count)]
        instances = [make_instance(cfg, density, s) for s in seeds]
    kept_i, kept_b = [], []
    for inst in instances:
        base = run_baseline(inst, cfg)
        if base.ok:
            kept_i.append(inst)
            kept_b.append(base)
    if not kept_i:
        raise ValueError(f"all baselines undefined for density {density}")
    return InstanceSet(kind=cfg.problem, density=density,
                       instances=tuple(kept_i), baselines=tuple(kept_b))


def _method_seed(cfg: ExperimentConfig, method: str, instance: ProblemInstance) -> int:
    # FA is the control: it re-runs the baseline protocol under the baseline seed.
    if method == "FA":
        return derive_seed(cfg.seed, "baseline", instance.kind, instance.density, instance.seed)
    return derive_seed(cfg.seed, "run", method, instance.kind, instance.density, instance.seed)


def _reverse_times(T: float, u1: float, u2: float) -> tuple[float, float]:
    """Box reparameterization guaranteeing 0 < t_a <= t_b < T."""
    t_a = T * u1
    t_b = t_a + (T - t_a) * u2
    return t_a, min(t_b, T * (1 - 1e-9))

def method_plan_and_model(method: str, params: dict, instance: ProblemInstance, x0: SpinConfig):
    """Build (plan, model-to-anneal, planted-or-None, init-x0) for one run."""
    model = build_model(instance)
    T = float(params["T"])
    if method == "FA":
        return SchedulePlan(forward_path(T)), model, None, None
    if method == "RA":
        t_a, t_b = _reverse_times(T, params["u1"], params["u2"])
        plan = SchedulePlan(reverse_path(T, t_a, t_b, params["s_inv"]))
        return plan, model, None, x0
    if method in ("HG", "RA+HG"):
        alpha1 = params.get("alpha1")
        if alpha1 is None:
            raise ValueError(f"{method} requires alpha1 in params")
        needs_slack = bool(model.linear)
        alpha2 = params.get("alpha2", 0.0) if needs_slack else 0.0
        if needs_slack and "alpha2" not in params:
            raise ValueError(f"{method} on a model with linear terms requires alpha2")
        planted = plant(model, x0, alpha1, alpha2)
        hg = hgain_path(T, params["t_mid"], params["g_mid"])
        if method == "HG":
            plan = SchedulePlan(forward_path(T), hgain_path=hg)
            return plan, planted.base, planted, None
        t_a, t_b = _reverse_times(T, params["u1"], params["u2"])
        plan = SchedulePlan(reverse_path(T, t_a, t_b, params["s_inv"]), hgain_path=hg)
        return plan, planted.base, planted, x0  # init_state extends x0 with z=+1
    raise ValueError(f"unknown method {method!r}")


def run_method_once(method: str, params: dict, instance: ProblemInstance,
                    baseline: BaselineResult, cfg: ExperimentConfig) -> SampleSet:
    """One method run on one instance; planted runs come back slack-filtered."""
    plan, run_model, planted, x0 = method_plan_and_model(method, params, instance, baseline.config)
    seed = _method_seed(cfg, method, instance)
    samples = anneal(run_model, plan, x0, _sim(cfg, seed))
    if planted is not None:
        samples = filter_slack(samples, planted)
    return samples


def fitness_detail(method: str, params: dict, instance_set: InstanceSet,
                   cfg: ExperimentConfig) -> tuple[float, list[dict]]:
    """Average improvement over baselines, plus per-instance diagnostics.

    Any instance without a usable sample (all z=-1, or no valid clique)
    sinks the whole call to the -1000 sentinel.
    """
    diffs, details = [], []
    for inst, base in zip(instance_set.instances, instance_set.baselines):
        samples = run_method_once(method, params, inst, base, cfg)
        value, _, info = best_objective(inst, samples)
        info["instance_seed"] = inst.seed
        if info["z_plus_fraction"] is not None:
            logger.info("run %s density=%g seed=%d z=+1 fraction %.3f", method,
                        inst.density, inst.seed, info["z_plus_fraction"])
        if value is None:
            details.append(info)
            return SENTINEL, details
        info["improvement"] = value - base.value
        diffs.append(value - base.value)
        details.append(info)
    return float(np.mean(diffs)), details


def fitness(method: str, params: dict, instance_set: InstanceSet,
            cfg: ExperimentConfig) -> float:
    return fitness_detail(method, params, instance_set, cfg)[0]


def tune_scaling_grid(instance_set: InstanceSet, schedule: dict,
                      cfg: ExperimentConfig) -> list[tuple[float, float]]:
    """Scan alpha1 over the 100-point grid 0.01, 0.02, ..., 1.00 at a fixed
    HG schedule; returns (alpha1, mean improvement) rows."""
    rows = []
    for k in range(1, 101):
        alpha1 = k / 100.0
        params = dict(schedule)
        params["alpha1"] = alpha1
        rows.append((alpha1, fitness("HG", params, instance_set, cfg)))
    return rows


def method_space(method: str, cfg: ExperimentConfig, homogenized: bool,
                 include_scaling: bool) -> SearchSpace:
    lo, hi = cfg.alpha_bounds
    dims: list[tuple[str, float, float]] = []
    if method in ("RA", "RA+HG"):
        dims += [("u1", 0.01, 0.99), ("u2", 0.01, 0.99), ("s_inv", 0.0, 0.99)]
    if method in ("HG", "RA+HG"):
        dims += [("t_mid", 0.01, 0.99), ("g_mid", 0.0, 5.0)]
    if include_scaling and method in ("HG", "RA+HG"):
        dims.append(("alpha1", lo, hi))
        if homogenized:
            dims.append(("alpha2", lo, hi))
    if not dims:
        raise ValueError(f"method {method!r} has no tunable schedule parameters")
    return SearchSpace(tuple(dims))


#: Fixed equidistant reference shapes used before tuning: the reverse path
#: dips to 0.25 over [0.25T, 0.75T] and the gain ramp passes (0.5T, 2.5).
FIXED_PROBE = {"u1": 0.25, "u2": 2.0 / 3.0, "s_inv": 0.25,
               "t_mid": 0.5, "g_mid": 2.5, "alpha1": 0.5, "alpha2": 0.5}


def tune_schedules(method: str, instance_set: InstanceSet, cfg: ExperimentConfig,
                   T: float | None = None, include_scaling: bool = True,
                   fixed_scaling: dict | None = None, probe: dict | None = None) -> OptResult:
    """Bayesian optimization of a method's schedule parameters at fixed T.

    The fixed reference shape (or a caller-supplied ``probe``) is always
    evaluated as the first exploration point, so the tuned best can never
    fall below it on the training metric.
    """
    if T is None:
        T = cfg.anneal_T[0]
    homogenized = instance_set.kind == "maxclique"
    space = method_space(method, cfg, homogenized, include_scaling)
    fixed = dict(fixed_scaling or {})

    def fit(point) -> float:
        params = dict(zip(space.names, point))
        params.update(fixed)
        params["T"] = T
        return fitness(method, params, instance_set, cfg)

    probe_src = dict(FIXED_PROBE)
    probe_src.update(probe or {})
    probe_pt = tuple(probe_src[name] for name in space.names)
    seed = derive_seed(cfg.seed, "tune", method, instance_set.kind, instance_set.density)
    return optimize(fit, space, cfg.init_points, cfg.n_iter, cfg.noise, seed,
                    probe_points=[probe_pt], heatmap_resolution=cfg.heatmap_resolution)


def refit_scaling(instance_set: InstanceSet, schedule: dict, cfg: ExperimentConfig,
                  previous: dict | None = None) -> OptResult:
    """Second tuning pass: re-fit the alpha scaling constants at a fixed
    schedule, seeded with the previously best values."""
    homogenized = instance_set.kind == "maxclique"
    lo, hi = cfg.alpha_bounds
    dims = [("alpha1", lo, hi)] + ([("alpha2", lo, hi)] if homogenized else [])
    space = SearchSpace(tuple(dims))

    def fit(point) -> float:
        params = dict(schedule)
        params.update(dict(zip(space.names, point)))
        return fitness("HG", params, instance_set, cfg)

    probe_src = {"alpha1": 0.5, "alpha2": 0.5}
    probe_src.update(previous or {})
    probe_pt = tuple(np.clip(probe_src[n], lo, hi) for n in space.names)
    seed = derive_seed(cfg.seed, "refit-scaling", instance_set.kind, instance_set.density)
    return optimize(fit, space, cfg.init_points, cfg.n_iter, cfg.noise, seed,
                    probe_points=[probe_pt], heatmap_resolution=cfg.heatmap_resolution)


@dataclass(frozen=True)
class ResultRow:
    """One (method, T, density) comparison entry."""

    method: str
    anneal_T: float
    density: float
    mean_improvement: float
    per_instance: tuple[float, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.per_instance:
            mean = float(np.mean(self.per_instance))
            if not math.isclose(mean, self.mean_improvement, rel_tol=1e-12, abs_tol=1e-12):
                raise ValueError("mean_improvement must equal the mean of per_instance values")


def run_comparison(methods, T_candidates, densities, cfg: ExperimentConfig,
                   registry: dict) -> list[ResultRow]:
    """Evaluate tuned methods on fresh validation instances.

    ``registry`` maps (problem, method, density) to tuned parameters, as
    produced by ``registry_set``; FA needs no entry.  Rows are sorted by
    method, then density, then T.
    """
    rows = []
    for density in densities:
        vset = build_instance_set(cfg, density, role="validation")
        for method in methods:
            for T in T_candidates:
                if method == "FA":
                    params = {"T": float(T)}
                else:
                    tuned = registry_get(registry, cfg.problem, method, density)
                    if tuned is None:
                        raise ValueError(f"no tuned parameters for {method} at density {density}")
                    params = dict(tuned)
                    params["T"] = float(T)
                value, details = fitness_detail(method, params, vset, cfg)
                per_instance = tuple(d["improvement"] for d in details if "improvement" in d)
                sentinel_hit = len(per_instance) < len(vset.instances)
                if sentinel_hit:  # some instance had no usable sample
                    value, per_instance = SENTINEL, (SENTINEL,)
                zf = [d["z_plus_fraction"] for d in details if d.get("z_plus_fraction") is not None]
                meta = {"params": {k: params[k] for k in sorted(params)},
                        "backend": cfg.backend, "sentinel": sentinel_hit,
                        "instances": len(vset.instances)}
                if zf:
                    meta["mean_z_plus_fraction"] = float(np.mean(zf))
                rows.append(ResultRow(
                    method=method, anneal_T=float(T), density=density,
                    mean_improvement=value, per_instance=per_instance, metadata=meta))
    rows.sort(key=lambda r: (r.method, r.density, r.anneal_T))
    return rows


# -- parameter registry -------------------------------------------------------

def registry_set(registry: dict, problem: str, method: str, density: float, params: dict) -> None:
    registry.setdefault(problem, {}).setdefault(method, {})[f"{density:g}"] = dict(params)


def registry_get(registry: dict, problem: str, method: str, density: float) -> dict | None:
    return registry.get(problem, {}).get(method, {}).get(f"{density:g}")


def save_registry(registry: dict, path) -> None:
    Path(path).write_text(json.dumps(registry, sort_keys=True, indent=1), encoding="utf-8")


def load_registry(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- file exports -------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def rows_to_csv(rows: list[ResultRow]) -> str:
    lines = ["method,T,density,mean_improvement"]
    for r in rows:
        lines.append(f"{r.method},{_fmt(r.anneal_T)},{_fmt(r.density)},{_fmt(r.mean_improvement)}")
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[ResultRow]) -> str:
    payload = [{
        "method": r.method, "T": r.anneal_T, "density": r.density,
        "mean_improvement": r.mean_improvement, "per_instance": list(r.per_instance),
        "metadata": r.metadata,
    } for r in rows]
    return json.dumps(payload, sort_keys=True, indent=1)


def scaling_to_csv(rows: list[tuple[float, float]]) -> str:
    lines = ["alpha1,mean_improvement"]
    lines += [f"{_fmt(a)},{_fmt(v)}" for a, v in rows]
    return "\n".join(lines) + "\n"


def heatmap_to_csv(grid) -> str:
    lines = [f"{grid.dim_names[0]},{grid.dim_names[1]},mean,variance"]
    for i, a in enumerate(grid.axis0):
        for j, b in enumerate(grid.axis1):
            lines.append(f"{_fmt(a)},{_fmt(b)},{_fmt(grid.mean[i][j])},{_fmt(grid.variance[i][j])}")
    return "\n".join(lines) + "\n"


def _svg_header(width: int, height: int) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_line_svg(series: dict, title: str = "", width: int = 640, height: int = 420) -> str:
    """Minimal SVG line plot; ``series`` maps label -> [(x, y), ...]."""
    pad = 50
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    if not xs:
        return _svg_header(width, height) + "</svg>\n"
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [_svg_header(width, height)]
    out.append(f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
               f'height="{height - 2 * pad}" fill="none" stroke="black"/>\n')
    if title:
        out.append(f'<text x="{width / 2}" y="24" text-anchor="middle" '
                   f'font-size="14">{title}</text>\n')
    out.append(f'<text x="{pad - 8}" y="{sy(y0)}" text-anchor="end" font-size="10">{y0:.3g}</text>\n')
    out.append(f'<text x="{pad - 8}" y="{sy(y1)}" text-anchor="end" font-size="10">{y1:.3g}</text>\n')
    out.append(f'<text x="{sx(x0)}" y="{height - pad + 16}" text-anchor="middle" font-size="10">{x0:.3g}</text>\n')
    out.append(f'<text x="{sx(x1)}" y="{height - pad + 16}" text-anchor="middle" font-size="10">{x1:.3g}</text>\n')
    for k, (label, pts) in enumerate(sorted(series.items())):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in sorted(pts))
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>\n')
        out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * (k + 1)}" font-size="11" '
                   f'fill="{color}">{label}</text>\n')
    out.append("</svg>\n")
    return "".join(out)


def render_heatmap_svg(grid, layer: str = "mean", width: int = 560, height: int = 480) -> str:
    """Minimal SVG heatmap of a surrogate grid layer."""
    pad = 50
    values = np.array(grid.mean if layer == "mean" else grid.variance, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo if hi > lo else 1.0
    n0, n1 = values.shape
    cw = (width - 2 * pad) / n0
    ch = (height - 2 * pad) / n1
    out = [_svg_header(width, height)]
    out.append(f'<text x="{width / 2}" y="24" text-anchor="middle" font-size="13">'
               f'{grid.dim_names[0]} vs {grid.dim_names[1]} ({layer})</text>\n')
    for i in range(n0):
        for j in range(n1):
            z = (values[i, j] - lo) / span
            r, g, b = int(255 * z), int(64 + 64 * (1 - abs(2 * z - 1))), int(255 * (1 - z))
            x = pad + i * cw
            y = height - pad - (j + 1) * ch
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw + 0.5:.2f}" '
                       f'height="{ch + 0.5:.2f}" fill="rgb({r},{g},{b})"/>\n')
    out.append("</svg>\n")
    return "".join(out)


def export_results(obj, fmt: str, path) -> Path:
    """Write tables, tuning results, or grids to ``path`` in CSV/JSON/SVG."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(obj, OptResult):
            if fmt == "json":
                text = optresult_to_json(obj)
            elif fmt == "csv":
                if obj.heatmap is None:
                    raise ValueError("OptResult has no heatmap grid (space is not 2-D)")
                text = heatmap_to_csv(obj.heatmap)
            elif fmt == "svg":
                if obj.heatmap is None:
                    raise ValueError("OptResult has no heatmap grid (space is not 2-D)")
                text = render_heatmap_svg(obj.heatmap)
            else:
                raise ValueError(f"unknown format {fmt!r}")
        elif isinstance(obj, list) and obj and isinstance(obj[0], ResultRow):
            if fmt == "csv":
                text = rows_to_csv(obj)
            elif fmt == "json":
                text = rows_to_json(obj)
            elif fmt == "svg":
                series = {}
                for r in obj:
                    series.setdefault(f"{r.method} T={r.anneal_T:g}", []).append(
                        (r.density, r.mean_improvement))
                text = render_line_svg(series, title="mean improvement over baseline")
            else:
                raise ValueError(f"unknown format {fmt!r}")
        elif isinstance(obj, list):  # scaling-grid rows
            if fmt == "csv":
                text = scaling_to_csv(obj)
            elif fmt == "svg":
                text = render_line_svg({"alpha1 scan": [(a, v) for a, v in obj]},
                                       title="improvement vs alpha1")
            else:
                raise ValueError(f"unknown format {fmt!r}")
        else:
            raise ValueError(f"cannot export object of type {type(obj).__name__}")
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    return path


# -- instance-set files -------------------------------------------------------

def write_instance_dir(cfg: ExperimentConfig, out_dir) -> Path:
    """Write numbered graph files plus a manifest per density and role."""
    root = Path(out_dir) / "instances"
    manifest = {"problem": cfg.problem, "n": cfg.n, "seed": cfg.seed,
                "edge_weight_range": list(cfg.edge_weight_range),
                "vertex_weight_range": list(cfg.vertex_weight_range),
                "densities": {}}
    for density in cfg.densities:
        for role, count in (("train", cfg.instances_per_density),
                            ("validation", cfg.validation_instances)):
            d = root / f"p{density:g}" / role
            d.mkdir(parents=True, exist_ok=True)
            seeds = []
            for k in range(count):
                seed = derive_seed(cfg.seed, role, cfg.problem, density, k)
                seeds.append(seed)
                inst = make_instance(cfg, density, seed)
                (d / f"graph_{k:03d}.json").write_text(
                    json.dumps(inst.graph.to_dict(), sort_keys=True), encoding="utf-8")
            manifest["densities"].setdefault(f"{density:g}", {})[role] = {
                "count": count, "seeds": seeds, "p": density}
    (root / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1),
                                        encoding="utf-8")
    return root


def load_instance_dir(root, density: float, role: str = "train") -> list[ProblemInstance]:
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    entry = manifest["densities"][f"{density:g}"][role]
    instances = []
    for k, seed in enumerate(entry["seeds"]):
        data = json.loads((root / f"p{density:g}" / role / f"graph_{k:03d}.json")
                          .read_text(encoding="utf-8"))
        instances.append(ProblemInstance(graph=graph_from_dict(data), kind=manifest["problem"],
                                         density=density, seed=int(seed)))
    return instances


# -- full study ---------------------------------------------------------------

def _tune_hg(train: InstanceSet, cfg: ExperimentConfig, out: Path) -> tuple[dict, OptResult]:
    """Two-pass HG tuning per the study protocol.

    Pass 1 fits the schedule jointly with the scaling constants.  For
    problems without linear terms the second pass re-tunes the 2-D
    schedule at fixed alpha (and yields the schedule heatmap); for
    homogenized problems it instead re-fits (alpha1, alpha2) at the fixed
    best schedule, seeded with the pass-1 values.  Each pass probes the
    previous best, so the final training fitness never regresses.
    """
    density = train.density
    joint = tune_schedules("HG", train, cfg, include_scaling=True)
    export_results(joint, "json", out / f"tuning_HG_joint_p{density:g}.json")
    best = dict(zip(joint.space.names, joint.best_point))
    if train.kind == "maxcut":
        second = tune_schedules("HG", train, cfg, include_scaling=False,
                                fixed_scaling={"alpha1": best["alpha1"]},
                                probe={"t_mid": best["t_mid"], "g_mid": best["g_mid"]})
        params = dict(zip(second.space.names, second.best_point))
        params["alpha1"] = best["alpha1"]
    else:
        schedule = {"T": cfg.anneal_T[0], "t_mid": best["t_mid"], "g_mid": best["g_mid"]}
        second = refit_scaling(train, schedule, cfg,
                               previous={"alpha1": best["alpha1"], "alpha2": best["alpha2"]})
        params = {"t_mid": best["t_mid"], "g_mid": best["g_mid"]}
        params.update(dict(zip(second.space.names, second.best_point)))
    params["T"] = cfg.anneal_T[0]
    export_results(second, "json", out / f"tuning_HG_p{density:g}.json")
    if second.heatmap is not None:
        export_results(second, "csv", out / f"heatmap_HG_p{density:g}.csv")
    return params, second


def run_full_study(cfg: ExperimentConfig, out_dir, methods: tuple[str, ...] = ("FA", "HG"),
                   scaling_grid: bool = False) -> dict:
    """gen -> baseline -> tune -> compare -> export, all derived from cfg.seed.

    Returns a summary dict with tuned results per (method, density) and
    the comparison rows; every artifact is written under ``out_dir`` with
    canonical formatting so re-runs are bit-identical.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_instance_dir(cfg, out)

    registry: dict = {}
    baselines_payload: dict = {}
    tuned: dict = {}
    for density in cfg.densities:
        train = build_instance_set(
            cfg, density, role="train",
            instances=load_instance_dir(out / "instances", density, "train"))
        baselines_payload[f"{density:g}"] = [
            {"seed": inst.seed, "value": base.value, "config": list(base.config.values)}
            for inst, base in zip(train.instances, train.baselines)]
        hg_alphas: dict = {}
        # HG runs first so RA+HG can reuse its scaling constants
        for method in [m for m in ("HG", "RA", "RA+HG") if m in methods]:
            if method == "HG":
                params, result = _tune_hg(train, cfg, out)
                hg_alphas = {k: v for k, v in params.items() if k.startswith("alpha")}
            else:
                fixed = None
                if method == "RA+HG":
                    # scaling constants come from the HG pass when available
                    fixed = {"alpha1": hg_alphas.get("alpha1", FIXED_PROBE["alpha1"])}
                    if train.kind == "maxclique":
                        fixed["alpha2"] = hg_alphas.get("alpha2", FIXED_PROBE["alpha2"])
                result = tune_schedules(method, train, cfg, include_scaling=False,
                                        fixed_scaling=fixed)
                params = dict(zip(result.space.names, result.best_point))
                params.update(fixed or {})
                params["T"] = cfg.anneal_T[0]
                tag = method.replace("+", "_")
                export_results(result, "json", out / f"tuning_{tag}_p{density:g}.json")
                if result.heatmap is not None:
                    export_results(result, "csv", out / f"heatmap_{tag}_p{density:g}.csv")
            registry_set(registry, cfg.problem, method, density, params)
            tuned[(method, density)] = result
        if scaling_grid and "HG" in methods:
            params = registry_get(registry, cfg.problem, "HG", density)
            schedule = {k: v for k, v in params.items() if k != "alpha1"}
            grid_rows = tune_scaling_grid(train, schedule, cfg)
            export_results(grid_rows, "csv", out / f"scaling_p{density:g}.csv")

    (out / "baselines.json").write_text(json.dumps(baselines_payload, sort_keys=True, indent=1),
                                        encoding="utf-8")
    save_registry(registry, out / "registry.json")

    rows = run_comparison(methods, cfg.anneal_T, cfg.densities, cfg, registry)
    export_results(rows, "csv", out / "comparison.csv")
    export_results(rows, "json", out / "comparison.json")
    return {"registry": registry, "rows": rows, "tuned": tuned}
