"""Gaussian-process Bayesian optimization over bounded parameter boxes.

The surrogate is GP regression with an RBF kernel carrying per-dimension
length scales (automatic relevance) and a fixed observation-noise level.
Targets are standardized internally (zero prior mean on the standardized
scale) and hyperparameters are set by multi-start maximization of the log
marginal likelihood.  Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.stats import norm

logger = logging.getLogger(__name__)

#: Fitness value recorded when an evaluation fails or yields no usable samples.
SENTINEL = -1000.0

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)
_LS_BOUNDS = (math.log(1e-3), math.log(1e3))
_SV_BOUNDS = (math.log(1e-3), math.log(1e3))


@dataclass(frozen=True)
class SearchSpace:
    """Ordered box of named dimensions."""

    dims: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        names = [d[0] for d in self.dims]
        if len(set(names)) != len(names):
            raise ValueError("dimension names must be unique")
        clean = []
        for name, lo, hi in self.dims:
            lo, hi = float(lo), float(hi)
            if not lo < hi:
                raise ValueError(f"dimension {name!r} needs lower < upper, got [{lo}, {hi}]")
            clean.append((str(name), lo, hi))
        object.__setattr__(self, "dims", tuple(clean))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d[0] for d in self.dims)

    @property
    def lower(self) -> np.ndarray:
        return np.array([d[1] for d in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d[2] for d in self.dims])

    def __len__(self) -> int:
        return len(self.dims)

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(m, len(self)))

    def contains(self, point) -> bool:
        x = np.asarray(point, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, point) -> np.ndarray:
        return np.clip(np.asarray(point, dtype=float), self.lower, self.upper)


@dataclass(frozen=True)
class Observation:
    point: tuple[float, ...]
    value: float

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError("observation value must be finite (use the sentinel for failures)")
        object.__setattr__(self, "value", v)


def _sqdist_per_dim(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """(d, ma, mb) squared differences per dimension."""
    diff = xa[:, None, :] - xb[None, :, :]
    return np.moveaxis(diff ** 2, 2, 0)


class SingularKernelError(RuntimeError):
    """Kernel matrix remained singular after maximum jitter escalation."""


class GPModel:
    """Fitted Gaussian-process surrogate with a cached Cholesky factor."""

    def __init__(self, x: np.ndarray, y: np.ndarray, length_scales: np.ndarray,
                 signal_variance: float, noise: float):
        self.x = np.atleast_2d(np.asarray(x, dtype=float))
        self.y = np.asarray(y, dtype=float)
        self.length_scales = np.asarray(length_scales, dtype=float)
        self.signal_variance = float(signal_variance)
        self.noise = float(noise)
        self.y_mean = float(self.y.mean())
        std = float(self.y.std())
        self.y_std = std if std > 0 else 1.0
        self.y_s = (self.y - self.y_mean) / self.y_std
        k = self._kernel(self.x, self.x)
        m = len(self.y)
        self.jitter = 0.0
        factor = None
        for jit in _JITTERS:
            try:
                factor = cho_factor(k + (self.noise + jit) * np.eye(m), lower=True)
                self.jitter = jit
                break
            except np.linalg.LinAlgError:
                logger.warning("kernel factorization failed, escalating jitter past %g", jit)
        if factor is None:
            raise SingularKernelError("kernel matrix singular even at maximum jitter")
        if self.jitter > 0:
            logger.info("kernel factorized with jitter %g", self.jitter)
        self._factor = factor
        self._alpha = cho_solve(factor, self.y_s)

    def _kernel(self, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
        q = _sqdist_per_dim(xa, xb) / self.length_scales[:, None, None] ** 2
        return self.signal_variance * np.exp(-0.5 * q.sum(axis=0))

    def predict(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and (latent) variance at one or many points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k_star = self._kernel(pts, self.x)
        mean = self.y_mean + self.y_std * (k_star @ self._alpha)
        v = solve_triangular(self._factor[0], k_star.T, lower=True)
        var_s = self.signal_variance - np.sum(v ** 2, axis=0)
        clipped = var_s < 0
        if clipped.any():
            logger.debug("clamped %d negative posterior variances to 0", int(clipped.sum()))
            var_s = np.where(clipped, 0.0, var_s)
        return mean, self.y_std ** 2 * var_s

    @property
    def best_observed(self) -> float:
        return float(self.y.max())


def _log_marginal_likelihood_and_grad(theta: np.ndarray, sq: np.ndarray, y_s: np.ndarray,
                                      noise: float) -> tuple[float, np.ndarray]:
    d = sq.shape[0]
    m = len(y_s)
    ls = np.exp(theta[:d])
    sv = math.exp(theta[d])
    q = sq / ls[:, None, None] ** 2
    r = np.exp(-0.5 * q.sum(axis=0))
    k = sv * r + (noise + 1e-10) * np.eye(m)
    try:
        factor = cho_factor(k, lower=True)
    except np.linalg.LinAlgError:
        return -1e25, np.zeros(d + 1)
    alpha = cho_solve(factor, y_s)
    lml = -0.5 * float(y_s @ alpha) - float(np.log(np.diag(factor[0])).sum()) \
        - 0.5 * m * math.log(2 * math.pi)
    kinv = cho_solve(factor, np.eye(m))
    w = np.outer(alpha, alpha) - kinv
    grad = np.empty(d + 1)
    for dim in range(d):
        dk = sv * r * q[dim]  # dK / d(log ls_dim)
        grad[dim] = 0.5 * float(np.sum(w * dk))
    grad[d] = 0.5 * float(np.sum(w * (sv * r)))  # dK / d(log sv)
    return lml, grad


def gp_fit(obs: list[Observation], noise: float, *, seed: int = 0, n_restarts: int = 3,
           warm_start: tuple[np.ndarray, float] | None = None) -> GPModel:
    """Fit kernel hyperparameters by multi-start likelihood maximization.

    ``noise`` is the fixed observation-noise level added to the kernel
    diagonal (in standardized target units).  Deterministic per seed.
    """
    if not obs:
        raise ValueError("need at least one observation")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    x = np.array([o.point for o in obs], dtype=float)
    y = np.array([o.value for o in obs], dtype=float)
    d = x.shape[1]
    y_std = float(y.std()) or 1.0
    y_s = (y - y.mean()) / y_std
    sq = _sqdist_per_dim(x, x)

    span = np.maximum(x.max(axis=0) - x.min(axis=0), 1e-2)
    starts = [np.concatenate([np.log(np.clip(0.5 * span, 1e-3, 1e3)), [0.0]])]
    if warm_start is not None:
        starts.insert(0, np.concatenate([np.log(warm_start[0]), [math.log(warm_start[1])]]))
    rng = np.random.default_rng(seed)
    for _ in range(max(0, n_restarts - len(starts))):
        starts.append(np.concatenate([
            rng.uniform(_LS_BOUNDS[0], _LS_BOUNDS[1], d),
            rng.uniform(_SV_BOUNDS[0], _SV_BOUNDS[1], 1),
        ]))

    if len(obs) == 1:
        best_theta = starts[0]
    else:
        bounds = [_LS_BOUNDS] * d + [_SV_BOUNDS]
        best_theta, best_val = None, -math.inf
        for theta0 in starts:
            res = minimize(lambda th: tuple(-v for v in
                                            _log_marginal_likelihood_and_grad(th, sq, y_s, noise)),
                           np.clip(theta0, [b[0] for b in bounds], [b[1] for b in bounds]),
                           jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": 40})
            if -res.fun > best_val:
                best_val, best_theta = -res.fun, res.x
    return GPModel(x, y, np.exp(best_theta[:d]), math.exp(best_theta[d]), noise)


def gp_predict(model: GPModel, point) -> tuple[float, float]:
    """Posterior mean and variance at a single point."""
    mean, var = model.predict(np.atleast_2d(point))
    return float(mean[0]), float(var[0])


def acquisition(model: GPModel, point, kind: str = "ucb", kappa: float = 2.576,
                xi: float = 0.0) -> float:
    """UCB (mean + kappa * std) or expected improvement over the incumbent."""
    return float(_acquisition_vec(model, np.atleast_2d(point), kind, kappa, xi)[0])


def _acquisition_vec(model: GPModel, pts: np.ndarray, kind: str, kappa: float,
                     xi: float) -> np.ndarray:
    mean, var = model.predict(pts)
    std = np.sqrt(var)
    if kind == "ucb":
        return mean + kappa * std
    if kind == "ei":
        best = model.best_observed
        imp = mean - best - xi
        out = np.maximum(imp, 0.0)
        pos = std > 0
        z = imp[pos] / std[pos]
        out[pos] = imp[pos] * norm.cdf(z) + std[pos] * norm.pdf(z)
        return out
    raise ValueError(f"unknown acquisition kind {kind!r}")


def suggest_next(model: GPModel, space: SearchSpace, acq: str = "ucb",
                 rng: np.random.Generator | None = None, *, kappa: float = 2.576,
                 xi: float = 0.0, n_starts: int = 1000) -> tuple[float, ...]:
    """Acquisition argmax via random starts plus coordinate-wise refinement.

    Deterministic per rng state; ties resolve to the first-found maximum.
    """
    rng = rng or np.random.default_rng(0)
    cands = space.sample(rng, n_starts)
    vals = _acquisition_vec(model, cands, acq, kappa, xi)
    best = cands[int(np.argmax(vals))].copy()
    best_val = float(vals.max())
    window = (space.upper - space.lower) * 0.1
    for _ in range(3):
        for dim in range(len(space)):
            grid = np.linspace(best[dim] - window[dim], best[dim] + window[dim], 11)
            grid = np.clip(grid, space.lower[dim], space.upper[dim])
            trial = np.tile(best, (len(grid), 1))
            trial[:, dim] = grid
            tv = _acquisition_vec(model, trial, acq, kappa, xi)
            k = int(np.argmax(tv))
            if tv[k] > best_val:
                best_val = float(tv[k])
                best = trial[k].copy()
        window *= 0.5
    return tuple(float(v) for v in best)


@dataclass(frozen=True)
class HeatmapGrid:
    """Surrogate mean/variance sampled on a regular 2-D grid."""

    dim_names: tuple[str, str]
    axis0: tuple[float, ...]
    axis1: tuple[float, ...]
    mean: tuple[tuple[float, ...], ...]
    variance: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dim_names),
            "axis0": list(self.axis0),
            "axis1": list(self.axis1),
            "mean": [list(row) for row in self.mean],
            "variance": [list(row) for row in self.variance],
        }


@dataclass(frozen=True)
class OptResult:
    """Outcome of a Bayesian-optimization run (maximization)."""

    best_point: tuple[float, ...]
    best_value: float
    history: tuple[Observation, ...]
    space: SearchSpace
    heatmap: HeatmapGrid | None = None

    def to_dict(self) -> dict:
        return {
            "best_point": list(self.best_point),
            "best_value": self.best_value,
            "history": [{"point": list(o.point), "value": o.value} for o in self.history],
            "space": [[n, lo, hi] for n, lo, hi in self.space.dims],
            "heatmap": self.heatmap.to_dict() if self.heatmap else None,
        }


def optresult_to_json(result: OptResult) -> str:
    return json.dumps(result.to_dict(), sort_keys=True)


def optresult_from_dict(data: dict) -> OptResult:
    space = SearchSpace(tuple((n, lo, hi) for n, lo, hi in data["space"]))
    history = tuple(Observation(tuple(o["point"]), o["value"]) for o in data["history"])
    hm = data.get("heatmap")
    heatmap = None
    if hm:
        heatmap = HeatmapGrid(
            dim_names=tuple(hm["dims"]), axis0=tuple(hm["axis0"]), axis1=tuple(hm["axis1"]),
            mean=tuple(tuple(r) for r in hm["mean"]),
            variance=tuple(tuple(r) for r in hm["variance"]))
    return OptResult(tuple(data["best_point"]), float(data["best_value"]), history, space, heatmap)


def surrogate_heatmap(model: GPModel, space: SearchSpace, resolution: int = 50) -> HeatmapGrid:
    """Evaluate the surrogate on a regular grid of a 2-D space.

    Grid entries go through the same single-point path as ``gp_predict``
    so exported heatmaps reproduce point queries bit-exactly.
    """
    if len(space) != 2:
        raise ValueError("heatmaps require a 2-D search space")
    ax0 = np.linspace(space.lower[0], space.upper[0], resolution)
    ax1 = np.linspace(space.lower[1], space.upper[1], resolution)
    mean = np.empty((resolution, resolution))
    var = np.empty((resolution, resolution))
    for i, a in enumerate(ax0):
        for j, b in enumerate(ax1):
            mean[i, j], var[i, j] = gp_predict(model, (float(a), float(b)))
    return HeatmapGrid(dim_names=(space.names[0], space.names[1]),
                       axis0=tuple(float(v) for v in ax0), axis1=tuple(float(v) for v in ax1),
                       mean=tuple(tuple(float(x) for x in row) for row in mean),
                       variance=tuple(tuple(float(x) for x in row) for row in var))


def _safe_eval(fitness, point) -> float:
    try:
        value = float(fitness(point))
    except Exception as exc:  # recorded as sentinel, optimization continues
        logger.warning("fitness evaluation failed at %s: %s", point, exc)
        return SENTINEL
    if not math.isfinite(value):
        logger.warning("fitness returned non-finite value at %s", point)
        return SENTINEL
    return value


def optimize(fitness, space: SearchSpace, init_points: int, n_iter: int, noise: float,
             seed: int = 0, *, acq: str = "ucb", kappa: float = 2.576, xi: float = 0.0,
             probe_points: list | None = None, heatmap_resolution: int = 50) -> OptResult:
    """Random exploration followed by GP-guided iterations (maximization).

    Exactly ``init_points + n_iter`` fitness calls are made.  Optional
    ``probe_points`` are evaluated first and count against the
    ``init_points`` budget (the way a previous best solution seeds a
    refit).  Failures and non-finite values are recorded as the -1000
    sentinel and participate in fitting unmodified.

    The surrogate's factorization always covers every observation; kernel
    hyperparameters are re-optimized each iteration while the training
    set is small and every fifth iteration past 150 points (warm-started,
    still deterministic).
    """
    if init_points < 1:
        raise ValueError("init_points must be >= 1")
    if n_iter < 0:
        raise ValueError("n_iter must be >= 0")
    probes = [tuple(float(v) for v in p) for p in (probe_points or [])]
    if len(probes) > init_points:
        raise ValueError("more probe points than the init_points budget")
    for p in probes:
        if not space.contains(p):
            raise ValueError(f"probe point {p} outside the search space")

    rng = np.random.default_rng(seed)
    history: list[Observation] = []
    for p in probes:
        history.append(Observation(p, _safe_eval(fitness, p)))
    for row in space.sample(rng, init_points - len(probes)):
        p = tuple(float(v) for v in row)
        history.append(Observation(p, _safe_eval(fitness, p)))

    warm = None
    for it in range(n_iter):
        refit = warm is None or len(history) <= 150 or it % 5 == 0
        if refit:
            model = gp_fit(history, noise, seed=seed + 7919 * (it + 1), warm_start=warm,
                           n_restarts=2 if warm is not None else 3)
            warm = (model.length_scales, model.signal_variance)
        else:
            model = GPModel(np.array([o.point for o in history]),
                            np.array([o.value for o in history]),
                            warm[0], warm[1], noise)
        p = suggest_next(model, space, acq, rng, kappa=kappa, xi=xi)
        history.append(Observation(p, _safe_eval(fitness, p)))

    best = max(history, key=lambda o: o.value)
    heatmap = None
    if len(space) == 2:
        final = gp_fit(history, noise, seed=seed, warm_start=warm)
        heatmap = surrogate_heatmap(final, space, heatmap_resolution)
    return OptResult(best_point=best.point, best_value=best.value,
                     history=tuple(history), space=space, heatmap=heatmap)
