"""Anneal-fraction and h-gain schedule geometry.

Paths are polygonal lines in (time, value) space.  Time is dimensionless:
a schedule's unit is whatever the caller means by T, and every rule that
could depend on units (the h-gain slope bound) is expressed against
normalized time t/T so it is T-independent.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

#: Hardware-style defaults for h-gain path validation.
HGAIN_RANGE = (-5.0, 5.0)
HGAIN_MAX_POINTS = 20
HGAIN_SLOPE_BOUND = 500.0


@dataclass(frozen=True)
class Violation:
    """One violated schedule invariant; ``index`` points at the offending
    point or segment when applicable."""

    kind: str  # "time-order" | "endpoint" | "range" | "point-count" | "slope"
    index: int | None
    message: str


def _as_points(points) -> tuple[tuple[float, float], ...]:
    return tuple((float(t), float(v)) for t, v in points)


@dataclass(frozen=True)
class AnnealPath:
    """Anneal fraction s as a piecewise-linear function of time."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))

    @property
    def T(self) -> float:
        return self.points[-1][0]


@dataclass(frozen=True)
class HGainPath:
    """Gain g applied to linear biases, as a piecewise-linear function of time."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))

    @property
    def T(self) -> float:
        return self.points[-1][0]


def _common_violations(points, value_range, value_name) -> list[Violation]:
    out = []
    if len(points) < 2:
        out.append(Violation("point-count", None, "path needs at least two points"))
        return out
    if points[0][0] != 0.0:
        out.append(Violation("endpoint", 0, f"first point must be at t=0, got t={points[0][0]}"))
    for k in range(1, len(points)):
        if points[k][0] <= points[k - 1][0]:
            out.append(Violation("time-order", k, f"t must be strictly increasing at point {k}"))
    lo, hi = value_range
    for k, (_, v) in enumerate(points):
        if not np.isfinite(v) or v < lo or v > hi:
            out.append(Violation("range", k, f"{value_name}={v} outside [{lo}, {hi}] at point {k}"))
    return out


def validate(path, *, max_points: int = HGAIN_MAX_POINTS,
             slope_bound: float = HGAIN_SLOPE_BOUND,
             g_range: tuple[float, float] = HGAIN_RANGE) -> list[Violation]:
    """Report every violated invariant of a path; an empty list means valid.

    Violations are data, not exceptions, so invalid fixtures can be
    constructed and inspected.  The h-gain slope rule compares |dg| to
    ``slope_bound`` per unit of normalized time t/T.
    """
    if isinstance(path, AnnealPath):
        return _common_violations(path.points, (0.0, 1.0), "s")
    if isinstance(path, HGainPath):
        out = _common_violations(path.points, g_range, "g")
        pts = path.points
        if len(pts) > max_points:
            out.append(Violation("point-count", None,
                                 f"{len(pts)} points exceed the limit of {max_points}"))
        T = pts[-1][0]
        if T > 0:
            for k in range(1, len(pts)):
                dt_norm = (pts[k][0] - pts[k - 1][0]) / T
                if dt_norm <= 0:
                    continue  # already reported as time-order
                slope = abs(pts[k][1] - pts[k - 1][1]) / dt_norm
                if slope > slope_bound:
                    out.append(Violation("slope", k,
                                         f"|dg/d(t/T)|={slope:.6g} exceeds {slope_bound} on segment {k}"))
        return out
    raise TypeError(f"cannot validate {type(path).__name__}")


def _require_valid(path):
    violations = validate(path)
    if violations:
        raise ValueError("; ".join(v.message for v in violations))
    return path


def forward_path(T: float) -> AnnealPath:
    """Standard forward ramp s(t) = t/T."""
    if T <= 0:
        raise ValueError("T must be positive")
    return AnnealPath(((0.0, 0.0), (float(T), 1.0)))


def reverse_path(T: float, t_a: float, t_b: float, s_inv: float) -> AnnealPath:
    """Reverse anneal: drop from s=1 to s_inv at t_a, pause until t_b, return to 1 at T."""
    if T <= 0:
        raise ValueError("T must be positive")
    if not (0 < t_a <= t_b < T):
        raise ValueError(f"need 0 < t_a <= t_b < T, got t_a={t_a}, t_b={t_b}, T={T}")
    if not (0 <= s_inv < 1):
        raise ValueError(f"s_inv={s_inv} outside [0, 1)")
    pts = [(0.0, 1.0), (float(t_a), float(s_inv))]
    if t_b > t_a:
        pts.append((float(t_b), float(s_inv)))
    pts.append((float(T), 1.0))
    return _require_valid(AnnealPath(tuple(pts)))


def hgain_path(T: float, t_mid: float, g_mid: float, g0: float = 5.0) -> HGainPath:
    """Three-point gain path (0, g0) -> (t_mid*T, g_mid) -> (T, 0)."""
    if T <= 0:
        raise ValueError("T must be positive")
    if not (0 < t_mid < 1):
        raise ValueError(f"t_mid={t_mid} outside (0, 1)")
    if not (0 <= g_mid <= 5):
        raise ValueError(f"g_mid={g_mid} outside [0, 5]")
    path = HGainPath(((0.0, float(g0)), (float(t_mid) * float(T), float(g_mid)), (float(T), 0.0)))
    return _require_valid(path)


def eval_path(path, t: float) -> float:
    """Piecewise-linear interpolation; exact at knots; t must lie in [0, T]."""
    pts = path.points
    T = pts[-1][0]
    if not (0.0 <= t <= T):
        raise ValueError(f"t={t} outside the schedule range [0, {T}]")
    ts = [p[0] for p in pts]
    vs = [p[1] for p in pts]
    return float(np.interp(t, ts, vs))


@dataclass(frozen=True)
class AnnealFunctions:
    """Sampled anneal envelopes A(s) and B(s), interpolated piecewise-linearly.

    A weights the transverse field (non-increasing, >= 0); B weights the
    problem Hamiltonian (non-decreasing, >= 0).  The default is the
    dimensionless linear pair A(s)=1-s, B(s)=s.
    """

    s_grid: tuple[float, ...]
    a_vals: tuple[float, ...]
    b_vals: tuple[float, ...]

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=float)
        a = np.asarray(self.a_vals, dtype=float)
        b = np.asarray(self.b_vals, dtype=float)
        if not (len(s) == len(a) == len(b)) or len(s) < 2:
            raise ValueError("need equal-length s, A, B samples (at least two)")
        if not np.all(np.isfinite(s)) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise ValueError("anneal function samples must be finite")
        if np.any(np.diff(s) <= 0):
            raise ValueError("s grid must be strictly increasing")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise ValueError("s grid must cover [0, 1]")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("A and B must be nonnegative")
        if np.any(np.diff(a) > 1e-12):
            raise ValueError("A(s) must be non-increasing")
        if np.any(np.diff(b) < -1e-12):
            raise ValueError("B(s) must be non-decreasing")
        object.__setattr__(self, "s_grid", tuple(float(x) for x in s))
        object.__setattr__(self, "a_vals", tuple(float(x) for x in a))
        object.__setattr__(self, "b_vals", tuple(float(x) for x in b))

    def a(self, s):
        return np.interp(s, self.s_grid, self.a_vals)

    def b(self, s):
        return np.interp(s, self.s_grid, self.b_vals)

    @property
    def b_max(self) -> float:
        return max(self.b_vals)


def default_anneal_functions() -> AnnealFunctions:
    """A(s) = 1 - s, B(s) = s with unit peak amplitudes."""
    return AnnealFunctions(s_grid=(0.0, 1.0), a_vals=(1.0, 0.0), b_vals=(0.0, 1.0))


def load_anneal_functions(source) -> AnnealFunctions:
    """Read A(s), B(s) samples from CSV with header ``s,A,B``."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["s", "A", "B"]:
        raise ValueError('anneal-function CSV must start with header "s,A,B"')
    rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader if r]
    if not rows:
        raise ValueError("anneal-function CSV has no data rows")
    s, a, b = zip(*rows)
    return AnnealFunctions(s_grid=s, a_vals=a, b_vals=b)


@dataclass(frozen=True)
class SchedulePlan:
    """A complete anneal prescription: s(t), optional g(t), and envelopes."""

    anneal_path: AnnealPath
    hgain_path: HGainPath | None = None
    functions: AnnealFunctions = field(default_factory=default_anneal_functions)
    reinitialize: bool = True

    def __post_init__(self):
        bad = validate(self.anneal_path)
        if bad:
            raise ValueError("invalid anneal path: " + "; ".join(v.message for v in bad))
        if self.hgain_path is not None:
            bad = validate(self.hgain_path)
            if bad:
                raise ValueError("invalid h-gain path: " + "; ".join(v.message for v in bad))
            if self.hgain_path.T != self.anneal_path.T:
                raise ValueError("anneal and h-gain paths must share the same T")

    @property
    def T(self) -> float:
        return self.anneal_path.T

    @property
    def is_reverse(self) -> bool:
        return self.anneal_path.points[0][1] == 1.0

    def s(self, t: float) -> float:
        return eval_path(self.anneal_path, t)

    def g(self, t: float) -> float:
        """Gain at time t; 1 when no h-gain path is attached (plain biases)."""
        if self.hgain_path is None:
            return 1.0
        return eval_path(self.hgain_path, t)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "anneal": [[t, s] for t, s in self.anneal_path.points],
            "hgain": [[t, g] for t, g in self.hgain_path.points] if self.hgain_path else None,
            "reinitialize": self.reinitialize,
        }

    def digest(self) -> str:
        return hashlib.sha1(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


def plan_from_dict(data: dict, functions: AnnealFunctions | None = None) -> SchedulePlan:
    anneal = AnnealPath(tuple((t, s) for t, s in data["anneal"]))
    hg = data.get("hgain")
    hgain = HGainPath(tuple((t, g) for t, g in hg)) if hg is not None else None
    return SchedulePlan(anneal_path=anneal, hgain_path=hgain,
                        functions=functions or default_anneal_functions(),
                        reinitialize=bool(data.get("reinitialize", True)))


def plan_to_json(plan: SchedulePlan) -> str:
    return json.dumps(plan.to_dict(), sort_keys=True)


def plan_from_json(text: str, functions: AnnealFunctions | None = None) -> SchedulePlan:
    return plan_from_dict(json.loads(text), functions)


def effective_gain(plan: SchedulePlan, t: float, normalize_b: bool = False) -> float:
    """Actually-applied linear bias weight B(s(t)) * g(t) / 2 for an RA+HG plan.

    With ``normalize_b`` the envelope is rescaled to peak 1, the
    convention used when plotting combined schedules.
    """
    if plan.hgain_path is None:
        raise ValueError("plan has no h-gain path")
    b = float(plan.functions.b(plan.s(t)))
    if normalize_b:
        b /= plan.functions.b_max
    return b * plan.g(t) / 2.0
