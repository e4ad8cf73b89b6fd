"""Ising/QUBO coefficient containers, planting transforms, and exact solvers.

Both model classes store sparse coefficient maps for

    Q(x) = offset + sum_i h_i x_i + sum_{i<j} J_ij x_i x_j

with x_i in {-1,+1} (Ising) or {0,1} (QUBO).  Models are immutable after
construction and every operation here is a pure function, so everything in
this module is safe to share across threads.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

#: Largest variable count accepted by the exhaustive solvers (2^n states).
EXHAUSTIVE_LIMIT = 24

_DOMAINS = {"ising": (-1, 1), "qubo": (0, 1)}


def _check_terms(n: int, linear: dict, quadratic: dict) -> tuple[dict, dict]:
    clean_lin: dict[int, float] = {}
    for i, h in linear.items():
        i = int(i)
        if not 0 <= i < n:
            raise ValueError(f"linear index {i} outside [0, {n})")
        h = float(h)
        if not math.isfinite(h):
            raise ValueError(f"non-finite linear coefficient at {i}")
        clean_lin[i] = h
    clean_quad: dict[tuple[int, int], float] = {}
    for key, j_val in quadratic.items():
        i, j = (int(key[0]), int(key[1]))
        if not (0 <= i < j < n):
            raise ValueError(f"quadratic key ({i},{j}) must satisfy 0 <= i < j < n={n}")
        if (i, j) in clean_quad:
            raise ValueError(f"duplicate quadratic key ({i},{j})")
        j_val = float(j_val)
        if not math.isfinite(j_val):
            raise ValueError(f"non-finite coupler at ({i},{j})")
        clean_quad[(i, j)] = j_val
    return clean_lin, clean_quad


@dataclass(frozen=True)
class SpinConfig:
    """A single variable assignment, tagged with its domain.

    ``values`` holds -1/+1 entries for ``domain="ising"`` and 0/1 entries
    for ``domain="qubo"``.
    """

    values: tuple[int, ...]
    domain: str = "ising"

    def __post_init__(self):
        if self.domain not in _DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        allowed = _DOMAINS[self.domain]
        vals = tuple(int(v) for v in self.values)
        for v in vals:
            if v not in allowed:
                raise ValueError(f"value {v} not in domain {allowed}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int8)


def _coerce_config(config, domain: str, n: int) -> tuple[int, ...]:
    """Accept a SpinConfig or a plain sequence; check length and domain."""
    if isinstance(config, SpinConfig):
        if config.domain != domain:
            raise ValueError(f"config domain {config.domain!r} does not match model domain {domain!r}")
        vals = config.values
    else:
        vals = tuple(int(v) for v in config)
        allowed = _DOMAINS[domain]
        for v in vals:
            if v not in allowed:
                raise ValueError(f"value {v} not in model domain {allowed}")
    if len(vals) != n:
        raise ValueError(f"config length {len(vals)} does not match n={n}")
    return vals


@dataclass(frozen=True)
class IsingModel:
    """Sparse Ising model over spins in {-1,+1}."""

    n: int
    linear: dict = field(default_factory=dict)
    quadratic: dict = field(default_factory=dict)
    offset: float = 0.0

    domain = "ising"

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        lin, quad = _check_terms(self.n, self.linear, self.quadratic)
        if not math.isfinite(self.offset):
            raise ValueError("offset must be finite")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "offset", float(self.offset))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "domain": self.domain,
            "linear": [[i, h] for i, h in sorted(self.linear.items())],
            "quadratic": [[i, j, v] for (i, j), v in sorted(self.quadratic.items())],
            "offset": self.offset,
        }


@dataclass(frozen=True)
class QuboModel:
    """Sparse QUBO model over binary variables in {0,1}."""

    n: int
    linear: dict = field(default_factory=dict)
    quadratic: dict = field(default_factory=dict)
    offset: float = 0.0

    domain = "qubo"

    __post_init__ = IsingModel.__post_init__
    to_dict = IsingModel.to_dict


def model_from_dict(data: dict):
    """Inverse of ``to_dict`` for either model domain."""
    cls = {"ising": IsingModel, "qubo": QuboModel}[data["domain"]]
    return cls(
        n=int(data["n"]),
        linear={int(i): float(h) for i, h in data.get("linear", [])},
        quadratic={(int(i), int(j)): float(v) for i, j, v in data.get("quadratic", [])},
        offset=float(data.get("offset", 0.0)),
    )


def model_to_json(model) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)


def model_from_json(text: str):
    return model_from_dict(json.loads(text))


def energy(model, config) -> float:
    """Evaluate ``offset + sum_i h_i x_i + sum_{i<j} J_ij x_i x_j``."""
    vals = _coerce_config(config, model.domain, model.n)
    total = model.offset
    for i, h in model.linear.items():
        total += h * vals[i]
    for (i, j), v in model.quadratic.items():
        total += v * vals[i] * vals[j]
    return float(total)


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Convert a QUBO to the equivalent Ising model via x = (s + 1) / 2.

    Energies agree absolutely (offset included) for every configuration
    pair related by the substitution.
    """
    if not isinstance(q, QuboModel):
        raise TypeError("qubo_to_ising expects a QuboModel")
    h: dict[int, float] = {}
    j: dict[tuple[int, int], float] = {}
    offset = q.offset
    for i, a in q.linear.items():
        h[i] = h.get(i, 0.0) + a / 2.0
        offset += a / 2.0
    for (u, v), b in q.quadratic.items():
        j[(u, v)] = j.get((u, v), 0.0) + b / 4.0
        h[u] = h.get(u, 0.0) + b / 4.0
        h[v] = h.get(v, 0.0) + b / 4.0
        offset += b / 4.0
    h = {i: val for i, val in h.items() if val != 0.0}
    return IsingModel(n=q.n, linear=h, quadratic=j, offset=offset)


def homogenize(model: IsingModel) -> tuple[IsingModel, int | None]:
    """Eliminate linear terms by coupling them to a fresh slack spin.

    Each h_i becomes a coupler between variable i and the new last
    variable z, so fixing z=+1 recovers the original energies exactly.
    Models without linear terms are returned unchanged (no slack).
    """
    if not model.linear:
        return model, None
    z = model.n
    quad = dict(model.quadratic)
    for i, h in model.linear.items():
        quad[(i, z)] = h
    return IsingModel(n=model.n + 1, linear={}, quadratic=quad, offset=model.offset), z


@dataclass(frozen=True)
class PlantedModel:
    """A homogenized model carrying a planted solution bias.

    ``base`` is the model actually annealed: the homogenized input plus
    linear terms -alpha1 * x0_i on the original variables and -alpha2 on
    the slack spin (when one exists).  The bias term alone is minimized at
    (x0, z=+1).
    """

    base: IsingModel
    x0: SpinConfig
    alpha1: float
    alpha2: float
    slack_index: int | None

    def __post_init__(self):
        if self.slack_index is None and self.alpha2 != 0.0:
            raise ValueError("alpha2 must be 0 when no slack variable is present")
        expected = self.base.n - (0 if self.slack_index is None else 1)
        if len(self.x0) != expected:
            raise ValueError("x0 length does not match the pre-slack variable count")

    @property
    def original(self) -> IsingModel:
        """Reconstruct the un-planted input model (alpha terms and slack removed)."""
        if self.slack_index is None:
            return IsingModel(n=self.base.n, linear={}, quadratic=dict(self.base.quadratic),
                              offset=self.base.offset)
        z = self.slack_index
        linear = {}
        quadratic = {}
        for (i, j), v in self.base.quadratic.items():
            if j == z:
                linear[i] = v
            elif i == z:
                linear[j] = v
            else:
                quadratic[(i, j)] = v
        return IsingModel(n=self.base.n - 1, linear=linear, quadratic=quadratic,
                          offset=self.base.offset)


def plant(model: IsingModel, x0, alpha1: float, alpha2: float = 0.0) -> PlantedModel:
    """Encode ``x0`` into ``model`` as a scaled linear bias.

    The input is homogenized first; the returned base model adds
    h_i = -alpha1 * x0_i on the original variables and h_z = -alpha2 on
    the slack.  Requesting alpha2 > 0 for a model without linear terms is
    an error, since no slack is introduced.
    """
    if alpha1 < 0 or alpha2 < 0:
        raise ValueError("scaling constants must be nonnegative")
    vals = _coerce_config(x0, "ising", model.n)
    x0 = SpinConfig(vals, "ising")
    hom, z = homogenize(model)
    if z is None and alpha2 > 0:
        raise ValueError("alpha2 > 0 requested but the model has no linear terms (no slack added)")
    linear = {i: -alpha1 * x0.values[i] for i in range(model.n)}
    if z is not None:
        linear[z] = -alpha2
    base = IsingModel(n=hom.n, linear=linear, quadratic=dict(hom.quadratic), offset=hom.offset)
    return PlantedModel(base=base, x0=x0, alpha1=float(alpha1),
                        alpha2=float(alpha2) if z is not None else 0.0, slack_index=z)


def _config_values(k: int, n: int, domain: str) -> tuple[int, ...]:
    """Decode enumeration index k: bit i set means x_i = -1 (or 0-domain value 1)."""
    bits = [(k >> i) & 1 for i in range(n)]
    if domain == "ising":
        return tuple(1 - 2 * b for b in bits)
    return tuple(bits)


def enumerate_energies(model, ks: np.ndarray) -> np.ndarray:
    """Vectorized energies for the enumeration indices ``ks``."""
    e = np.full(ks.shape, model.offset, dtype=np.float64)
    cache: dict[int, np.ndarray] = {}

    def var(i: int) -> np.ndarray:
        arr = cache.get(i)
        if arr is None:
            bit = (ks >> i) & 1
            arr = (1 - 2 * bit).astype(np.float64) if model.domain == "ising" else bit.astype(np.float64)
            cache[i] = arr
        return arr

    for i, h in model.linear.items():
        e += h * var(i)
    for (i, j), v in model.quadratic.items():
        e += v * var(i) * var(j)
    return e


def brute_force_solve(model, limit: int = EXHAUSTIVE_LIMIT) -> tuple[float, list[SpinConfig]]:
    """Exact global minimum and all minimizers by full enumeration.

    Minimizers are compared with exact float equality; identical term
    arithmetic makes symmetric duplicates (e.g. global spin flips of a
    cut) compare equal.
    """
    if model.n > limit:
        raise ValueError(f"n={model.n} exceeds exhaustive limit {limit}")
    dim = 1 << model.n
    best = math.inf
    arg_ks: list[int] = []
    chunk = 1 << 18
    for start in range(0, dim, chunk):
        ks = np.arange(start, min(start + chunk, dim), dtype=np.int64)
        e = enumerate_energies(model, ks)
        lo = float(e.min())
        if lo < best:
            best = lo
            arg_ks = []
        if lo <= best:
            arg_ks.extend(int(k) for k in ks[e == best])
    configs = [SpinConfig(_config_values(k, model.n, model.domain), model.domain) for k in arg_ks]
    return best, configs


def filter_slack(samples, planted: PlantedModel):
    """Drop z=-1 samples, remove the slack coordinate, and re-evaluate energies.

    Returned energies refer to the *original* un-planted model; the alpha
    bias terms and the slack spin never contribute.  An empty result is a
    valid outcome and the caller decides how to treat it.  The fraction of
    shots with z=+1 is recorded in the output metadata.
    """
    from .samples import SampleSet, SampleRecord

    original = planted.original
    z = planted.slack_index
    total = sum(r.count for r in samples.records)
    merged: dict[tuple[int, ...], int] = {}
    for rec in samples.records:
        if len(rec.config) != planted.base.n:
            raise ValueError("sample width does not match the planted model")
        vals = rec.config
        if z is not None:
            if vals[z] == -1:
                continue
            vals = vals[:z] + vals[z + 1:]
        merged[vals] = merged.get(vals, 0) + rec.count
    records = tuple(
        SampleRecord(config=cfg, count=cnt, energy=energy(original, cfg))
        for cfg, cnt in sorted(merged.items())
    )
    kept = sum(r.count for r in records)
    meta = dict(samples.meta)
    meta["z_plus_fraction"] = (kept / total) if total else 0.0
    if z is not None:
        logger.info("filter_slack retained %d/%d shots (z=+1 fraction %.3f)",
                    kept, total, meta["z_plus_fraction"])
    return SampleSet(shots=kept, records=records, meta=meta)
