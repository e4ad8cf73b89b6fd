"""Weighted Erdős–Rényi instances and Max-Cut / Max-Clique formulations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ising import EXHAUSTIVE_LIMIT, IsingModel, QuboModel, SpinConfig, _coerce_config


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with edge weights and optional vertex weights."""

    n: int
    edges: tuple[tuple[int, int, float], ...]
    vertex_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        seen = set()
        clean = []
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < v < self.n):
                raise ValueError(f"edge ({u},{v}) must satisfy 0 <= u < v < n={self.n}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))
        if self.vertex_weights is not None:
            vw = tuple(float(w) for w in self.vertex_weights)
            if len(vw) != self.n:
                raise ValueError("vertex_weights length must equal n")
            object.__setattr__(self, "vertex_weights", vw)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(u, v) for u, v, _ in self.edges}

    def total_edge_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [[u, v, w] for u, v, w in self.edges],
            "vertex_weights": list(self.vertex_weights) if self.vertex_weights is not None else None,
        }


def graph_from_dict(data: dict) -> WeightedGraph:
    vw = data.get("vertex_weights")
    return WeightedGraph(
        n=int(data["n"]),
        edges=tuple((int(u), int(v), float(w)) for u, v, w in data["edges"]),
        vertex_weights=tuple(float(w) for w in vw) if vw is not None else None,
    )


def graph_to_json(g: WeightedGraph) -> str:
    return json.dumps(g.to_dict(), sort_keys=True)


def graph_from_json(text: str) -> WeightedGraph:
    return graph_from_dict(json.loads(text))


@dataclass(frozen=True)
class ProblemInstance:
    graph: WeightedGraph
    kind: str  # "maxcut" | "maxclique"
    density: float
    seed: int

    def __post_init__(self):
        if self.kind not in ("maxcut", "maxclique"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == "maxclique" and self.graph.vertex_weights is None:
            raise ValueError("maxclique instances require vertex weights")


def _uniform_open(rng: np.random.Generator, lo: float, hi: float, size: int) -> np.ndarray:
    """i.i.d. uniform samples on the open interval (lo, hi); endpoint draws rejected."""
    if not (lo < hi) or not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"degenerate weight range ({lo}, {hi})")
    vals = rng.uniform(lo, hi, size)
    bad = (vals <= lo) | (vals >= hi)
    while bad.any():
        vals[bad] = rng.uniform(lo, hi, int(bad.sum()))
        bad = (vals <= lo) | (vals >= hi)
    return vals


def gen_er_graph(n: int, p: float, edge_w: tuple[float, float] | None = None,
                 vertex_w: tuple[float, float] | None = None, seed: int = 0) -> WeightedGraph:
    """Erdős–Rényi G(n, p) with open-interval uniform weights.

    Each unordered pair is included independently with probability p.
    Edges default to weight 1.0 when no edge range is given; vertex
    weights are only attached when a range is given.  Deterministic for a
    fixed (n, p, ranges, seed).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability p={p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    us, vs = iu[mask], ju[mask]
    if edge_w is not None:
        ws = _uniform_open(rng, edge_w[0], edge_w[1], len(us))
    else:
        ws = np.ones(len(us))
    vertex_weights = None
    if vertex_w is not None:
        vertex_weights = tuple(_uniform_open(rng, vertex_w[0], vertex_w[1], n))
    edges = tuple((int(u), int(v), float(w)) for u, v, w in zip(us, vs, ws))
    return WeightedGraph(n=n, edges=edges, vertex_weights=vertex_weights)


def maxcut_ising(g: WeightedGraph) -> IsingModel:
    """Weighted Max-Cut as couplers J_ij = w((i,j)); no linear terms."""
    quad = {(u, v): w for u, v, w in g.edges}
    return IsingModel(n=g.n, linear={}, quadratic=quad, offset=0.0)


def cut_value(g: WeightedGraph, config) -> float:
    """Total weight of edges crossing the partition encoded by a +/-1 config."""
    vals = _coerce_config(config, "ising", g.n)
    return float(sum(w for u, v, w in g.edges if vals[u] != vals[v]))


def maxclique_qubo(g: WeightedGraph) -> QuboModel:
    """Weighted Max-Clique QUBO: -sum w(i) x_i + 2 sum max(w(i),w(j)) x_i x_j.

    The quadratic penalty runs over non-adjacent pairs (the complement
    graph), so any minimizer's support is a clique and the linear reward
    selects the heaviest one.
    """
    if g.vertex_weights is None:
        raise ValueError("maxclique formulation requires vertex weights")
    w = g.vertex_weights
    for i, wi in enumerate(w):
        if wi <= 0:
            raise ValueError(f"vertex weight w({i})={wi} must be strictly positive")
    present = g.edge_set()
    linear = {i: -w[i] for i in range(g.n)}
    quad = {}
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if (i, j) not in present:
                quad[(i, j)] = 2.0 * max(w[i], w[j])
    return QuboModel(n=g.n, linear=linear, quadratic=quad, offset=0.0)


def clique_check(g: WeightedGraph, subset) -> tuple[bool, float]:
    """Whether the selected vertices form a clique, plus their weight sum.

    The weight is reported regardless of validity; the empty subset is a
    clique of weight 0 by convention.
    """
    vals = _coerce_config(subset, "qubo", g.n)
    selected = [i for i, v in enumerate(vals) if v == 1]
    weight = 0.0
    if g.vertex_weights is not None:
        weight = float(sum(g.vertex_weights[i] for i in selected))
    present = g.edge_set()
    for a in range(len(selected)):
        for b in range(a + 1, len(selected)):
            if (selected[a], selected[b]) not in present:
                return False, weight
    return True, weight


def brute_force_maxclique(g: WeightedGraph, limit: int = EXHAUSTIVE_LIMIT) -> tuple[float, tuple[int, ...]]:
    """Exact max-weight clique by recursive expansion with weight-bound pruning."""
    if g.n > limit:
        raise ValueError(f"n={g.n} exceeds exhaustive limit {limit}")
    if g.vertex_weights is None:
        raise ValueError("brute_force_maxclique requires vertex weights")
    w = g.vertex_weights
    adj = [0] * g.n
    for u, v, _ in g.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u

    def mask_weight(mask: int) -> float:
        total = 0.0
        while mask:
            b = mask & -mask
            total += w[b.bit_length() - 1]
            mask ^= b
        return total

    best_w = 0.0
    best_mask = 0

    def expand(current: int, cand: int, cur_w: float):
        nonlocal best_w, best_mask
        if cur_w > best_w:
            best_w, best_mask = cur_w, current
        if not cand or cur_w + mask_weight(cand) <= best_w:
            return
        while cand:
            b = cand & -cand
            v = b.bit_length() - 1
            expand(current | b, cand & adj[v], cur_w + w[v])
            cand ^= b
            if cur_w + mask_weight(cand) <= best_w:
                return

    expand(0, (1 << g.n) - 1, 0.0)
    subset = tuple(i for i in range(g.n) if best_mask >> i & 1)
    return best_w, subset


def brute_force_maxcut(g: WeightedGraph) -> tuple[float, SpinConfig]:
    """Exhaustive maximum cut weight over all 2^(n-1) partitions."""
    if g.n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"n={g.n} exceeds exhaustive limit {EXHAUSTIVE_LIMIT}")
    best = -math.inf
    best_cfg = None
    for k in range(1 << max(g.n - 1, 0)):
        vals = tuple(1 - 2 * ((k >> i) & 1) for i in range(g.n - 1)) + (1,)
        c = cut_value(g, vals)
        if c > best:
            best, best_cfg = c, vals
    return float(best), SpinConfig(best_cfg, "ising")
