"""Tests for graph generation and the Max-Cut / Max-Clique formulations."""

import itertools
import math

import numpy as np
import pytest

from annealab.ising import brute_force_solve, energy
from annealab.problems import (WeightedGraph, brute_force_maxclique, brute_force_maxcut,
                               clique_check, cut_value, gen_er_graph, graph_from_json,
                               graph_to_json, maxclique_qubo, maxcut_ising, ProblemInstance)


class TestGeneration:
    def test_p_zero_no_edges(self):
        assert gen_er_graph(10, 0.0, seed=1).edges == ()

    def test_p_one_complete(self):
        g = gen_er_graph(4, 1.0, edge_w=(-1, 1), seed=1)
        assert len(g.edges) == 6

    def test_edge_count_binomial(self):
        # mean over 100 seeds within 3 sigma of p * C(n,2) under the binomial model
        n, p, seeds = 200, 0.3, 100
        pairs = n * (n - 1) // 2
        counts = [len(gen_er_graph(n, p, seed=s).edges) for s in range(seeds)]
        sigma_mean = math.sqrt(pairs * p * (1 - p) / seeds)
        assert abs(np.mean(counts) - p * pairs) < 3 * sigma_mean

    def test_open_interval_weights(self):
        g = gen_er_graph(30, 0.8, edge_w=(-1, 1), vertex_w=(0.001, 1), seed=2)
        for _, _, w in g.edges:
            assert -1 < w < 1
        for w in g.vertex_weights:
            assert 0.001 < w < 1

    def test_determinism_byte_for_byte(self):
        a = gen_er_graph(25, 0.4, edge_w=(-1, 1), vertex_w=(0.001, 1), seed=77)
        b = gen_er_graph(25, 0.4, edge_w=(-1, 1), vertex_w=(0.001, 1), seed=77)
        assert graph_to_json(a) == graph_to_json(b)
        c = gen_er_graph(25, 0.4, edge_w=(-1, 1), vertex_w=(0.001, 1), seed=78)
        assert graph_to_json(a) != graph_to_json(c)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            gen_er_graph(5, 1.5)
        with pytest.raises(ValueError):
            gen_er_graph(5, 0.5, edge_w=(1, 1))
        with pytest.raises(ValueError):
            gen_er_graph(0, 0.5)

    def test_graph_validation(self):
        with pytest.raises(ValueError):
            WeightedGraph(n=3, edges=((0, 0, 1.0),))
        with pytest.raises(ValueError):
            WeightedGraph(n=3, edges=((1, 0, 1.0),))
        with pytest.raises(ValueError):
            WeightedGraph(n=3, edges=((0, 1, 1.0), (0, 1, 2.0)))

    def test_json_round_trip(self):
        g = gen_er_graph(8, 0.5, edge_w=(-1, 1), vertex_w=(0.001, 1), seed=5)
        assert graph_from_json(graph_to_json(g)) == g

    def test_instance_requires_vertex_weights_for_clique(self):
        g = gen_er_graph(4, 0.5, seed=0)
        with pytest.raises(ValueError):
            ProblemInstance(graph=g, kind="maxclique", density=0.5, seed=0)


class TestMaxCut:
    def test_triangle_unit_weights(self):
        g = WeightedGraph(n=3, edges=((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))
        model = maxcut_ising(g)
        assert model.quadratic == {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0}
        assert model.linear == {} and model.offset == 0.0
        lo, _ = brute_force_solve(model)
        assert lo == -1.0  # any 2-1 split cuts two of three edges

    def test_single_edge(self):
        g = WeightedGraph(n=2, edges=((0, 1, 0.8),))
        lo, argmins = brute_force_solve(maxcut_ising(g))
        assert lo == pytest.approx(-0.8)
        for cfg in argmins:
            assert cfg.values[0] != cfg.values[1]

    def test_minimizer_attains_exhaustive_maxcut(self):
        for seed in range(5):
            g = gen_er_graph(8, 0.5, edge_w=(-1, 1), seed=seed)
            model = maxcut_ising(g)
            _, argmins = brute_force_solve(model)
            best_cut, _ = brute_force_maxcut(g)
            assert cut_value(g, argmins[0]) == pytest.approx(best_cut, rel=1e-12)

    def test_cut_value_trivial_cases(self):
        g = WeightedGraph(n=3, edges=((0, 1, 0.7),))
        assert cut_value(g, (1, 1, 1)) == 0.0
        assert cut_value(g, (1, -1, 1)) == pytest.approx(0.7)

    def test_cut_energy_identity(self):
        rng = np.random.default_rng(12)
        for seed in range(10):
            g = gen_er_graph(9, 0.6, edge_w=(-1, 1), seed=seed)
            model = maxcut_ising(g)
            w_total = g.total_edge_weight()
            cfg = tuple(int(v) for v in rng.choice([-1, 1], 9))
            lhs = cut_value(g, cfg)
            rhs = (w_total - energy(model, cfg)) / 2.0
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def exhaustive_maxclique(g):
    """Independent oracle: test all subsets against the adjacency matrix."""
    adj = np.zeros((g.n, g.n), dtype=bool)
    for u, v, _ in g.edges:
        adj[u, v] = adj[v, u] = True
    best_w, best_set = 0.0, ()
    for r in range(g.n + 1):
        for sub in itertools.combinations(range(g.n), r):
            if all(adj[a, b] for a, b in itertools.combinations(sub, 2)):
                w = sum(g.vertex_weights[v] for v in sub)
                if w > best_w:
                    best_w, best_set = w, sub
    return best_w, best_set


class TestMaxClique:
    def test_complete_graph_selects_all(self):
        g = WeightedGraph(n=3, edges=((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)),
                          vertex_weights=(0.5, 0.6, 0.7))
        lo, argmins = brute_force_solve(maxclique_qubo(g))
        assert lo == pytest.approx(-1.8)
        assert argmins[0].values == (1, 1, 1)

    def test_empty_graph_selects_single_vertex(self):
        g = WeightedGraph(n=4, edges=(), vertex_weights=(0.5, 0.5, 0.5, 0.5))
        lo, argmins = brute_force_solve(maxclique_qubo(g))
        assert lo == pytest.approx(-0.5)
        for cfg in argmins:
            assert sum(cfg.values) == 1  # exactly one vertex; any two pay penalty 1 > 0.5

    def test_requires_positive_weights(self):
        g = WeightedGraph(n=2, edges=(), vertex_weights=(0.5, 0.0))
        with pytest.raises(ValueError):
            maxclique_qubo(g)

    def test_qubo_minimizer_is_max_weight_clique(self):
        for seed in range(5):
            g = gen_er_graph(10, 0.5, vertex_w=(0.001, 1), seed=seed)
            _, argmins = brute_force_solve(maxclique_qubo(g))
            best_w, _ = exhaustive_maxclique(g)
            for cfg in argmins:
                ok, w = clique_check(g, cfg.values)
                assert ok
                assert w == pytest.approx(best_w, rel=1e-12)


class TestCliqueCheck:
    def test_empty_subset(self):
        g = gen_er_graph(5, 0.5, vertex_w=(0.001, 1), seed=0)
        assert clique_check(g, (0,) * 5) == (True, 0.0)

    def test_non_adjacent_pair(self):
        g = WeightedGraph(n=3, edges=((0, 1, 1.0),), vertex_weights=(0.2, 0.3, 0.4))
        ok, w = clique_check(g, (1, 0, 1))
        assert not ok
        assert w == pytest.approx(0.6)  # weight reported regardless

    def test_exhaustive_agreement_with_adjacency_oracle(self):
        g = gen_er_graph(8, 0.5, vertex_w=(0.001, 1), seed=3)
        adj = np.zeros((8, 8), dtype=bool)
        for u, v, _ in g.edges:
            adj[u, v] = adj[v, u] = True
        for bits in itertools.product((0, 1), repeat=8):
            sel = [i for i, b in enumerate(bits) if b]
            expect = all(adj[a, b] for a, b in itertools.combinations(sel, 2))
            ok, w = clique_check(g, bits)
            assert ok == expect
            assert w == pytest.approx(sum(g.vertex_weights[i] for i in sel))


class TestBruteForceMaxClique:
    def test_complete_graph(self):
        edges = tuple((i, j, 1.0) for i in range(4) for j in range(i + 1, 4))
        g = WeightedGraph(n=4, edges=edges, vertex_weights=(0.1, 0.2, 0.3, 0.4))
        w, subset = brute_force_maxclique(g)
        assert subset == (0, 1, 2, 3)
        assert w == pytest.approx(1.0)

    def test_star_graph(self):
        # center 0 plus leaves; only pairwise cliques exist
        edges = tuple((0, j, 1.0) for j in range(1, 5))
        weights = (0.5, 0.1, 0.9, 0.2, 0.3)
        g = WeightedGraph(n=5, edges=edges, vertex_weights=weights)
        w, subset = brute_force_maxclique(g)
        assert subset == (0, 2)  # center + heaviest leaf
        assert w == pytest.approx(1.4)
        assert (w, subset) == (exhaustive_maxclique(g)[0], exhaustive_maxclique(g)[1])

    def test_cross_oracle_agreement(self):
        for seed in range(20):
            g = gen_er_graph(10, 0.5, vertex_w=(0.001, 1), seed=100 + seed)
            w_fast, subset = brute_force_maxclique(g)
            lo, argmins = brute_force_solve(maxclique_qubo(g))
            ok, w_qubo = clique_check(g, argmins[0].values)
            assert ok
            assert w_fast == pytest.approx(w_qubo, rel=1e-12)
            assert clique_check(g, tuple(1 if i in subset else 0 for i in range(10)))[0]

    def test_limit(self):
        g = gen_er_graph(6, 0.5, vertex_w=(0.001, 1), seed=0)
        with pytest.raises(ValueError):
            brute_force_maxclique(g, limit=5)
