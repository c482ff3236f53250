"""Graph p-modulus: hand-solvable condensers, outer-measure axioms, duality."""

import numpy as np
import pytest

from capax.graphmod import (WeightedGraph, build_grid_graph, connecting_modulus,
                            cut_modulus, duality_product,
                            union_connecting_modulus)
from capax.experiments import random_connected_graph

P = 3.0
Q = 1.5


def parallel_graph(k):
    edges = [(0, 1)] * k
    return WeightedGraph(2, edges, np.ones(k))


def series_graph(m):
    edges = [(i, i + 1) for i in range(m)]
    return WeightedGraph(m + 1, edges, np.ones(m))


def test_single_edge():
    g = WeightedGraph(2, [(0, 1)], [1.0])
    sol = connecting_modulus(g, [0], [1], p=P)
    assert sol.value == pytest.approx(1.0, abs=1e-9)
    assert sol.density[0] == pytest.approx(1.0, abs=1e-6)
    assert cut_modulus(g, [0], [1], q=Q).value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("k", [2, 3, 5])
def test_parallel_edges(k):
    g = parallel_graph(k)
    # each path is one edge, so every edge carries density 1 independently
    sol = connecting_modulus(g, [0], [1], p=P)
    assert sol.value == pytest.approx(k, abs=1e-8)
    # the only minimal cut is all k edges, split evenly: value k * (1/k)^q
    cut = cut_modulus(g, [0], [1], q=Q)
    assert cut.value == pytest.approx(k ** (1.0 - Q), abs=1e-8)
    assert duality_product(sol, cut) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("m", [2, 3, 7])
def test_series_edges(m):
    g = series_graph(m)
    # one path through m edges, equal split: value m * (1/m)^p
    sol = connecting_modulus(g, [0], [m], p=P)
    assert sol.value == pytest.approx(m ** (1.0 - P), abs=1e-9)
    # every single edge separates, so each carries density 1
    cut = cut_modulus(g, [0], [m], q=Q)
    assert cut.value == pytest.approx(m, abs=1e-7)
    assert duality_product(sol, cut) == pytest.approx(1.0, abs=1e-7)


def test_solution_invariants():
    g, S, T = random_connected_graph(7)
    sol = connecting_modulus(g, S, T, p=P)
    # recomputing the energy from the density reproduces the value
    energy = float(np.sum(g.measure * sol.density ** P))
    assert energy == pytest.approx(sol.value, rel=1e-10)
    # every active path (a node sequence) has rho-length at least 1 - tol,
    # taking the cheapest edge wherever parallel edges join two nodes
    cost = {}
    for i, (u, v) in enumerate(g.edges):
        key = (min(u, v), max(u, v))
        c = g.sigma[i] * sol.density[i]
        cost[key] = min(cost.get(key, np.inf), c)
    for path in sol.active_constraints:
        length = sum(cost[(min(a, b), max(a, b))] for a, b in zip(path, path[1:]))
        assert length >= 1.0 - 1e-5
    assert sol.residual <= 1e-5


def test_density_unique_under_edge_permutation():
    g, S, T = random_connected_graph(11)
    rng = np.random.default_rng(3)
    perm = rng.permutation(g.m)
    gp = WeightedGraph(g.n, g.edges[perm], g.sigma[perm], g.measure[perm])
    a = connecting_modulus(g, S, T, p=P)
    b = connecting_modulus(gp, S, T, p=P)
    assert a.value == pytest.approx(b.value, rel=1e-7)
    assert np.max(np.abs(a.density[perm] - b.density)) < 1e-5


def test_duality_random_graphs():
    for seed in range(8):
        g, S, T = random_connected_graph(seed)
        mp = connecting_modulus(g, S, T, p=P)
        mq = cut_modulus(g, S, T, q=Q)
        assert duality_product(mp, mq) == pytest.approx(1.0, abs=1e-5)


def test_monotonicity_larger_target():
    g, _, _ = random_connected_graph(5)
    n = g.n
    small = union_connecting_modulus(g, [([0], [n - 1])], p=P)
    large = union_connecting_modulus(g, [([0], [n - 1]), ([0], [n - 2])], p=P)
    assert small.value <= large.value + 1e-8


def test_subadditivity_union():
    g, _, _ = random_connected_graph(9)
    n = g.n
    both = union_connecting_modulus(g, [([0], [n - 1]), ([0], [n - 2])], p=P)
    a = connecting_modulus(g, [0], [n - 1], p=P)
    b = connecting_modulus(g, [0], [n - 2], p=P)
    assert both.value <= a.value + b.value + 1e-8


def test_separated_additivity_disjoint_union():
    g1, _, _ = random_connected_graph(12)
    g2, _, _ = random_connected_graph(13)
    off = g1.n
    g = WeightedGraph(g1.n + g2.n,
                      np.vstack([g1.edges, g2.edges + off]),
                      np.concatenate([g1.sigma, g2.sigma]),
                      np.concatenate([g1.measure, g2.measure]))
    pairs = [([0], [g1.n - 1]), ([off], [off + g2.n - 1])]
    combined = union_connecting_modulus(g, pairs, p=P)
    a = connecting_modulus(g1, [0], [g1.n - 1], p=P)
    b = connecting_modulus(g2, [0], [g2.n - 1], p=P)
    assert combined.value == pytest.approx(a.value + b.value, rel=1e-4)


def test_input_validation():
    with pytest.raises(ValueError):
        WeightedGraph(2, [(0, 0)], [1.0])
    with pytest.raises(ValueError):
        WeightedGraph(2, [(0, 1)], [-1.0])
    with pytest.raises(ValueError):
        WeightedGraph(2, [(0, 3)], [1.0])
    g = WeightedGraph(4, [(0, 1), (2, 3)], [1.0, 1.0])
    with pytest.raises(Exception):
        connecting_modulus(g, [0], [3], p=P)


def test_grid_graph_counts():
    g, coords = build_grid_graph(((0, 0, 0), (1, 1, 1)), 0.5)
    assert g.n == 27
    assert g.m == 54
    assert coords.shape == (27, 3)
    g, _ = build_grid_graph(((0, 0, 0), (1, 1, 1)), 0.25)
    assert g.n == 125


def test_grid_graph_weights():
    h = 0.5
    g, _ = build_grid_graph(((0, 0, 0), (1, 1, 1)), h)
    assert np.allclose(g.sigma, h)
    assert np.allclose(g.measure, h ** 3)
