from collections import Counter
from fractions import Fraction as F
import math

import numpy as np
import pytest

from alphatheta import LabeledBinaryTree, delabel, run_replicates, spinal_composition
from alphatheta.crp import exact_composition_dist
from alphatheta.exact import exact_tree_dist
from alphatheta.growth import (GrowingTree, edge_selection_probs, ford_edge_probs,
                               ford_select_edge, grow, grow_histories, grow_python,
                               leaf1_heights, tree_histogram, walker_grow,
                               walker_histogram, walker_leaf1_heights)
from alphatheta.statlab import chi_square_gof
from alphatheta.trees import comb_shape

from conftest import GRID, LEVEL, p

B = frozenset
T2 = LabeledBinaryTree.from_nested((1, 2))


@pytest.mark.parametrize("params", GRID[::4], ids=str)
def test_T2_edge_probabilities(params):
    a, t = params.alpha, params.theta
    probs = edge_selection_probs(T2, params)
    assert probs[B([1, 2])] == a / (1 + t)
    assert probs[B([2])] == (1 - a) / (1 + t)
    assert probs[B([1])] == t / (1 + t)


@pytest.mark.parametrize("params", GRID, ids=str)
def test_edge_probabilities_sum_to_one(params):
    for t in exact_tree_dist(5, p("1/2", "1/2")).support:
        assert sum(edge_selection_probs(t, params).values()) == 1


@pytest.mark.parametrize("theta", ["0", "1/2", "2"])
def test_alpha_one_grows_a_comb(theta, rng):
    for n in range(1, 9):
        assert delabel(grow(n, p(1, theta), rng)) == comb_shape(n)
        assert delabel(grow_python(n, p(1, theta), rng)) == comb_shape(n)


@pytest.mark.parametrize("alpha", ["1/10", "1/3", "1/2", "2/3", "9/10"])
def test_ford_rule_is_theta_one_minus_alpha(alpha):
    a = F(alpha)
    for n in range(1, 7):
        for t in exact_tree_dist(n, p(alpha, "1/2")).support:
            assert edge_selection_probs(t, p(alpha, 1 - a)) == ford_edge_probs(t, a)


def test_ford_sampler_matches_probabilities(rng):
    t = LabeledBinaryTree.from_nested(((1, 3), (2, 4)))
    probs = ford_edge_probs(t, F(1, 3))
    counts = Counter(B(ford_select_edge(t, F(1, 3), rng)) for _ in range(20000))
    assert chi_square_gof(counts, probs, LEVEL).passed


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("1/3", 2), p("9/10", 0)], ids=str)
def test_T3_law(params, rng):
    obs = tree_histogram(100_000, 3, params, rng)
    assert chi_square_gof(obs, exact_tree_dist(3, params).support, LEVEL).passed


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("2/3", 1), p("1/10", 0)], ids=str)
def test_python_growth_matches_exact_law(params, rng):
    obs = Counter(grow_python(4, params, rng) for _ in range(20000))
    assert chi_square_gof(obs, exact_tree_dist(4, params).support, LEVEL).passed


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("1/3", "3/2")], ids=str)
def test_compiled_growth_matches_exact_law_n6(params, rng):
    obs = tree_histogram(100_000, 6, params, rng)
    assert chi_square_gof(obs, exact_tree_dist(6, params).support, LEVEL).passed


def test_growing_tree_wrapper(rng):
    g = GrowingTree(p("1/2", 1), rng)
    t = g.grow_to(7)
    assert t.n == 7 and len(t.blocks) == 13
    assert grow(1, p("1/2", 1), rng) == LabeledBinaryTree.single()
    assert grow(2, p("1/2", 1), rng) == T2


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("1/3", 0), p("9/10", 2)], ids=str)
def test_leaf1_height_is_table_count(params, rng):
    # the spine of T_n records the ordered restaurant with n - 1 customers
    n = 7
    law = Counter()
    for parts, pr in exact_composition_dist(n - 1, params).items():
        law[len(parts)] += pr
    obs = Counter(leaf1_heights(50_000, n, params, rng).tolist())
    assert chi_square_gof(obs, dict(law), LEVEL).passed


def test_spinal_composition_of_sampled_trees(rng):
    params = p("2/3", "1/2")
    law = exact_composition_dist(5, params)
    obs = Counter(tuple(spinal_composition(grow(6, params, rng))) for _ in range(5000))
    assert chi_square_gof(obs, law, LEVEL).passed


def test_seeded_growth_is_reproducible():
    params = p("1/2", "1/2")
    a = grow(30, params, np.random.default_rng(7))
    b = grow(30, params, np.random.default_rng(7))
    assert a == b


def _hist_chunk(rng, count, n, params):
    return grow_histories(count, n, params, rng).tolist()


def test_replicates_independent_of_workers():
    args = (8, p("1/3", 1))
    one = run_replicates(_hist_chunk, 2500, 11, *args, chunk=1000, workers=1)
    two = run_replicates(_hist_chunk, 2500, 11, *args, chunk=1000, workers=2)
    assert one == two


# --- the alpha = 0 walker -----------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_walker_theta_zero_is_a_comb(n, rng):
    t = walker_grow(n, 0, rng)
    assert delabel(t) == comb_shape(n)
    # every new leaf joins the side away from leaf 1, so leaf 1 hangs at depth 2
    if n > 1:
        assert t.depth(B([1])) == 2


@pytest.mark.parametrize("theta", ["1/2", "2"])
def test_python_walker_matches_exact_law(theta, rng):
    obs = Counter(walker_grow(4, F(theta), rng) for _ in range(20000))
    assert chi_square_gof(obs, exact_tree_dist(4, p(0, theta)).support, LEVEL).passed


def test_compiled_walker_matches_exact_law(rng):
    obs = walker_histogram(50_000, 5, 1.0, rng)
    assert chi_square_gof(obs, exact_tree_dist(5, p(0, 1)).support, LEVEL).passed


def test_walker_height_grows_like_theta_log_n(rng):
    n, theta = 10_000, 2.0
    h = walker_leaf1_heights(300, n, theta, rng)
    assert abs(h.mean() / math.log(n) - theta) / theta < 0.10
