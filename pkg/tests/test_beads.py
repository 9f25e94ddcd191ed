import json
import math
from collections import Counter

import numpy as np
import pytest

from alphatheta import LabeledBinaryTree, validate
from alphatheta.beads import (BeadTree, crush_grow, d2_closed_form, d2_samples_chain,
                              d2_samples_lengths, d2_samples_masses, edge_mass_vector,
                              mass_drift, moment_check_d2, reduced_scaled_from_growth,
                              sample_R1, sample_Rk, sample_Rk_stepwise, shape_histogram_Rk)
from alphatheta.exact import exact_tree_dist, first_split_dist
from alphatheta.limits import StringOfBeads, local_time_moment, pick_bead_probs
from alphatheta.statlab import chi_square_gof, ks_one_sample, ks_two_sample, mean_z

from conftest import LEVEL, p

B = frozenset
ROOT2, LEAF1, LEAF2 = B([1, 2]), B([1]), B([2])


def two_leaf_tree(trunk, leaf1, leaf2):
    shape = LabeledBinaryTree.from_nested((1, 2))
    return BeadTree(shape, {ROOT2: trunk, LEAF1: leaf1, LEAF2: leaf2})


def check_structure(bt, k):
    assert bt.k == k and len(bt.edges) == 2 * k - 1
    validate(bt.shape.blocks, k)
    for s in bt.edges.values():
        if len(s):
            assert s.positions[0] > 0 and s.positions[-1] <= s.length * (1 + 1e-12)


# --- single edge ---------------------------------------------------------


def test_R1(rng):
    bt = sample_R1(p("1/2", 1), 500, rng)
    check_structure(bt, 1)
    assert bt.total_mass() == pytest.approx(1, abs=1e-12)


def test_R1_length_mean(rng):
    params = p("1/2", "1/2")
    ls = [sample_R1(params, 10_000, rng).edges[LEAF1].length for _ in range(4000)]
    assert abs(np.mean(ls) / local_time_moment(1, params) - 1) < 0.05


def test_theta_zero_right_end_atom_is_beta(rng):
    a = 0.5
    m = [sample_R1(p(a, 0), 10_000, rng).edges[LEAF1].masses[-1] for _ in range(5000)]
    assert ks_one_sample(m, "beta", (1 - a, a), LEVEL).passed


# --- one crush step -------------------------------------------------------


def test_crush_step_conserves_mass_and_structure(rng):
    params = p("1/3", "3/2")
    bt = sample_R1(params, 300, rng)
    for k in range(2, 12):
        bt, ev = crush_grow(bt, params, rng, 300)
        check_structure(bt, k)
        assert abs(bt.total_mass() - 1) < 1e-12
        assert ev.mass > 0 and ev.position > 0


def _bead_counts(bt, params, block, rng, reps):
    out = Counter()
    for _ in range(reps):
        _, ev = crush_grow(bt, params, rng, 20)
        if ev.block == block:
            out[ev.bead_index] += 1
    return out


def test_inner_edge_pick_is_mass_biased(rng):
    params = p("1/2", 2)
    trunk = StringOfBeads(1.0, [0.2, 0.6, 0.9], [0.3, 0.1, 0.2])
    leaf = StringOfBeads(0.5, [0.4], [0.2])
    bt = two_leaf_tree(trunk, leaf, leaf)
    obs = _bead_counts(bt, params, ROOT2, rng, 40000)
    assert chi_square_gof(obs, {0: 0.5, 1: 1 / 6, 2: 1 / 3}, LEVEL).passed


def test_leaf_edge_pick_uses_switching_rule(rng):
    params = p("1/2", 2)
    leaf = StringOfBeads(1.0, [0.2, 0.6, 0.9], [0.3, 0.1, 0.2])
    tiny = StringOfBeads(0.5, [0.4], [0.2])
    bt = two_leaf_tree(tiny, leaf, tiny)
    obs = _bead_counts(bt, params, LEAF1, rng, 40000)
    probs = pick_bead_probs([0.3, 0.1, 0.2], 0.0, params)
    assert chi_square_gof(obs, dict(enumerate(probs[:-1])), LEVEL).passed


def test_pick_past_truncation_is_retried(rng):
    params = p("1/2", 1)
    leaf = StringOfBeads(1.0, [0.5], [0.2], leftover=0.6)
    bt = BeadTree(LabeledBinaryTree.single(), {LEAF1: leaf})
    retried = 0
    for _ in range(300):
        new, ev = crush_grow(bt, params, rng, 50)
        assert ev.bead_index == 0
        retried += ev.retries > 0
        assert new.total_mass() == pytest.approx(bt.total_mass())
    assert retried > 0


def test_theta_zero_leaf_crush_gives_degenerate_edge(rng):
    params = p("1/2", 0)
    bt, ev = crush_grow(sample_R1(params, 200, rng), params, rng, 200)
    assert LEAF1 in bt.degenerate()
    assert bt.edges[LEAF1].length == 0
    assert bt.height(LEAF1) == pytest.approx(bt.edges[ROOT2].length)


# --- the chain ----------------------------------------------------------


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("1/3", 0), p("9/10", 2)], ids=str)
def test_compiled_chain_structure(params, rng):
    for k in (1, 2, 5, 9):
        bt = sample_Rk(k, params, 500, rng)
        check_structure(bt, k)
        assert abs(bt.total_mass() - 1) < 1e-9


def test_mass_drift_long_chain(rng):
    assert mass_drift(200, p("1/2", "1/2"), rng) < 1e-12


def test_rejects_bad_arguments(rng):
    with pytest.raises(ValueError):
        sample_Rk(0, p("1/2", 1), rng=rng)
    with pytest.raises(ValueError):
        sample_Rk(3, p(0, 1), rng=rng)


@pytest.mark.parametrize("params", [p("1/2", 1), p("2/3", 0)], ids=str)
def test_R2_masses_are_dirichlet(params, rng):
    a, t = params.a, params.t
    reps = 20000
    ms = np.array([[bt.edge_mass(b) for b in (ROOT2, LEAF2, LEAF1)]
                   for bt in (sample_Rk(2, params, 1000, rng) for _ in range(reps))])
    for i, g in enumerate((a, 1 - a, t)):
        assert abs(mean_z(ms[:, i], g / (1 + t))) < 4


@pytest.mark.parametrize("params", [p("1/2", 1), p("2/3", 0)], ids=str)
def test_R2_trunk_mass_law(params, rng):
    # discreteness of a finite string decays slowly in the budget when
    # alpha is large, so the law is checked with a long string
    a, t = params.a, params.t
    m = [sample_Rk(2, params, 100_000, rng).edge_mass(ROOT2) for _ in range(3000)]
    assert ks_one_sample(m, "beta", (a, 1 + t - a), LEVEL).passed


def test_edge_masses_dirichlet_on_ford_line(rng):
    a = 0.5
    params = p(a, 1 - a)
    reps = 20000
    k = 3
    rows = [edge_mass_vector(sample_Rk(k, params, 1000, rng)) for _ in range(reps)]
    # pool by edge type: leaf edges weigh 1 - a, inner edges weigh a
    leaf = np.array([[m for b, m in r.items() if len(b) == 1] for r in rows])
    inner = np.array([[m for b, m in r.items() if len(b) > 1] for r in rows])
    assert abs(mean_z(leaf.ravel()[::3], (1 - a) / (k - a))) < 4
    assert abs(mean_z(inner[:, 0], a / (k - a))) < 4
    assert abs(mean_z(inner[:, 1], a / (k - a))) < 4
    for j in range(3):
        assert abs(mean_z(leaf[:, j], (1 - a) / (k - a))) < 4


def test_edge_masses_off_ford_line_are_not_that_dirichlet(rng):
    a = 0.5
    params = p(a, 2)
    k = 3
    rows = [edge_mass_vector(sample_Rk(k, params, 1000, rng)) for _ in range(20000)]
    leaf1 = np.array([r[LEAF1] for r in rows])
    assert abs(mean_z(leaf1, (1 - a) / (k - a))) > 10


def test_chain_shape_law(rng):
    params = p("1/2", "3/2")
    obs = shape_histogram_Rk(4, params, 30000, rng, 1000)
    assert chi_square_gof(obs, exact_tree_dist(4, params).support, LEVEL).passed


def test_chain_first_split_law(rng):
    params = p("1/3", 1)
    k = 6
    obs = Counter()
    for t, c in shape_histogram_Rk(k, params, 20000, rng, 1000).items():
        a, b = (len(x) for x in t.children(t.root))
        obs[(min(a, b), max(a, b))] += c
    assert chi_square_gof(obs, first_split_dist(k, params).support, LEVEL).passed


def test_stepwise_chain_shape_law(rng):
    params = p("2/3", "1/2")
    obs = Counter(sample_Rk_stepwise(4, params, 200, rng).shape for _ in range(3000))
    assert chi_square_gof(obs, exact_tree_dist(4, params).support, LEVEL).passed


def test_stepwise_and_compiled_agree(rng):
    params = p("1/2", 1)
    a = [sample_Rk_stepwise(3, params, 500, rng).edge_mass(LEAF1) for _ in range(2000)]
    b = [sample_Rk(3, params, 500, rng).edge_mass(LEAF1) for _ in range(2000)]
    assert ks_two_sample(a, b, LEVEL).passed
    events = []
    bt = sample_Rk_stepwise(4, params, 100, rng, events)
    assert len(events) == 3 and bt.k == 4


def test_bead_tree_json(rng):
    bt = sample_Rk(3, p("1/2", 1), 100, rng)
    obj = json.loads(bt.to_json())
    assert obj["shape"]["n"] == 3 and len(obj["edges"]) == 5


# --- reduced trees of the growth process -------------------------------


def test_reduced_full_subset(rng):
    n = 50
    params = p("1/2", 1)
    elt, masses = reduced_scaled_from_growth(n, n, params, rng)
    assert all(v == pytest.approx(n ** -0.5) for v in elt.lengths.values())
    for b, m in masses.items():
        assert m == pytest.approx(1 / n if len(b) == 1 else 0.0)


def test_reduced_masses_sum_to_one(rng):
    elt, masses = reduced_scaled_from_growth(500, 4, p("1/3", 2), rng)
    assert elt.k == 4 and sum(masses.values()) == pytest.approx(1)


def test_reduced_single_leaf_matches_string_length(rng):
    params = p("1/2", "1/2")
    n = 10_000
    a = [reduced_scaled_from_growth(n, 1, params, rng)[0].total_length() for _ in range(300)]
    b = [sample_R1(params, n, rng).edges[LEAF1].length for _ in range(3000)]
    assert ks_two_sample(a, b, LEVEL).passed


def test_reduced_trunk_matches_limit_law(rng):
    params = p("1/2", "1/2")
    a = [reduced_scaled_from_growth(10_000, 2, params, rng)[0].lengths[ROOT2]
         for _ in range(500)]
    b = d2_samples_masses(0.5, 20000, rng)
    assert ks_two_sample(a, b, LEVEL).passed


# --- distance to the first branch point --------------------------------


def test_d2_closed_form_values():
    assert d2_closed_form(1, 0.5) == pytest.approx(math.gamma(1.5), rel=1e-14)
    assert d2_closed_form(2, 0.5) == pytest.approx(4 / 3, rel=1e-14)
    assert d2_closed_form(0, 0.3) == pytest.approx(1)


@pytest.mark.parametrize("s", [1, 2])
def test_d2_moments_from_chain(s, rng):
    res = moment_check_d2(s, 0.5, 4000, rng, 2000)
    assert abs(res.z_score) < 4
    assert res.closed_form == pytest.approx(d2_closed_form(s, 0.5))


@pytest.mark.parametrize("alpha", [0.5, 1 / 3])
def test_two_constructions_of_d2_agree(alpha, rng):
    x = d2_samples_masses(alpha, 20000, rng)
    y = d2_samples_lengths(alpha, 20000, rng)
    assert ks_two_sample(x, y, LEVEL).passed
    assert abs(mean_z(x, d2_closed_form(1, alpha))) < 4


def test_chain_d2_matches_construction(rng):
    x = d2_samples_chain(0.5, 3000, rng, 2000)
    y = d2_samples_masses(0.5, 20000, rng)
    assert ks_two_sample(x, y, LEVEL).passed
