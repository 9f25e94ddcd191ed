import json
import math
from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from scipy import special, stats

from alphatheta.crp import all_perm_probs, leaf1_block_probs
from alphatheta.limits import (PHI_S_VALUES, StringOfBeads, build_interval_partition_ordered,
                               build_interval_partition_recursive, dislocation_density,
                               dislocation_tail_mass, f_density, gem_weights,
                               laplace_exponent, laplace_exponent_quad, local_time_moment,
                               moments_json, phi_table, pick_bead, pick_bead_probs,
                               ranked_top, sample_dirichlet, sample_local_time,
                               sample_table_order, string_of_beads, switching_prob,
                               urn_simulate)
from alphatheta.statlab import chi_square_gof, ks_one_sample, ks_two_sample, mean_z

from conftest import GRID, LEVEL, p

OPEN = [q for q in GRID if 0 < q.alpha < 1]


def expected_tables(n, params):
    """Exact E K_n for theta > 0."""
    a, t = params.a, params.t
    return t / a * (math.exp(special.gammaln(t) + special.gammaln(t + a + n)
                             - special.gammaln(t + a) - special.gammaln(t + n)) - 1)


# --- Dirichlet and urns -------------------------------------------------


@pytest.mark.parametrize("gammas", [(1.0, 1.0), (0.5, 0.5, 2.0), (1 / 3, 2 / 3, 1.5, 0.2)])
def test_dirichlet_moments(gammas, rng):
    g = np.array(gammas)
    s = g.sum()
    x = sample_dirichlet(g, rng, size=20000)
    assert np.allclose(x.sum(axis=1), 1)
    for i in range(len(g)):
        assert abs(mean_z(x[:, i], g[i] / s)) < 4
        assert ks_one_sample(x[:, i], "beta", (g[i], s - g[i]), LEVEL).passed


def test_dirichlet_single_component(rng):
    assert sample_dirichlet([2.0], rng).tolist() == [1.0]


@pytest.mark.parametrize("gammas", [[], [1.0, 0.0], [-1.0, 2.0]])
def test_dirichlet_rejects(gammas, rng):
    with pytest.raises(ValueError):
        sample_dirichlet(gammas, rng)


def test_urn_limit_is_beta(rng):
    # two colours with weights 1 and theta/alpha, alpha = 1/2, theta = 1
    fr = np.array([urn_simulate([1.0, 2.0], 5000, rng)[1][0] for _ in range(2000)])
    assert ks_one_sample(fr, "beta", (1.0, 2.0), LEVEL).passed


def test_urn_counts(rng):
    counts, fr = urn_simulate([0.5, 0.5, 1.0], 100, rng)
    assert counts.sum() == 100 and np.isclose(fr.sum(), 1)
    with pytest.raises(ValueError):
        urn_simulate([1.0], 0, rng)


# --- GEM and table orders -----------------------------------------------


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("1/3", 2), p(0, 1)], ids=str)
def test_gem_first_weight_and_remainder(params, rng):
    a, t = params.a, params.t
    K = 50
    draws = [gem_weights(params, K, rng) for _ in range(20000)]
    p1 = np.array([g.P[0] for g in draws])
    rem = np.array([g.remainder for g in draws])
    assert ks_one_sample(p1, "beta", (1 - a, t + a), LEVEL).passed
    target = np.prod([(t + i * a) / (t + i * a + 1 - a) for i in range(1, K + 1)])
    assert abs(mean_z(rem, target)) < 4
    assert np.allclose([g.P.sum() + g.remainder for g in draws[:100]], 1)


def test_gem_remainder_is_small(rng):
    rem = np.mean([gem_weights(p("1/2", "1/2"), 2000, rng).remainder for _ in range(200)])
    assert rem < 2e-3


def test_gem_rejects_alpha_one(rng):
    with pytest.raises(ValueError):
        gem_weights(p(1, 0), 5, rng)


def test_table_order_theta_zero_keeps_first_table_right(rng):
    for _ in range(200):
        assert sample_table_order(p("1/2", 0), 6, rng)[-1] == 0


def test_table_order_law(rng):
    params = p("1/2", "3/2")
    obs = Counter()
    for _ in range(30000):
        order = sample_table_order(params, 3, rng)
        pos = {int(b) + 1: i + 1 for i, b in enumerate(order)}
        obs[tuple(pos[j] for j in (1, 2, 3))] += 1
    assert chi_square_gof(obs, all_perm_probs(3, params), LEVEL).passed


# --- interval partitions ------------------------------------------------


def test_ordered_partition_single_table(rng):
    ip = build_interval_partition_ordered(p("1/2", 1), 1, rng)
    assert ip.g[0] == 0 and np.isclose(ip.d[0] + ip.leftover, 1)
    assert ip.check()


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("1/3", 2)], ids=str)
def test_ordered_partition_first_interval_law(params, rng):
    a, t = params.a, params.t
    ivs = [build_interval_partition_ordered(params, 500, rng) for _ in range(3000)]
    assert all(ip.check() for ip in ivs[:50])
    g = np.array([ip.interval_of(0)[0] for ip in ivs])
    m = np.array([np.subtract(*ip.interval_of(0)[::-1]) for ip in ivs])
    assert ks_one_sample(g, "beta", (a, 1 - a + t), LEVEL).passed
    assert ks_one_sample(m, "beta", (1 - a, a + t), LEVEL).passed


def test_alpha_equals_theta_first_interval_is_size_biased(rng):
    # table 1's interval has the law of the interval covering a uniform point
    params = p("1/2", "1/2")
    first, covering = [], []
    for _ in range(4000):
        ip = build_interval_partition_ordered(params, 500, rng)
        first.append(np.subtract(*ip.interval_of(0)[::-1]))
        u = rng.random()
        i = np.searchsorted(ip.d, u)
        if i < len(ip) and ip.g[i] <= u:
            covering.append(ip.masses[i])
    assert ks_two_sample(first, covering, LEVEL).passed


def test_recursive_partition_first_split_only(rng):
    params = p("1/2", 1)
    g = []
    for _ in range(3000):
        ip = build_interval_partition_recursive(params, 1.0, rng)
        assert len(ip) == 1 and ip.check()
        g.append(ip.g[0])
    assert ks_one_sample(g, "beta", (0.5, 1.5), LEVEL).passed


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("2/3", 0), p("1/10", 2)], ids=str)
def test_recursive_partition_conserves_mass(params, rng):
    for eps in (1e-1, 1e-3):
        ip = build_interval_partition_recursive(params, eps, rng)
        assert ip.check()


def test_two_constructions_agree_on_largest_interval(rng):
    params = p("1/2", "1/2")
    a = [build_interval_partition_ordered(params, 1000, rng).largest() for _ in range(2000)]
    b = [build_interval_partition_recursive(params, 1e-4, rng).largest() for _ in range(2000)]
    assert ks_two_sample(a, b, LEVEL).passed


def test_recursive_rejects(rng):
    with pytest.raises(ValueError):
        build_interval_partition_recursive(p(0, 1), 0.1, rng)
    with pytest.raises(ValueError):
        build_interval_partition_recursive(p("1/2", 1), 0, rng)


# --- local time ---------------------------------------------------------


def test_local_time_moment_values():
    assert local_time_moment(0, p("1/2", 1)) == pytest.approx(1)
    assert local_time_moment(1, p("1/2", 0)) == pytest.approx(2 / math.sqrt(math.pi))
    assert local_time_moment(1, p("1/2", "1/2")) == pytest.approx(math.sqrt(math.pi))
    with pytest.raises(ValueError):
        local_time_moment(1, p(0, 1))


@pytest.mark.parametrize("params", OPEN[::4], ids=str)
def test_local_time_sampler_moments(params, rng):
    x = sample_local_time(params, 40000, rng)
    assert np.all(x > 0)
    for n in (1, 2):
        assert abs(mean_z(x ** n, local_time_moment(n, params))) < 4


def test_local_time_sampler_matches_table_counts(rng):
    from alphatheta._kernels import table_counts

    params = p("1/3", 1)
    n = 100_000
    k = table_counts(3000, n, params.a, params.t, rng) / n ** params.a
    x = sample_local_time(params, 3000, rng)
    assert ks_two_sample(k, x, LEVEL).passed


# --- subordinator and dislocation ---------------------------------------


@pytest.mark.parametrize("params", OPEN, ids=str)
def test_laplace_exponent_quadrature(params):
    g = special.gamma(1 - params.a)
    for s in PHI_S_VALUES:
        closed = float(laplace_exponent(s, params)) / g
        assert laplace_exponent_quad(s, params) == pytest.approx(closed, rel=1e-6)


def test_laplace_exponent_values():
    q = p("1/2", 1)
    assert laplace_exponent(0.0, q) == 0
    assert float(laplace_exponent(1.0, q)) == pytest.approx(
        special.gamma(2) * special.gamma(0.5) / special.gamma(2.5))
    # theta = 0: the exponent does not vanish at 0 (killing at rate 1)
    assert float(laplace_exponent(0.0, p("1/2", 0))) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        laplace_exponent(-1.0, q)


def test_dislocation_density_value():
    a = t = 0.5
    u, v = 0.75, 0.25
    direct = (a * (u ** t * v ** (-a - 1) + u ** (-a - 1) * v ** t)
              + t * (u ** (t - 1) * v ** (-a) + u ** (-a) * v ** (t - 1))) / math.gamma(1 - a)
    assert float(dislocation_density(u, p("1/2", "1/2"))) == pytest.approx(direct, rel=1e-14)


@pytest.mark.parametrize("params", OPEN, ids=str)
def test_dislocation_identity(params):
    u = np.linspace(0.501, 0.9999, 60)
    rhs = u * f_density(u, params) + (1 - u) * f_density(1 - u, params)
    assert np.allclose(dislocation_density(u, params), rhs, rtol=1e-12, atol=0)


@pytest.mark.parametrize("params", [q for q in OPEN if q.alpha >= F(1, 2)], ids=str)
def test_dislocation_tail(params):
    eps = 1e-4
    ratio = dislocation_tail_mass(eps, params) / (eps ** -params.a / special.gamma(1 - params.a))
    assert abs(ratio - 1) <= 0.02


@pytest.mark.parametrize("params", [p("1/10", 0), p("1/3", 0)], ids=str)
def test_dislocation_tail_small_alpha_converges_slowly(params):
    errs = []
    for eps in (1e-4, 1e-6, 1e-8):
        ratio = dislocation_tail_mass(eps, params) / (eps ** -params.a
                                                      / special.gamma(1 - params.a))
        errs.append(abs(ratio - 1))
    assert errs[0] > errs[1] > errs[2]


def test_dislocation_domain():
    with pytest.raises(ValueError):
        dislocation_density(0.5, p("1/2", 1))


# --- switching rule and strings of beads -------------------------------


def test_switching_prob_cases():
    q = p("1/3", 1)
    assert switching_prob(F(0), q) == 1
    assert switching_prob(F(1), q) == 0
    assert switching_prob(F(1, 2), q) == F(1, 2) / (F(1, 2) + F(1, 6))
    assert switching_prob(F(1, 2), p("1/2", "1/2")) == F(1, 2)
    assert switching_prob(F(1, 2), p("1/2", 0)) == 0
    assert switching_prob(F(1, 4), q, mass_biased=True) == F(3, 4)
    assert float(switching_prob(0.5, q)) == pytest.approx(0.75)


@pytest.mark.parametrize("params", GRID[::3], ids=str)
def test_pick_bead_exact_law_matches_customer1(params):
    # with masses proportional to table sizes the pick is customer 1's table
    parts = (3, 1, 2, 4)
    n = sum(parts)
    probs = pick_bead_probs([F(x, n) for x in parts], F(0), params)
    assert probs[:-1] == leaf1_block_probs(parts, params)
    assert probs[-1] == 0


def test_pick_bead_mass_biased_is_proportional():
    masses = [F(1, 10), F(3, 10), F(2, 5), F(1, 5)]
    probs = pick_bead_probs(masses, F(0), p("1/3", 1), mass_biased=True)
    assert probs[:-1] == masses


def test_pick_bead_sampler(rng):
    params = p("1/2", 2)
    s = StringOfBeads(1.0, [0.2, 0.5, 0.9], [0.5, 0.3, 0.2])
    obs = Counter(pick_bead(s, params, rng) for _ in range(30000))
    probs = pick_bead_probs([0.5, 0.3, 0.2], 0.0, params)
    assert chi_square_gof(obs, dict(enumerate(probs[:-1])), LEVEL).passed


def test_pick_bead_mass_biased_sampler(rng):
    s = StringOfBeads(1.0, [0.2, 0.5, 0.9], [0.5, 0.3, 0.2])
    obs = Counter(pick_bead(s, p("1/2", 1), rng, mass_biased=True) for _ in range(30000))
    assert chi_square_gof(obs, {0: 0.5, 1: 0.3, 2: 0.2}, LEVEL).passed


def test_pick_bead_past_last_atom(rng):
    params = p("1/2", 1)
    s = StringOfBeads(1.0, [0.5], [0.5], leftover=0.5)
    obs = Counter(pick_bead(s, params, rng) for _ in range(30000))
    probs = pick_bead_probs([0.5], 0.5, params)
    assert chi_square_gof({0: obs[0], "none": obs[None]},
                          {0: probs[0], "none": probs[1]}, LEVEL).passed


def test_pick_bead_edge_cases(rng):
    single = StringOfBeads(1.0, [1.0], [1.0])
    assert all(pick_bead(single, p("1/2", 1), rng) == 0 for _ in range(100))
    s = StringOfBeads(1.0, [0.2, 0.5], [0.5, 0.5])
    assert pick_bead(s, p("1/2", 0), rng) == 1
    with pytest.raises(ValueError):
        pick_bead(StringOfBeads(0.0, [], []), p("1/2", 1), rng)


def test_string_validation():
    with pytest.raises(ValueError):
        StringOfBeads(1.0, [0.5, 0.4], [0.5, 0.5])
    with pytest.raises(ValueError):
        StringOfBeads(1.0, [0.5, 1.5], [0.5, 0.5])
    with pytest.raises(ValueError):
        StringOfBeads(1.0, [0.5], [0.0])
    s = StringOfBeads(2.0, [1.0, 2.0], [0.25, 0.75]).scaled(0.25, 0.5)
    assert s.length == pytest.approx(1.0) and s.total_mass == pytest.approx(0.25)


@pytest.mark.parametrize("params", [p("1/2", "1/2"), p("1/3", 2)], ids=str)
def test_string_length_exact_finite_n(params, rng):
    n = 1000
    ls = np.array([string_of_beads(params, n, rng).length for _ in range(20000)])
    assert abs(mean_z(ls, expected_tables(n, params) * n ** -params.a)) < 4


def test_string_length_near_limit(rng):
    params = p("1/2", "1/2")
    strings = [string_of_beads(params, 100_000, rng) for _ in range(1000)]
    assert all(abs(s.total_mass - 1) < 1e-12 for s in strings)
    mean = np.mean([s.length for s in strings])
    assert abs(mean / local_time_moment(1, params) - 1) < 0.05


def test_ranked_masses_match_gem(rng):
    params = p("1/2", "1/2")
    a = np.array([ranked_top(string_of_beads(params, 10_000, rng).masses) for _ in range(5000)])
    b = np.array([ranked_top(gem_weights(params, 2000, rng).P) for _ in range(5000)])
    for i in range(3):
        assert ks_two_sample(a[:, i], b[:, i], LEVEL).passed


def test_ranked_top_pads():
    assert ranked_top(np.array([0.2, 0.8]), 3).tolist() == [0.8, 0.2, 0.0]


def test_tables():
    rows = phi_table([p("1/2", 1)], [1.0, 2.0])
    assert len(rows) == 2 and rows[0][3] == pytest.approx(rows[0][4], rel=1e-6)
    obj = json.loads(moments_json([p("1/2", 0)], [1, 2]))
    assert obj[0]["moments"]["1"] == pytest.approx(2 / math.sqrt(math.pi))
