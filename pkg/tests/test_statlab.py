import json
import warnings

import numpy as np
import pytest
from scipy import stats

from alphatheta.statlab import (GofReport, InsufficientCountsError, chi_square_gof,
                                chi_square_stratified, ks_one_sample, ks_two_sample,
                                mc_mean_ci, mean_z)

PROBS = np.array([0.1, 0.2, 0.3, 0.4])


def draw_counts(rng, probs, n):
    return rng.multinomial(n, probs)


def test_chi_square_accepts_its_own_law(rng):
    r = chi_square_gof(draw_counts(rng, PROBS, 10_000), PROBS)
    assert r.passed and r.dof == 3 and r.n == 10_000


def test_chi_square_rejects_other_law(rng):
    r = chi_square_gof(draw_counts(rng, [0.15, 0.2, 0.25, 0.4], 10_000), PROBS)
    assert not r.passed and r.p_value < 1e-3


def test_chi_square_p_values_are_calibrated(rng):
    ps = np.array([chi_square_gof(draw_counts(rng, PROBS, 2000), PROBS, level=0.05).p_value
                   for _ in range(1000)])
    assert 0.03 < np.mean(ps < 0.05) < 0.07
    assert stats.kstest(ps, "uniform").pvalue > 1e-3


def test_chi_square_mapping_alignment(rng):
    r = chi_square_gof({"a": 480, "b": 520}, {"a": 0.5, "b": 0.5})
    assert r.passed
    with pytest.raises(ValueError):
        chi_square_gof({"a": 10, "z": 1}, {"a": 0.5, "b": 0.5})
    with pytest.raises(TypeError):
        chi_square_gof([1, 2], {"a": 0.5, "b": 0.5})


def test_chi_square_input_errors():
    with pytest.raises(ValueError):
        chi_square_gof([10, 10], [0.5, 0.6])
    with pytest.raises(ValueError):
        chi_square_gof([10, 10, 1], [0.5, 0.5, 0.0])
    with pytest.raises(InsufficientCountsError):
        chi_square_gof([3, 2], [0.5, 0.5])


def test_chi_square_pools_sparse_cells(rng):
    probs = np.array([0.5, 0.49] + [0.001] * 10)
    r = chi_square_gof(draw_counts(rng, probs, 2000), probs)
    assert r.dof == 2


def test_stratified(rng):
    groups = {i: (draw_counts(rng, PROBS, 3000), PROBS) for i in range(3)}
    groups["tiny"] = ([1, 1, 0, 0], PROBS)
    r = chi_square_stratified(groups)
    assert r.passed and r.dof == 9 and r.extra["strata"] == 3
    with pytest.raises(InsufficientCountsError):
        chi_square_stratified({"tiny": ([1, 1, 0, 0], PROBS)})


def test_ks_one_sample(rng):
    x = rng.normal(size=5000)
    assert ks_one_sample(x, "norm").passed
    assert not ks_one_sample(x + 0.2, "norm").passed
    assert ks_one_sample(rng.beta(2, 3, 3000), "beta", (2, 3)).passed
    with pytest.raises(ValueError):
        ks_one_sample(x[:10], "norm")


def test_ks_two_sample(rng):
    assert ks_two_sample(rng.exponential(size=4000), rng.exponential(size=3000)).passed
    assert not ks_two_sample(rng.exponential(size=4000),
                             rng.exponential(1.3, size=3000)).passed


def test_mean_ci_coverage(rng):
    hits = 0
    for _ in range(2000):
        x = rng.gamma(4.0, size=200)
        m, hw = mc_mean_ci(x, 0.95)
        hits += abs(m - 4) <= hw
    assert 0.925 < hits / 2000 < 0.97


def test_mean_ci_warns_on_heavy_tails(rng):
    with pytest.warns(RuntimeWarning):
        mc_mean_ci(rng.pareto(1.5, size=20000))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mc_mean_ci(rng.normal(size=1000))


def test_mean_z(rng):
    x = rng.normal(3.0, 1.0, size=10_000)
    assert abs(mean_z(x, 3.0)) < 4
    assert mean_z(x, 2.0) > 50
    assert mean_z(np.ones(50), 1.0) == 0.0


def test_report_json_and_bool():
    r = GofReport("x", 1.0, 1, 0.5, 1e-3, True, 10, seed=3)
    assert bool(r) and json.loads(r.to_json())["seed"] == 3
    with pytest.raises(ValueError):
        GofReport("x", 1.0, 1, 1.5, 1e-3, True, 10)
