"""Goodness-of-fit reports for the seeded Monte Carlo checks.

Every test returns a :class:`GofReport` that records the statistic, the
p-value, the pass decision at the declared level and the seed/replicate
bookkeeping. Tests in a suite run at level ``1e-3`` each; with a few dozen
tests the family-wise false-failure rate stays below a few percent
(Bonferroni).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats

LEVEL = 1e-3
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class GofReport:
    test: str
    statistic: float
    dof: Optional[int]
    p_value: float
    level: float
    passed: bool
    n: int
    seed: Optional[int] = None
    replicates: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.p_value <= 1:
            raise ValueError("p-value out of range")

    def __bool__(self):
        return self.passed

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)


class InsufficientCountsError(ValueError):
    """Expected counts stay below the minimum even after pooling."""


def _pool(expected: np.ndarray, observed: np.ndarray, keys: list, min_expected: float):
    """Merge lowest-probability cells until every expected count reaches the minimum.

    Cells are merged in ascending order of expected count (ties broken by
    key text) into one pooled cell.
    """
    order = sorted(range(len(expected)), key=lambda i: (expected[i], str(keys[i])))
    pooled_e, pooled_o = 0.0, 0
    taken = set()
    for i in order:
        if expected[i] >= min_expected and (pooled_e == 0 or pooled_e >= min_expected):
            break
        pooled_e += expected[i]
        pooled_o += observed[i]
        taken.add(i)
    keep = [i for i in range(len(expected)) if i not in taken]
    e = [expected[i] for i in keep]
    o = [observed[i] for i in keep]
    if taken:
        e.append(pooled_e)
        o.append(pooled_o)
    return np.array(e), np.array(o)


def chi_square_gof(observed: Mapping[Hashable, int] | Sequence[int],
                   expected: Mapping[Hashable, float] | Sequence[float],
                   level: float = LEVEL, seed: Optional[int] = None,
                   min_expected: float = MIN_EXPECTED) -> GofReport:
    """Pearson chi-square test of counts against probabilities.

    Mappings are aligned by key; observed keys missing from ``expected``
    are an error (they have probability zero).
    """
    if isinstance(expected, Mapping):
        keys = list(expected)
        obs_map = dict(observed) if isinstance(observed, Mapping) else None
        if obs_map is None:
            raise TypeError("observed must be a mapping when expected is")
        extra_keys = set(obs_map) - set(keys)
        if any(obs_map[k] for k in extra_keys):
            raise ValueError(f"observed outcomes with zero expected probability: "
                             f"{sorted(map(str, extra_keys))[:5]}")
        probs = np.array([float(expected[k]) for k in keys])
        obs = np.array([int(obs_map.get(k, 0)) for k in keys])
    else:
        probs = np.asarray(expected, dtype=float)
        obs = np.asarray(observed, dtype=np.int64)
        keys = list(range(len(probs)))
    if abs(probs.sum() - 1) > 1e-9:
        raise ValueError(f"expected probabilities sum to {probs.sum()}, not 1")
    n = int(obs.sum())
    nz = probs > 0
    if np.any(obs[~nz] > 0):
        raise ValueError("observed outcomes with zero expected probability")
    e, o = _pool(probs[nz] * n, obs[nz], [k for k, z in zip(keys, nz) if z], min_expected)
    if len(e) < 2 or e.min() < min_expected:
        raise InsufficientCountsError("not enough expected counts for a chi-square test")
    stat = float(((o - e) ** 2 / e).sum())
    dof = len(e) - 1
    pv = float(stats.chi2.sf(stat, dof))
    return GofReport("chi_square", stat, dof, pv, level, pv >= level, n, seed, n)


def chi_square_stratified(groups: Mapping[Hashable, tuple], level: float = LEVEL,
                          seed: Optional[int] = None) -> GofReport:
    """Sum of per-stratum chi-square statistics.

    ``groups`` maps a stratum to ``(observed, expected_probs)``; strata with
    too few counts for a test on their own are skipped.
    """
    stat, dof, n, used = 0.0, 0, 0, 0
    for obs, probs in groups.values():
        try:
            r = chi_square_gof(obs, probs, level)
        except InsufficientCountsError:
            continue
        stat += r.statistic
        dof += r.dof
        n += r.n
        used += 1
    if dof == 0:
        raise InsufficientCountsError("no stratum had enough counts")
    pv = float(stats.chi2.sf(stat, dof))
    return GofReport("chi_square_stratified", stat, dof, pv, level, pv >= level, n, seed, n,
                     {"strata": used})


def _check_size(x, name):
    if len(x) < 30:
        raise ValueError(f"{name} needs at least 30 observations, got {len(x)}")


def ks_one_sample(xs, cdf: Callable | str, args=(), level: float = LEVEL,
                  seed: Optional[int] = None) -> GofReport:
    xs = np.asarray(xs, dtype=float)
    _check_size(xs, "KS test")
    r = stats.kstest(xs, cdf, args=args, method="asymp")
    pv = float(r.pvalue)
    return GofReport("ks_one_sample", float(r.statistic), None, pv, level, pv >= level,
                     len(xs), seed, len(xs))


def ks_two_sample(xs, ys, level: float = LEVEL, seed: Optional[int] = None) -> GofReport:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    _check_size(xs, "KS test")
    _check_size(ys, "KS test")
    r = stats.ks_2samp(xs, ys, method="asymp")
    pv = float(r.pvalue)
    return GofReport("ks_two_sample", float(r.statistic), None, pv, level, pv >= level,
                     len(xs) + len(ys), seed, len(xs))


KURTOSIS_WARN = 20.0


def mc_mean_ci(samples, level: float = 0.95) -> tuple[float, float]:
    """Sample mean and normal-approximation half-width at confidence ``level``.

    Warns when the excess kurtosis suggests the normal approximation is poor.
    """
    x = np.asarray(samples, dtype=float)
    _check_size(x, "mean CI")
    m = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd > 0 and stats.kurtosis(x) > KURTOSIS_WARN:
        warnings.warn("heavy-tailed samples: normal CI may be unreliable", RuntimeWarning,
                      stacklevel=2)
    z = stats.norm.ppf(0.5 + level / 2)
    return m, float(z * sd / np.sqrt(len(x)))


def mean_z(samples, target: float) -> float:
    """``(mean - target)/SE``."""
    x = np.asarray(samples, dtype=float)
    se = x.std(ddof=1) / np.sqrt(len(x))
    return float((x.mean() - target) / se) if se > 0 else 0.0
