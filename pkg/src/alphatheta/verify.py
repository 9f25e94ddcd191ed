"""Acceptance suite: twelve criteria, each returning a :class:`CriterionResult`.

Exact criteria compare rationals. Statistical criteria run seeded replicates
through :func:`alphatheta.rng.run_replicates`, so their reports do not depend
on the worker count, and test at level ``1e-3`` each.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import exact
from .beads import d2_closed_form, d2_samples_chain, d2_samples_lengths, d2_samples_masses
from .crp import (check_decrement_recursion, check_row_sums, compositions, leaf1_block_probs)
from .growth import tree_from_history
from .limits import (build_interval_partition_ordered, build_interval_partition_recursive,
                     dislocation_density, dislocation_tail_mass, f_density, laplace_exponent,
                     laplace_exponent_quad, local_time_moment, pick_bead_probs,
                     PHI_S_VALUES)
from .params import ALPHA_GRID, Params, frac_str, parameter_grid
from .rng import run_replicates, sub_seed
from .statlab import LEVEL, chi_square_gof, chi_square_stratified, ks_one_sample, ks_two_sample

DEFAULT_SEED = 20240611


@dataclass(frozen=True)
class Suite:
    """Replicate counts and sizes; ``full`` uses the sizes the criteria name."""

    name: str
    tree_reps: int = 100_000
    walker_reps: int = 100_000
    k_n: int = 100_000
    k_reps: int = 10_000
    partition_reps: int = 10_000
    partition_K: int = 1000
    partition_eps: float = 1e-3
    crp_reps: int = 100_000
    d2_reps: int = 10_000
    d2_budget: int = 10_000
    construction_reps: int = 10_000
    bead_reps: int = 100_000
    bead_budget: int = 1000
    crush_steps: int = 10_000
    chunk: int = 1000


SUITES = {
    "full": Suite("full"),
    "quick": Suite("quick", tree_reps=20_000, walker_reps=20_000, k_n=10_000, k_reps=2000,
                   partition_reps=2000, crp_reps=20_000, d2_reps=2000, d2_budget=2000,
                   construction_reps=2000, bead_reps=10_000),
}
# used by the determinism criterion: several chunks, little work
TINY = Suite("tiny", tree_reps=1500, walker_reps=1500, k_n=1000, k_reps=1500,
             partition_reps=300, partition_K=200, partition_eps=1e-2, crp_reps=1500,
             d2_reps=300, d2_budget=200, construction_reps=300, bead_reps=1500,
             bead_budget=100, crush_steps=200, chunk=500)


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list
    limit_seconds: float
    seconds: float = 0.0

    @property
    def checks_passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    @property
    def within_time(self) -> bool:
        return self.seconds <= self.limit_seconds

    @property
    def passed(self) -> bool:
        return self.checks_passed and self.within_time

    @property
    def n_statistical(self) -> int:
        return sum(1 for c in self.checks if "p_value" in c)

    def payload(self) -> dict:
        """Seed-determined content (no timings)."""
        return {"criterion": self.number, "title": self.title, "checks": self.checks}

    def to_obj(self) -> dict:
        return {**self.payload(), "seconds": round(self.seconds, 3),
                "limit_seconds": self.limit_seconds, "pass": self.passed}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [c["name"] for c in self.checks if not c["pass"]]
        extra = f" failed: {', '.join(failed)}" if failed else ""
        if not self.within_time:
            extra += f" (over time limit {self.limit_seconds:.0f}s)"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.seconds:.1f}s){extra}"


def _clean(x):
    if isinstance(x, Fraction):
        return frac_str(x)
    if isinstance(x, Params):
        return f"({frac_str(x.alpha)}, {frac_str(x.theta)})"
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x if isinstance(x, (str, int, type(None))) else str(x)


def _check(name: str, passed: bool, **info) -> dict:
    return {"name": name, "pass": bool(passed), **_clean(info)}


def _gof(name: str, rep, **info) -> dict:
    return _check(name, rep.passed, statistic=rep.statistic, p_value=rep.p_value,
                  dof=rep.dof, n=rep.n, **info)


def _exact_check(name: str, res, **info) -> dict:
    return _check(name, res.passed, witness=res.witness, **info)


def _gather(func, reps: int, seed: int, suite: Suite, workers, *args) -> np.ndarray:
    return np.asarray(run_replicates(func, reps, seed, *args, chunk=suite.chunk,
                                     workers=workers))


def _histogram(rows: np.ndarray) -> dict:
    vals, counts = np.unique(rows, axis=0, return_counts=True)
    return {tree_from_history(r): int(c) for r, c in zip(vals, counts)}


def _float_law(dist) -> dict:
    return {k: float(v) for k, v in dist.items()}


# ---------------------------------------------------------------------------
# replicate chunks (top level so that worker processes can import them)


def chunk_tree_histories(rng, count, n, p):
    from ._kernels import grow_histories

    return grow_histories(count, n, p.a, p.t, rng)


def chunk_walker_histories(rng, count, n, theta):
    from ._kernels import walker_histories

    return walker_histories(count, n, float(theta), rng)


def chunk_table_counts(rng, count, n, p):
    from ._kernels import table_counts

    return table_counts(count, n, p.a, p.t, rng) / n ** p.a


def chunk_partitions(rng, count, p, K, eps):
    out = np.empty((count, 5))
    for i in range(count):
        o = build_interval_partition_ordered(p, K, rng)
        r = build_interval_partition_recursive(p, eps, rng)
        out[i] = (o.largest(), o.count_above(0.01), o.interval_of(0)[0],
                  r.largest(), r.count_above(0.01))
    return out


def chunk_crp(rng, count, n, p):
    from ._kernels import crp_batch

    parts, ks, c1 = crp_batch(count, n, p.a, p.t, rng)
    return np.column_stack((parts, ks, c1))


def chunk_d2_chain(rng, count, alpha, budget):
    return d2_samples_chain(alpha, count, rng, budget)


def chunk_d2_masses(rng, count, alpha):
    return d2_samples_masses(alpha, count, rng)


def chunk_d2_lengths(rng, count, alpha):
    return d2_samples_lengths(alpha, count, rng)


def chunk_crush_histories(rng, count, k, budget, p):
    from ._kernels import crush_histories

    return crush_histories(count, k, budget, p.a, p.t, rng)


# ---------------------------------------------------------------------------
# criteria


def criterion_1(suite, seed, workers) -> list:
    checks = []
    for p in parameter_grid():
        checks.append(_exact_check("row_sums", check_row_sums(50, p), params=p))
        checks.append(_exact_check("decrement_recursion", check_decrement_recursion(50, p),
                                   params=p))
    return checks


def criterion_2(suite, seed, workers) -> list:
    return [_exact_check("lemma12", exact.check_lemma12(20, a), alpha=a) for a in ALPHA_GRID]


def criterion_3(suite, seed, workers) -> list:
    checks = []
    for p in parameter_grid():
        d11, d12, d13 = exact.d_sym(1, 1, p), exact.d_sym(1, 2, p), exact.d_sym(1, 3, p)
        closed = exact.d_sym_13_closed(p)
        on_line = p.theta in (1 - p.alpha, 2 - p.alpha)
        checks.append(_check("dsym_1_1_and_1_2_zero", d11 == 0 and d12 == 0, params=p,
                             d11=d11, d12=d12))
        checks.append(_check("dsym_1_3_closed_form", d13 == closed, params=p, d13=d13,
                             closed=closed))
        checks.append(_check("dsym_1_3_zero_iff_on_lines", (d13 == 0) == on_line, params=p,
                             on_line=on_line))
    return checks


def criterion_4(suite, seed, workers) -> list:
    checks = []
    grid = parameter_grid()
    for p in grid:
        for n in range(1, 8):
            checks.append(_exact_check("normalized", exact.check_normalized(n, p), params=p,
                                       n=n))
        for n in range(2, 8):
            checks.append(_exact_check("first_split", exact.check_first_split(n, p),
                                       params=p, n=n))
            checks.append(_exact_check("spinal", exact.check_spinal(n, p), params=p, n=n))
    for a in ALPHA_GRID:
        for t in (1 - a, 2 - a):
            p = Params(a, t)
            for n in range(1, 7):
                checks.append(_exact_check("weak_consistency",
                                           exact.weak_consistency_check(n, p), params=p, n=n))
    bad = exact.weak_consistency_check(4, Params(Fraction(1, 2), 2))
    gap = bad.details["tv_gap"]
    checks.append(_check("weak_consistency_fails", gap > 0, params=Params(Fraction(1, 2), 2),
                         n=4, tv_gap=gap))
    for p in grid:
        ok = [bool(exact.exchangeability_check(n, p)) for n in range(2, 6)]
        expect = p == Params(Fraction(1, 2), Fraction(1, 2))
        checks.append(_check("exchangeable_iff_half_half", all(ok) == expect, params=p,
                             exchangeable_n2_to_5=all(ok)))
    return checks


CRIT5_PARAMS = (Params(Fraction(1, 10), 0), Params(Fraction(1, 2), Fraction(1, 2)),
                Params(Fraction(9, 10), 2))


def criterion_5(suite, seed, workers) -> list:
    checks = []
    for i, p in enumerate(CRIT5_PARAMS):
        rows = _gather(chunk_tree_histories, suite.tree_reps, sub_seed(seed, 5, i), suite,
                       workers, 5, p)
        rep = chi_square_gof(_histogram(rows), _float_law(exact.exact_tree_dist(5, p)))
        checks.append(_gof("tree_law_n5", rep, params=p))
    for i, theta in enumerate((Fraction(1, 2), Fraction(2))):
        p = Params(0, theta)
        rows = _gather(chunk_walker_histories, suite.walker_reps, sub_seed(seed, 5, 10 + i),
                       suite, workers, 5, theta)
        rep = chi_square_gof(_histogram(rows), _float_law(exact.exact_tree_dist(5, p)))
        checks.append(_gof("walker_vs_alpha0_law_n5", rep, params=p))
    return checks


def criterion_6(suite, seed, workers) -> list:
    p = Params(Fraction(1, 2), Fraction(1, 2))
    x = _gather(chunk_table_counts, suite.k_reps, sub_seed(seed, 6), suite, workers,
                suite.k_n, p)
    target = local_time_moment(1, p)
    rel = abs(x.mean() / target - 1)
    return [_check("moment_formula_equals_sqrt_pi", abs(target - math.sqrt(math.pi)) < 1e-12,
                   moment=target),
            _check("mean_K_over_n_alpha", rel <= 0.05, params=p, n=suite.k_n,
                   reps=suite.k_reps, mean=x.mean(), target=target, rel_error=rel)]


CRIT7_PARAMS = (Params(Fraction(1, 2), Fraction(1, 2)), Params(Fraction(1, 3), 2))


def criterion_7(suite, seed, workers) -> list:
    checks = []
    for i, p in enumerate(CRIT7_PARAMS):
        x = _gather(chunk_partitions, suite.partition_reps, sub_seed(seed, 7, i), suite,
                    workers, p, suite.partition_K, suite.partition_eps)
        checks.append(_gof("largest_interval", ks_two_sample(x[:, 0], x[:, 3]), params=p))
        checks.append(_gof("count_above_0.01", ks_two_sample(x[:, 1], x[:, 4]), params=p))
        rep = ks_one_sample(x[:, 2], "beta", args=(p.a, 1 - p.a + p.t))
        checks.append(_gof("table1_left_end_beta", rep, params=p))
    return checks


CRIT8_PARAMS = (Params(Fraction(1, 2), Fraction(1, 2)), Params(Fraction(2, 3), 1),
                Params(Fraction(1, 3), 0))


def criterion_8(suite, seed, workers) -> list:
    n = 6
    checks = []
    for i, p in enumerate(CRIT8_PARAMS):
        x = _gather(chunk_crp, suite.crp_reps, sub_seed(seed, 8, i), suite, workers, n, p)
        parts, ks, c1 = x[:, :n], x[:, n], x[:, n + 1]
        if p.theta == 0:
            checks.append(_check("customer1_last_block", bool(np.all(c1 == ks - 1)), params=p))
            continue
        keys, inv = np.unique(parts, axis=0, return_inverse=True)
        inv = inv.ravel()
        groups = {}
        for g, row in enumerate(keys):
            c = tuple(int(v) for v in row if v)
            obs = np.bincount(c1[inv == g], minlength=len(c))
            groups[c] = (obs, [float(q) for q in leaf1_block_probs(c, p)])
        checks.append(_gof("customer1_block_given_composition", chi_square_stratified(groups),
                           params=p, strata=len(groups)))
    for p in parameter_grid():
        ok = True
        for c in compositions(n):
            masses = [Fraction(v, n) for v in c.parts]
            if pick_bead_probs(masses, Fraction(0), p) != leaf1_block_probs(c, p) + [0]:
                ok = False
                break
        checks.append(_check("pick_bead_exact", ok, params=p, n=n,
                             witness=None if ok else str(c)))
    return checks


def criterion_9(suite, seed, workers) -> list:
    from scipy import special

    checks = []
    u = np.linspace(0.501, 0.9999, 60)
    eps = 1e-4
    for p in parameter_grid():
        g = special.gamma(1 - p.a)
        rel = max(abs(laplace_exponent_quad(s, p) / (float(laplace_exponent(s, p)) / g) - 1)
                  for s in PHI_S_VALUES)
        checks.append(_check("phi_quadrature", rel <= 1e-6, params=p, max_rel_error=rel))
        lhs = dislocation_density(u, p)
        rhs = u * f_density(u, p) + (1 - u) * f_density(1 - u, p)
        err = float(np.max(np.abs(lhs / rhs - 1)))
        checks.append(_check("dislocation_identity", err <= 1e-12, params=p, max_rel_error=err))
        ratio = dislocation_tail_mass(eps, p) / (eps ** -p.a / g)
        # the relative correction is of order eps^alpha: only alpha >= 1/2
        # is inside the 2% band at eps = 1e-4
        gated = p.alpha >= Fraction(1, 2)
        checks.append(_check("tail_mass_ratio", (abs(ratio - 1) <= 0.02) or not gated,
                             params=p, eps=eps, ratio=ratio, gated=gated))
    return checks


def criterion_10(suite, seed, workers) -> list:
    a = Fraction(1, 2)
    x = _gather(chunk_d2_chain, suite.d2_reps, sub_seed(seed, 10, 0), suite, workers, a,
                suite.d2_budget)
    target = math.gamma(1.5)
    rel = abs(x.mean() / target - 1)
    ys = _gather(chunk_d2_masses, suite.construction_reps, sub_seed(seed, 10, 1), suite,
                 workers, a)
    zs = _gather(chunk_d2_lengths, suite.construction_reps, sub_seed(seed, 10, 2), suite,
                 workers, a)
    return [_check("closed_form_equals_gamma_3_2", abs(d2_closed_form(1, 0.5) - target) < 1e-14,
                   closed_form=d2_closed_form(1, 0.5)),
            _check("mean_d2_from_chain", rel <= 0.05, alpha=a, reps=suite.d2_reps,
                   budget=suite.d2_budget, mean=x.mean(), target=target, rel_error=rel),
            _gof("masses_vs_lengths_construction", ks_two_sample(ys, zs), alpha=a)]


CRIT11_RUNS = ((Params(Fraction(1, 2), Fraction(1, 2)), (3, 4, 5)),
               (Params(Fraction(1, 3), 0), (5,)))


def criterion_11(suite, seed, workers) -> list:
    from .beads import mass_drift

    checks = []
    for i, (p, ks) in enumerate(CRIT11_RUNS):
        for k in ks:
            rows = _gather(chunk_crush_histories, suite.bead_reps, sub_seed(seed, 11, i, k),
                           suite, workers, k, suite.bead_budget, p)
            rep = chi_square_gof(_histogram(rows), _float_law(exact.exact_tree_dist(k, p)))
            checks.append(_gof("bead_tree_shape", rep, params=p, k=k, budget=suite.bead_budget))
    p = CRIT11_RUNS[0][0]
    drift = mass_drift(suite.crush_steps + 1, p, np.random.default_rng(sub_seed(seed, 11, 99)))
    checks.append(_check("mass_conservation", drift <= 1e-9, params=p, steps=suite.crush_steps,
                         drift=drift))
    return checks


DETERMINISM_CRITERIA = (5, 6, 7, 8, 10, 11)


def criterion_12(suite, seed, workers) -> list:
    checks = []
    for n in DETERMINISM_CRITERIA:
        fn = CRITERIA[n][2]
        one = json.dumps(fn(TINY, seed, 1), sort_keys=True)
        two = json.dumps(fn(TINY, seed, 2), sort_keys=True)
        checks.append(_check("identical_across_workers", one == two, criterion=n,
                             bytes=len(one)))
    return checks


CRITERIA: dict[int, tuple[str, float, Callable]] = {
    1: ("decrement matrix rows and recursion, n <= 50", 10, criterion_1),
    2: ("symmetrised splitting equality, n <= 20", 10, criterion_2),
    3: ("d_sym values and zero set", 5, criterion_3),
    4: ("exact tree law identities, n <= 7", 120, criterion_4),
    5: ("sampled T_5 against exact law; walker", 60, criterion_5),
    6: ("mean table count against local time moment", 120, criterion_6),
    7: ("two interval partition constructions", 60, criterion_7),
    8: ("customer 1 block law; exact bead pick", 60, criterion_8),
    9: ("Laplace exponent and dislocation density", 10, criterion_9),
    10: ("root to first branch point distance", 120, criterion_10),
    11: ("bead tree shapes and mass conservation", 120, criterion_11),
    12: ("determinism across worker counts", 600, criterion_12),
}


def run_criterion(n: int, suite: Suite | str = "full", seed: int = DEFAULT_SEED,
                  workers: Optional[int] = None) -> CriterionResult:
    suite = SUITES[suite] if isinstance(suite, str) else suite
    title, limit, fn = CRITERIA[n]
    t0 = time.perf_counter()
    checks = fn(suite, seed, workers)
    return CriterionResult(n, title, checks, limit, time.perf_counter() - t0)


def run_suite(suite: str = "full", seed: int = DEFAULT_SEED, workers: Optional[int] = None,
              only=None, progress: Optional[Callable[[CriterionResult], None]] = None) -> list:
    out = []
    for n in sorted(only or CRITERIA):
        r = run_criterion(n, suite, seed, workers)
        if progress:
            progress(r)
        out.append(r)
    return out
