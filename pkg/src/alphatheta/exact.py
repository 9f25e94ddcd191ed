"""Exact rational laws of small (alpha, theta)-trees and derived checks.

Trees are handled internally as nested tuples: a leaf is its label and a
branch point is ``(c0, c1)`` where ``c1`` holds the smallest label. The law
of ``T_n`` is obtained by pushing the law of ``T_{n-1}`` through the exact
edge-selection probabilities, so the work is proportional to the number of
trees, ``(2n-3)!!``, rather than to the number of insertion histories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Any, Callable, Hashable, Mapping

from .crp import CheckResult, Composition, composition_prob, decrement_q
from .params import ALPHA_GRID, Params, frac_str
from .trees import LabeledBinaryTree, TreeShape, shape_code_nested

MAX_EXACT_N = 8


@dataclass(frozen=True)
class ExactDistribution:
    """Finitely supported law with exact rational probabilities."""

    support: Mapping[Hashable, Fraction] = field(compare=False)

    def __post_init__(self):
        for k, v in self.support.items():
            if v < 0:
                raise ValueError(f"negative probability for {k!r}")

    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    def is_normalized(self) -> bool:
        return self.total() == 1

    def __getitem__(self, key) -> Fraction:
        return self.support.get(key, Fraction(0))

    def __len__(self):
        return len(self.support)

    def items(self):
        return self.support.items()

    def marginal(self, key_fn: Callable) -> "ExactDistribution":
        out: dict = {}
        for k, v in self.support.items():
            kk = key_fn(k)
            out[kk] = out.get(kk, 0) + v
        return ExactDistribution(out)

    def tv_distance(self, other: "ExactDistribution") -> Fraction:
        keys = set(self.support) | set(other.support)
        return sum((abs(self[k] - other[k]) for k in keys), Fraction(0)) / 2


# ---------------------------------------------------------------------------
# nested-tuple machinery


def _size(x) -> int:
    return _size(x[0]) + _size(x[1]) if isinstance(x, tuple) else 1


def _min_label(x) -> int:
    while isinstance(x, tuple):
        x = x[1]
    return x


def _canon(x):
    """Restore the convention that the second child holds the smallest label."""
    if not isinstance(x, tuple):
        return x
    a, b = _canon(x[0]), _canon(x[1])
    return (a, b) if _min_label(b) < _min_label(a) else (b, a)


def _relabel(x, perm):
    if isinstance(x, tuple):
        return (_relabel(x[0], perm), _relabel(x[1], perm))
    return perm[x]


def _insertions(x, new: int, a, t):
    """All ``(tree, relative prob)`` after attaching ``new`` inside subtree ``x``."""
    if not isinstance(x, tuple):
        return [((new, x), Fraction(1))]
    c0, c1 = x
    s, m = _size(x), _size(c0)
    tot = s - 1 + t
    out = []
    if a:
        out.append(((new, x), a / tot))
    w0 = (m - a) / tot
    if w0:
        out.extend(((y, c1), pr * w0) for y, pr in _insertions(c0, new, a, t))
    w1 = (s - m - 1 + t) / tot
    if w1:
        out.extend(((c0, y), pr * w1) for y, pr in _insertions(c1, new, a, t))
    return out


@lru_cache(maxsize=256)
def exact_nested_dist(n: int, p: Params) -> dict:
    if not 1 <= n <= MAX_EXACT_N:
        raise ValueError(f"exact laws are limited to 1 <= n <= {MAX_EXACT_N}, got {n}")
    if n == 1:
        return {1: Fraction(1)}
    out: dict = {}
    for x, px in exact_nested_dist(n - 1, p).items():
        for y, pr in _insertions(x, n, p.alpha, p.theta):
            out[y] = out.get(y, 0) + px * pr
    return out


def exact_tree_dist(n: int, p: Params) -> ExactDistribution:
    """Law of ``T_n`` over labelled trees, ``n <= 8``."""
    return ExactDistribution({LabeledBinaryTree.from_nested(x): v
                              for x, v in exact_nested_dist(n, p).items()})


def exact_shape_dist(n: int, p: Params) -> ExactDistribution:
    out: dict = {}
    for x, v in exact_nested_dist(n, p).items():
        k = TreeShape(shape_code_nested(x))
        out[k] = out.get(k, 0) + v
    return ExactDistribution(out)


def first_split_dist(n: int, p: Params) -> ExactDistribution:
    """Law of the unordered first-split sizes ``(smaller, larger)``."""
    out: dict = {}
    for x, v in exact_nested_dist(n, p).items():
        a, b = _size(x[0]), _size(x[1])
        k = (min(a, b), max(a, b))
        out[k] = out.get(k, 0) + v
    return ExactDistribution(out)


def spinal_dist(n: int, p: Params) -> ExactDistribution:
    """Law of the spinal composition of ``T_n`` (a composition of ``n - 1``)."""
    out: dict = {}
    for x, v in exact_nested_dist(n, p).items():
        parts = []
        while isinstance(x, tuple):
            parts.append(_size(x[0]))
            x = x[1]
        k = tuple(parts)
        out[k] = out.get(k, 0) + v
    return ExactDistribution(out)


def _remove_leaf(x, leaf):
    if not isinstance(x, tuple):
        return None if x == leaf else x
    a, b = _remove_leaf(x[0], leaf), _remove_leaf(x[1], leaf)
    if a is None:
        return b
    if b is None:
        return a
    return (a, b)


# ---------------------------------------------------------------------------
# splitting rules


def splitting_rule_q_circ(m: int, n: int, p: Params) -> Fraction:
    """Probability that the delabelled first split is ``{m, n - m}``."""
    if not 1 <= m <= n / 2:
        raise ValueError(f"need 1 <= m <= n/2, got m={m}, n={n}")
    if 2 * m == n:
        return decrement_q(n - 1, m, p)
    return decrement_q(n - 1, m, p) + decrement_q(n - 1, n - m, p)


def q_bias(x: int, y: int, p: Params) -> Fraction:
    return decrement_q(x + y - 1, x, p)


def q_sym(x: int, y: int, p: Params) -> Fraction:
    return (q_bias(x, y, p) + q_bias(y, x, p)) / 2


def d_sym(x: int, y: int, p: Params) -> Fraction:
    """Discrepancy between a split and the split seen after deleting a uniform leaf."""
    if x < 1 or y < 1:
        raise ValueError("x and y must be positive")
    s = x + y
    return (q_sym(x, y, p) * (1 - (q_sym(1, s, p) + q_sym(s, 1, p)) / (s + 1))
            - q_sym(x + 1, y, p) * Fraction(x + 1, s + 1)
            - q_sym(x, y + 1, p) * Fraction(y + 1, s + 1))


def d_sym_13_closed(p: Params) -> Fraction:
    a, t = p.alpha, p.theta
    return ((1 - a) * (1 - a - t) * (2 - a - t) * (3 - a + t) * (a + t)
            / (10 * (1 + t) ** 2 * (2 + t) ** 2 * (3 + t)))


def check_lemma12(n_max: int, alpha) -> CheckResult:
    """``q_sym`` under ``theta = 1 - alpha`` equals it under ``theta = 2 - alpha``."""
    alpha = Fraction(alpha)
    p1, p2 = Params(alpha, 1 - alpha), Params(alpha, 2 - alpha)
    for n in range(2, n_max + 1):
        for x in range(1, n):
            u, v = q_sym(x, n - x, p1), q_sym(x, n - x, p2)
            if u != v:
                return CheckResult("lemma12", False, {"x": x, "y": n - x, "theta=1-a": u,
                                                      "theta=2-a": v})
    return CheckResult("lemma12", True, details={"alpha": alpha, "n_max": n_max})


def nonsymmetric_rules_differ(n_max: int, alpha) -> CheckResult:
    """Negative control: ``q_bias`` itself differs between the two lines.

    ``passed`` is True when some ``(x, y)`` with ``x + y <= n_max`` separates
    them; the first such pair is the witness.
    """
    alpha = Fraction(alpha)
    p1, p2 = Params(alpha, 1 - alpha), Params(alpha, 2 - alpha)
    for n in range(2, n_max + 1):
        for x in range(1, n):
            u, v = q_bias(x, n - x, p1), q_bias(x, n - x, p2)
            if u != v:
                return CheckResult("nonsymmetric_differ", True,
                                   {"x": x, "y": n - x, "theta=1-a": u, "theta=2-a": v})
    return CheckResult("nonsymmetric_differ", False, details={"n_max": n_max})


# ---------------------------------------------------------------------------
# checks on exact tree laws


def check_normalized(n: int, p: Params) -> CheckResult:
    tot = sum(exact_nested_dist(n, p).values(), Fraction(0))
    return CheckResult("normalized", tot == 1, None if tot == 1 else {"n": n, "total": tot})


def check_first_split(n: int, p: Params) -> CheckResult:
    fs = first_split_dist(n, p)
    for m in range(1, n // 2 + 1):
        u, v = fs[(m, n - m)], splitting_rule_q_circ(m, n, p)
        if u != v:
            return CheckResult("first_split", False, {"n": n, "m": m, "tree_law": u, "q_circ": v})
    return CheckResult("first_split", True, details={"n": n})


def check_spinal(n: int, p: Params) -> CheckResult:
    sd = spinal_dist(n, p)
    from .crp import compositions

    for c in compositions(n - 1):
        u, v = sd[c.parts], composition_prob(c, p)
        if u != v:
            return CheckResult("spinal", False, {"n": n, "composition": str(c),
                                                 "tree_law": u, "composition_prob": v})
    return CheckResult("spinal", True, details={"n": n})


def deleted_leaf_shape_dist(n: int, p: Params) -> ExactDistribution:
    """Law of the shape of ``T_{n+1}`` after removing a uniform leaf."""
    out: dict = {}
    w = Fraction(1, n + 1)
    for x, v in exact_nested_dist(n + 1, p).items():
        for leaf in range(1, n + 2):
            k = TreeShape(shape_code_nested(_remove_leaf(x, leaf)))
            out[k] = out.get(k, 0) + v * w
    return ExactDistribution(out)


def weak_consistency_check(n: int, p: Params) -> CheckResult:
    """Compare the shape law of ``T_n`` with that of ``T_{n+1}`` minus a uniform leaf."""
    if not 1 <= n <= MAX_EXACT_N - 1:
        raise ValueError(f"need 1 <= n <= {MAX_EXACT_N - 1}")
    gap = exact_shape_dist(n, p).tv_distance(deleted_leaf_shape_dist(n, p))
    return CheckResult("weak_consistency", gap == 0,
                       None if gap == 0 else {"n": n, "tv_gap": gap}, {"tv_gap": gap})


def exchangeability_check(n: int, p: Params) -> CheckResult:
    """Is the law of ``T_n`` invariant under all relabellings of the leaves?

    Adjacent transpositions generate the symmetric group, so invariance
    under each of them is checked on the whole support.
    """
    dist = exact_nested_dist(n, p)
    for i in range(1, n):
        perm = {j: j for j in range(1, n + 1)}
        perm[i], perm[i + 1] = i + 1, i
        for x, v in dist.items():
            y = _canon(_relabel(x, perm))
            w = dist.get(y, Fraction(0))
            if w != v:
                return CheckResult("exchangeability", False,
                                   {"n": n, "swap": [i, i + 1],
                                    "tree": repr(LabeledBinaryTree.from_nested(x)),
                                    "p": v, "p_swapped": w})
    return CheckResult("exchangeability", True, details={"n": n})


def exchangeability_check_full(n: int, p: Params) -> bool:
    """Brute-force version over all ``n!`` relabellings (small ``n``)."""
    dist = exact_nested_dist(n, p)
    for pi in permutations(range(1, n + 1)):
        perm = dict(zip(range(1, n + 1), pi))
        for x, v in dist.items():
            if dist.get(_canon(_relabel(x, perm)), 0) != v:
                return False
    return True


def _reduce_nested(x):
    """Relabel a subtree's leaves increasingly onto ``1..size``."""
    labels = []

    def collect(y):
        if isinstance(y, tuple):
            collect(y[0])
            collect(y[1])
        else:
            labels.append(y)

    collect(x)
    pos = {v: i + 1 for i, v in enumerate(sorted(labels))}
    return _relabel(x, pos)


def _leafset(x) -> frozenset:
    if isinstance(x, tuple):
        return _leafset(x[0]) | _leafset(x[1])
    return frozenset((x,))


def check_markov_branching(n: int, p: Params) -> CheckResult:
    """Given the labelled first split, the relabelled subtrees are independent
    copies of ``T_m`` and ``T_{n-m}``."""
    dist = exact_nested_dist(n, p)
    split: dict = {}
    for x, v in dist.items():
        k = (_leafset(x[0]), _leafset(x[1]))
        split[k] = split.get(k, 0) + v
    for x, v in dist.items():
        k = (_leafset(x[0]), _leafset(x[1]))
        d0 = exact_nested_dist(len(k[0]), p)
        d1 = exact_nested_dist(len(k[1]), p)
        rhs = split[k] * d0.get(_reduce_nested(x[0]), 0) * d1.get(_reduce_nested(x[1]), 0)
        if v != rhs:
            return CheckResult("markov_branching", False,
                               {"n": n, "tree": repr(LabeledBinaryTree.from_nested(x)),
                                "p": v, "product": rhs})
    return CheckResult("markov_branching", True, details={"n": n})


# ---------------------------------------------------------------------------
# reports


def _jsonable(x: Any):
    if isinstance(x, Fraction):
        return frac_str(x)
    if isinstance(x, Params):
        return {"alpha": frac_str(x.alpha), "theta": frac_str(x.theta)}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Composition):
        return str(x)
    return x


def report(check: CheckResult, params: Params | None = None) -> dict:
    """JSON-ready ``{params, check, pass, witness}`` with rationals as "num/den"."""
    return {"params": _jsonable(params) if params is not None else None,
            "check": check.name, "pass": bool(check.passed),
            "witness": _jsonable(check.witness)}


def report_json(check: CheckResult, params: Params | None = None) -> str:
    return json.dumps(report(check, params), sort_keys=True)


def lemma12_grid(n_max: int = 20) -> list:
    return [check_lemma12(n_max, a) for a in ALPHA_GRID]
