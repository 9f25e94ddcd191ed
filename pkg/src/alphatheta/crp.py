"""Ordered Chinese restaurant process and its regenerative compositions.

Customers arrive one at a time. With ``k`` occupied tables and ``n``
customers seated, customer ``n+1`` joins table ``i`` with probability
``(n_i - alpha)/(n + theta)`` and opens a new table with probability
``(k alpha + theta)/(n + theta)``. New tables are slotted into a
left-to-right (spinal) order: right of everything with weight ``theta``,
immediately left of any existing table with weight ``alpha`` each.

The table sizes read left to right form a random composition ``C_n`` of
``n``. Its law has the product form ``prod_j q(N_j, n_j)`` over suffix sums
``N_j``, with the decrement matrix ``q`` of :func:`decrement_q`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .params import Params, rising
from .rng import as_generator


@dataclass(frozen=True, order=True)
class Composition:
    """Ordered sequence of positive parts.

    ``customer1_block`` optionally records the (0-based) index of the part
    that holds customer 1.
    """

    parts: tuple
    customer1_block: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        if any(x < 1 for x in parts):
            raise ValueError(f"composition parts must be positive: {parts}")
        object.__setattr__(self, "parts", parts)
        c1 = self.customer1_block
        if c1 is not None and not 0 <= c1 < len(parts):
            raise ValueError("customer1_block out of range")

    @property
    def total(self) -> int:
        return sum(self.parts)

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def __str__(self):
        return ",".join(str(x) for x in self.parts)

    @classmethod
    def parse(cls, text: str) -> "Composition":
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(int(x) for x in text.split(",")))

    def suffix_sums(self) -> list[int]:
        """``N_j = n_j + n_{j+1} + ...`` for each j, plus a trailing 0."""
        out = [0]
        for x in reversed(self.parts):
            out.append(out[-1] + x)
        return out[::-1]


def compositions(n: int) -> Iterator[Composition]:
    """All ``2^(n-1)`` compositions of ``n >= 1``."""
    if n < 1:
        raise ValueError("n must be positive")
    for mask in range(1 << (n - 1)):
        parts = []
        run = 1
        for i in range(n - 1):
            if mask >> i & 1:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield Composition(tuple(parts))


# ---------------------------------------------------------------------------
# seating dynamics


@dataclass(frozen=True)
class OrderedCrpState:
    """Seating plan: ``tables`` lists ``(size, birth)`` in spinal order.

    Births are 1-based; the table with birth 1 holds customer 1.
    """

    n: int
    tables: tuple

    def __post_init__(self):
        tables = tuple((int(s), int(b)) for s, b in self.tables)
        object.__setattr__(self, "tables", tables)
        if sum(s for s, _ in tables) != self.n:
            raise ValueError("table sizes must sum to n")
        if sorted(b for _, b in tables) != list(range(1, len(tables) + 1)):
            raise ValueError("birth indices must be a permutation of 1..K")

    @classmethod
    def initial(cls) -> "OrderedCrpState":
        return cls(1, ((1, 1),))

    @property
    def k(self) -> int:
        return len(self.tables)

    @property
    def customer1_table(self) -> int:
        return 1

    @property
    def customer1_block(self) -> int:
        """Spinal index (0-based) of the table holding customer 1."""
        return next(i for i, (_, b) in enumerate(self.tables) if b == 1)

    def composition(self) -> Composition:
        return Composition(tuple(s for s, _ in self.tables), self.customer1_block)

    def birth_order_sizes(self) -> tuple:
        """Table sizes listed by order of appearance (size-biased view)."""
        return tuple(s for s, _ in sorted(self.tables, key=lambda x: x[1]))

    def order(self) -> tuple:
        """``sigma`` with ``sigma[j-1]`` the spinal position (1-based) of table j."""
        pos = {b: i + 1 for i, (_, b) in enumerate(self.tables)}
        return tuple(pos[j] for j in range(1, self.k + 1))


def new_table_slot_probs(k: int, p: Params) -> list:
    """Probabilities of the ``k+1`` slots for a new table among ``k`` tables.

    Slot ``i < k`` places it immediately left of the i-th table; slot ``k``
    is right of all tables.
    """
    w = k * p.alpha + p.theta
    if k == 0:
        return [Fraction(1)]
    if w == 0:
        raise ValueError("no new table can be opened when k*alpha + theta = 0")
    return [p.alpha / w] * k + [p.theta / w]


def seat_customer(s: OrderedCrpState, p: Params, rng) -> OrderedCrpState:
    """Seat customer ``n+1`` according to the ordered (alpha, theta) plan."""
    rng = as_generator(rng)
    a, t = p.a, p.t
    n, k = s.n, s.k
    tables = list(s.tables)
    u = rng.random() * (n + t)
    w_new = k * a + t
    if u < w_new:
        v = rng.random() * w_new
        slot = k if v < t else min(int((v - t) / a), k - 1)
        tables.insert(slot, (1, k + 1))
    else:
        u -= w_new
        for i, (size, b) in enumerate(tables):
            u -= size - a
            if u < 0 or i == k - 1:
                tables[i] = (size + 1, b)
                break
    return OrderedCrpState(n + 1, tuple(tables))


def simulate_crp(n: int, p: Params, rng) -> OrderedCrpState:
    """Seat ``n`` customers (compiled loop)."""
    from ._kernels import crp_kernel

    if n < 1:
        raise ValueError("need at least one customer")
    spinal, sizes = crp_kernel(int(n), p.a, p.t, as_generator(rng))
    return OrderedCrpState(n, tuple((int(sizes[b]), int(b) + 1) for b in spinal))


def simulate_compositions(reps: int, n: int, p: Params, rng):
    """Batch of spinal compositions: ``(parts, K, customer1_block)`` arrays."""
    from ._kernels import crp_batch

    return crp_batch(int(reps), int(n), p.a, p.t, as_generator(rng))


# ---------------------------------------------------------------------------
# table order permutations


def records(pi: Sequence[int]) -> int:
    """Number of left-to-right maxima of ``pi`` (the first entry counts)."""
    r, top = 0, -math.inf
    for x in pi:
        if x > top:
            r += 1
            top = x
    return r


def perm_prob(pi: Sequence[int], p: Params) -> Fraction:
    """Probability that the table order after ``k`` tables equals ``pi``.

    ``pi[j-1]`` is the left-to-right position of table j. Computed as the
    sequential product of slot probabilities, which covers ``alpha = 0``
    (order of appearance) and ``theta = 0`` (table 1 stays right-most).
    """
    pi = tuple(pi)
    k = len(pi)
    if sorted(pi) != list(range(1, k + 1)):
        raise ValueError(f"{pi} is not a permutation of 1..{k}")
    out = Fraction(1)
    top = pi[0] if pi else 0
    for j in range(2, k + 1):
        w = (j - 1) * p.alpha + p.theta
        if w == 0:
            raise ValueError("alpha = theta = 0 admits a single table only")
        if pi[j - 1] > top:
            out *= p.theta / w
            top = pi[j - 1]
        else:
            out *= p.alpha / w
    return out


def perm_prob_closed(pi: Sequence[int], p: Params) -> Fraction:
    """``(theta/alpha)^R(pi) / [theta/alpha]_k`` for ``alpha, theta > 0``."""
    if p.alpha <= 0 or p.theta <= 0:
        raise ValueError("closed form needs alpha > 0 and theta > 0")
    r = p.theta / p.alpha
    return r ** records(pi) / rising(r, len(pi))


def all_perm_probs(k: int, p: Params) -> dict:
    return {pi: perm_prob(pi, p) for pi in permutations(range(1, k + 1))}


# ---------------------------------------------------------------------------
# decrement matrix and composition probabilities


def _check_nm(n: int, m: int):
    if n < 1 or not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")


@lru_cache(maxsize=4096)
def decrement_row(n: int, p: Params) -> tuple:
    """``(q(n,1), ..., q(n,n))`` as exact rationals."""
    if n < 1:
        raise ValueError("n must be positive")
    a, t = p.alpha, p.theta
    row = []
    low = Fraction(1)      # [1 - a]_{m-1}
    den = Fraction(1)      # [n - m + t]_m
    for m in range(1, n):
        den *= n - m + t
        row.append(math.comb(n, m) * ((n - m) * a + m * t) / n * low / den)
        low *= m - a
    # m = n: the factor theta cancels against [theta]_n = theta [1 + theta]_{n-1}
    row.append(low / rising(1 + t, n - 1))
    return tuple(row)


def decrement_q(n: int, m: int, p: Params) -> Fraction:
    """Probability that the first part of ``C_n`` equals ``m``."""
    _check_nm(n, m)
    return decrement_row(n, p)[m - 1]


def decrement_q_float(n: int, m: int, p: Params) -> float:
    return float(decrement_q(n, m, p))


def composition_prob(c: Composition | Sequence[int], p: Params) -> Fraction:
    """``P(C_n = c)`` as the product of decrements over suffix sums."""
    c = c if isinstance(c, Composition) else Composition(tuple(c))
    out = Fraction(1)
    sums = c.suffix_sums()
    for j, x in enumerate(c.parts):
        out *= decrement_q(sums[j], x, p)
    return out


@dataclass(frozen=True)
class CheckResult:
    """Outcome of an exact identity check; ``witness`` locates a failure."""

    name: str
    passed: bool
    witness: Optional[dict] = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def check_row_sums(n_max: int, p: Params) -> CheckResult:
    for n in range(1, n_max + 1):
        s = sum(decrement_row(n, p))
        if s != 1:
            return CheckResult("row_sums", False, {"n": n, "sum": s})
    return CheckResult("row_sums", True, details={"n_max": n_max})


def check_decrement_recursion(n_max: int, p: Params,
                              q: Callable[[int, int, Params], Fraction] = decrement_q
                              ) -> CheckResult:
    """Verify the one-step seating recursion of ``q`` exactly.

    ``q(n+1, m) = q(n, m-1)(m-1-a)/(n+t) + q(n, m)(n+t-m)/(n+t) + a/(n+t) 1{m=1}``
    for ``1 <= m <= n+1 <= n_max``. A replacement ``q`` can be passed in as
    a negative control; the first failing ``(n+1, m)`` is returned.
    """
    a, t = p.alpha, p.theta

    def qq(n, m):
        return q(n, m, p) if 1 <= m <= n else Fraction(0)

    for n in range(1, n_max):
        for m in range(1, n + 2):
            rhs = (qq(n, m - 1) * (m - 1 - a) + qq(n, m) * (n + t - m)
                   + (a if m == 1 else 0)) / (n + t)
            lhs = qq(n + 1, m)
            if lhs != rhs:
                return CheckResult("decrement_recursion", False,
                                   {"n": n + 1, "m": m, "lhs": lhs, "rhs": rhs})
    return CheckResult("decrement_recursion", True, details={"n_max": n_max})


# ---------------------------------------------------------------------------
# location of customer 1


def leaf1_first_block_prob(n1: int, n: int, p: Params) -> Fraction:
    """P(customer 1 is in the first block | first block has size ``n1``)."""
    _check_nm(n, n1)
    rest = n - n1
    if rest == 0:
        return Fraction(1)
    if p.theta == 0:
        return Fraction(0)
    return n1 * p.theta / (n1 * p.theta + rest * p.alpha)


def leaf1_block_probs(c: Composition | Sequence[int], p: Params) -> list:
    """Conditional law of the block holding customer 1 given ``C_n = c``."""
    c = c if isinstance(c, Composition) else Composition(tuple(c))
    sums = c.suffix_sums()
    out = []
    stay = Fraction(1)
    for j, x in enumerate(c.parts):
        pj = leaf1_first_block_prob(x, sums[j], p)
        out.append(stay * pj)
        stay *= 1 - pj
    return out


def discrete_local_time(s: OrderedCrpState | Composition, u):
    """Number of partial sums ``S_{n,j}/n <= u`` (vectorised over ``u``)."""
    parts = s.composition().parts if isinstance(s, OrderedCrpState) else s.parts
    cums = np.cumsum(parts)
    n = cums[-1]
    return np.searchsorted(cums, np.asarray(u) * n, side="right")


# ---------------------------------------------------------------------------
# exact laws by dynamic programming over seating paths


@lru_cache(maxsize=64)
def exact_crp_states(n: int, p: Params) -> dict:
    """Exact law of ``(spinal composition, index of customer 1's block)``."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return {((1,), 0): Fraction(1)}
    a, t = p.alpha, p.theta
    out: dict = {}
    m = n - 1
    for (parts, c1), pr in exact_crp_states(m, p).items():
        k = len(parts)
        den = m + t
        for i, x in enumerate(parts):
            w = x - a
            if w:
                new = parts[:i] + (x + 1,) + parts[i + 1:]
                out[(new, c1)] = out.get((new, c1), 0) + pr * w / den
        for slot in range(k + 1):
            w = t if slot == k else a
            if w:
                new = parts[:slot] + (1,) + parts[slot:]
                nc1 = c1 + 1 if slot <= c1 else c1
                out[(new, nc1)] = out.get((new, nc1), 0) + pr * w / den
    return out


def exact_composition_dist(n: int, p: Params) -> dict:
    """Exact law of ``C_n`` (keyed by parts tuple) from the seating DP."""
    out: dict = {}
    for (parts, _), pr in exact_crp_states(n, p).items():
        out[parts] = out.get(parts, 0) + pr
    return out


def check_regenerative(n: int, p: Params) -> CheckResult:
    """Seating-path law of ``C_n`` equals ``q(n, n1) * P(C_{n-n1} = rest)``."""
    dist = exact_composition_dist(n, p)
    for c in compositions(n):
        lhs = dist.get(c.parts, Fraction(0))
        rest = c.parts[1:]
        rhs = decrement_q(n, c.parts[0], p) * (composition_prob(rest, p) if rest else 1)
        if lhs != rhs:
            return CheckResult("regenerative", False, {"composition": str(c), "dp": lhs,
                                                       "product": rhs})
    return CheckResult("regenerative", True, details={"n": n})


def check_leaf1_dp(n: int, p: Params) -> CheckResult:
    """Conditional law of customer 1's block from the DP against the closed form."""
    joint = exact_crp_states(n, p)
    marg = exact_composition_dist(n, p)
    for parts, pc in marg.items():
        if pc == 0:
            continue
        formula = leaf1_block_probs(parts, p)
        for j in range(len(parts)):
            lhs = joint.get((parts, j), Fraction(0)) / pc
            if lhs != formula[j]:
                return CheckResult("leaf1_blocks", False, {"composition": parts, "block": j,
                                                           "dp": lhs, "formula": formula[j]})
    return CheckResult("leaf1_blocks", True, details={"n": n})


def strong_consistency_witness(p: Params) -> dict:
    """Both sides of the (C_2, C_3) test of strong sampling consistency.

    ``joint`` is ``P(C_2 = (2), C_3 = (2,1))`` from the seating rules;
    ``resampled`` is ``P(C_3 = (2,1))/3``, the probability that deleting a
    uniform ball from ``C_3 = (2,1)`` leaves ``(2)``. They agree iff
    ``alpha = theta``.
    """
    a, t = p.alpha, p.theta
    # C_2 = (2), then a new table to the right of it
    joint = decrement_q(2, 2, p)
    if 1 * a + t:
        joint *= (a + t) / (2 + t) * (t / (a + t))
    else:
        joint = Fraction(0)
    resampled = composition_prob((2, 1), p) / 3
    return {"joint": joint, "resampled": resampled, "equal": joint == resampled,
            "closed_form_joint": (1 - a) * t / ((1 + t) * (2 + t))}


def crp_csv_rows(states: Sequence[OrderedCrpState]) -> list:
    """Rows ``(replicate, n, composition, customer1_block)`` for CSV export."""
    return [(i, s.n, str(s.composition()), s.customer1_block) for i, s in enumerate(states)]


def local_time_sup_gaps(p: Params, ns: Sequence[int], rng) -> np.ndarray:
    """Coupled convergence proxy for the scaled local time.

    Seats ``ns[-1]`` customers once and returns, for every earlier snapshot
    ``n`` in ``ns``, ``sup_u |n^-a L_n(u) - N^-a L_N(u)|`` against the final
    size ``N``. The gaps should shrink as ``n`` grows.
    """
    from ._kernels import crp_sup_gaps

    ns = np.asarray(sorted(int(x) for x in ns), dtype=np.int64)
    if len(ns) < 2 or ns[0] < 1:
        raise ValueError("need at least two positive snapshot sizes")
    return crp_sup_gaps(ns, p.a, p.t, as_generator(rng))
