"""Limiting objects of the ordered restaurant.

Dirichlet vectors and Polya urns, GEM weights, two constructions of the
regenerative (alpha, theta) interval partition, the local time
``L = lim K_n / n^alpha`` (moments and an exact sampler), the Laplace
exponent of the associated subordinator with its Levy density, the
dislocation density of the limiting fragmentation, and strings of beads
together with the switching rule that locates the block of customer 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from .params import Params
from .rng import as_generator

# ---------------------------------------------------------------------------
# Dirichlet, urns, GEM


def sample_dirichlet(gammas: Sequence[float], rng, size: Optional[int] = None) -> np.ndarray:
    """Dirichlet(gammas) by stick-breaking with beta(g_i, g_{i+1} + ... + g_m)."""
    g = np.asarray(gammas, dtype=float)
    if g.ndim != 1 or g.size == 0 or np.any(g <= 0):
        raise ValueError("Dirichlet parameters must be a non-empty vector of positive reals")
    rng = as_generator(rng)
    shape = () if size is None else (size,)
    out = np.empty(shape + (g.size,))
    stick = np.ones(shape)
    tails = np.cumsum(g[::-1])[::-1]
    for i in range(g.size - 1):
        w = rng.beta(g[i], tails[i + 1], size=shape or None)
        out[..., i] = stick * w
        stick = stick * (1 - w)
    out[..., -1] = stick
    return out


def urn_simulate(gammas: Sequence[float], steps: int, rng):
    """Polya urn started from weights ``gammas``; returns ``(counts, counts/steps)``."""
    from ._kernels import urn_kernel

    g = np.asarray(gammas, dtype=float)
    if np.any(g <= 0):
        raise ValueError("urn weights must be positive")
    if steps < 1:
        raise ValueError("steps must be positive")
    counts = urn_kernel(g, int(steps), as_generator(rng))
    return counts, counts / steps


@dataclass(frozen=True)
class GemWeights:
    """First ``K`` stick-breaking frequencies and the unassigned remainder."""

    P: np.ndarray
    remainder: float

    @property
    def K(self) -> int:
        return len(self.P)


def _gem_sticks(p: Params, K: int, rng, size=None) -> np.ndarray:
    a, t = p.a, p.t
    if p.alpha >= 1:
        raise ValueError("alpha = 1 gives singleton blocks only; GEM weights are all zero")
    i = np.arange(1, K + 1)
    bpar = t + i * a
    shape = (K,) if size is None else (size, K)
    w = np.ones(shape)
    ok = bpar > 0
    if ok.any():
        w[..., ok] = rng.beta(1 - a, bpar[ok], size=shape[:-1] + (int(ok.sum()),))
    return w


def gem_weights(p: Params, K: int, rng) -> GemWeights:
    """``P_i = W_i prod_{j<i}(1 - W_j)`` with ``W_i ~ beta(1 - alpha, theta + i alpha)``."""
    rng = as_generator(rng)
    w = _gem_sticks(p, K, rng)
    left = np.concatenate(([1.0], np.cumprod(1 - w)))
    return GemWeights(w * left[:-1], float(left[-1]))


def sample_table_order(p: Params, K: int, rng) -> np.ndarray:
    """Birth indices (0-based) of ``K`` tables listed left to right."""
    from ._kernels import table_order_kernel

    if K < 1:
        raise ValueError("K must be positive")
    if p.alpha == 0 and p.theta == 0 and K > 1:
        raise ValueError("alpha = theta = 0 admits a single table only")
    return table_order_kernel(int(K), p.a, p.t, as_generator(rng))


@dataclass(frozen=True)
class IntervalPartitionApprox:
    """Finitely many disjoint intervals of [0, 1] in left-to-right order.

    ``labels`` optionally names each interval (birth index in the ordered
    construction). Mass not carried by any interval is ``leftover``.
    """

    g: np.ndarray
    d: np.ndarray
    leftover: float
    labels: Optional[np.ndarray] = field(default=None, compare=False)

    @property
    def masses(self) -> np.ndarray:
        return self.d - self.g

    def __len__(self):
        return len(self.g)

    def largest(self) -> float:
        return float(self.masses.max()) if len(self) else 0.0

    def count_above(self, x: float) -> int:
        return int(np.count_nonzero(self.masses > x))

    def check(self, tol: float = 1e-9) -> bool:
        m = self.masses
        ok = (np.all(m > 0) and np.all(self.g >= -tol) and np.all(self.d <= 1 + tol)
              and np.all(self.g[1:] >= self.d[:-1] - tol) and self.leftover >= -tol)
        return bool(ok and abs(m.sum() + self.leftover - 1) < tol)

    def interval_of(self, label: int):
        i = int(np.flatnonzero(self.labels == label)[0])
        return float(self.g[i]), float(self.d[i])

    def csv_rows(self) -> list:
        return [(float(a), float(b), float(b - a)) for a, b in zip(self.g, self.d)]


def build_interval_partition_ordered(p: Params, K: int, rng) -> IntervalPartitionApprox:
    """GEM weights of the first ``K`` tables laid out in an independent table order.

    The left end of table i's interval is the total weight of the tables
    placed to its left. The GEM remainder is reported as ``leftover``.
    """
    rng = as_generator(rng)
    gem = gem_weights(p, K, rng)
    order = sample_table_order(p, K, rng)
    m = gem.P[order]
    d = np.cumsum(m)
    return IntervalPartitionApprox(d - m, d, gem.remainder, order)


def _dirichlet_split(a: float, t: float, rng):
    """(G, D - G, 1 - D) ~ Dirichlet(a, 1 - a, t); t = 0 puts D at 1."""
    if t <= 0:
        g = rng.beta(a, 1 - a)
        return g, 1 - g, 0.0
    x = sample_dirichlet((a, 1 - a, t), rng)
    return x[0], x[1], x[2]


def build_interval_partition_recursive(p: Params, eps: float, rng) -> IntervalPartitionApprox:
    """Recursive Dirichlet splitting of [0, 1].

    A segment of length ``l`` is cut in proportions Dirichlet(a, 1-a, t);
    the middle piece is an interval, the left piece is split again with
    ``t = a`` and the right piece with the segment's own ``t``. The first
    split is always made; later segments shorter than ``eps`` go to
    ``leftover``.
    """
    if not 0 < p.alpha < 1:
        raise ValueError("need 0 < alpha < 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    rng = as_generator(rng)
    a, t = p.a, p.t
    gs, ds = [], []
    leftover = 0.0
    stack = [(0.0, 1.0, t, True)]
    while stack:
        start, length, tt, first = stack.pop()
        if length <= 0:
            continue
        if not first and length < eps:
            leftover += length
            continue
        x, y, _ = _dirichlet_split(a, tt, rng)
        left, mid = length * x, length * y
        gs.append(start + left)
        ds.append(start + left + mid)
        right = length - left - mid
        stack.append((start + left + mid, right, tt, False))
        stack.append((start, left, a, False))
    g = np.array(gs)
    d = np.array(ds)
    idx = np.argsort(g)
    return IntervalPartitionApprox(g[idx], d[idx], leftover)


# ---------------------------------------------------------------------------
# local time


def _check_alpha_open(p: Params):
    if not 0 < p.alpha < 1:
        raise ValueError(f"need 0 < alpha < 1, got {p.alpha}")


def local_time_moment(n: int, p: Params) -> float:
    """``E L^n = G(t+1) G(t/a+n+1) / (G(t/a+1) G(t+n a+1))``."""
    _check_alpha_open(p)
    if n < 0:
        raise ValueError("moment order must be non-negative")
    a, t = p.a, p.t
    return float(np.exp(special.gammaln(t + 1) + special.gammaln(t / a + n + 1)
                        - special.gammaln(t / a + 1) - special.gammaln(t + n * a + 1)))


def _zolotarev(u, a: float):
    return (np.sin(a * u) ** a * np.sin((1 - a) * u) ** (1 - a) / np.sin(u)) ** (1 / (1 - a))


def sample_local_time(p: Params, size: int, rng) -> np.ndarray:
    """Exact draws of ``L`` (generalised Mittag-Leffler law).

    For ``theta = 0``, ``L = (E / A(U))^(1-a)`` with ``E`` standard
    exponential, ``U`` uniform on (0, pi) and ``A`` Zolotarev's function.
    Tilting by ``L^(theta/a)`` turns ``E`` into Gamma(1 + c) and gives ``U``
    density proportional to ``A(u)^(-c)``, ``c = theta (1 - a)/a``; the
    latter is drawn by rejection since ``A`` is increasing on (0, pi).
    """
    _check_alpha_open(p)
    rng = as_generator(rng)
    a, t = p.a, p.t
    c = t * (1 - a) / a
    a0 = a ** (a / (1 - a)) * (1 - a)
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = max(16, int(need * 1.3))
        u = rng.uniform(0, np.pi, batch)
        au = _zolotarev(u, a)
        if c > 0:
            keep = rng.random(batch) < (a0 / au) ** c
            u, au = u[keep], au[keep]
        au = au[:need]
        k = len(au)
        e = rng.gamma(1 + c, size=k)
        out[filled:filled + k] = (e / au) ** (1 - a)
        filled += k
    return out


# ---------------------------------------------------------------------------
# subordinator and dislocation densities


def laplace_exponent(s, p: Params):
    """Laplace exponent of the subordinator behind the (alpha, theta) partition.

    ``theta > 0``: ``s G(s+t) G(1-a) / G(s+t+1-a)``;
    ``theta = 0``: ``G(s+1) G(1-a) / G(s+1-a)``, which includes killing at
    rate 1.
    """
    s = np.asarray(s, dtype=float)
    a, t = p.a, p.t
    if np.any(s < 0):
        raise ValueError("s must be non-negative")
    if t > 0:
        with np.errstate(divide="ignore"):
            return s * np.exp(special.gammaln(s + t) + special.gammaln(1 - a)
                              - special.gammaln(s + t + 1 - a))
    return np.exp(special.gammaln(s + 1) + special.gammaln(1 - a) - special.gammaln(s + 1 - a))


def levy_density(x, p: Params, c: Optional[float] = None):
    """``lambda(x) = c a (1-e^-x)^(-a-1) e^(-(t+1)x) + c t e^(-t x) (1-e^-x)^(-a)``.

    The default ``c = 1/G(1-a)`` matches :func:`laplace_exponent` divided
    by ``G(1-a)``.
    """
    x = np.asarray(x, dtype=float)
    a, t = p.a, p.t
    c = 1 / special.gamma(1 - a) if c is None else c
    e = -np.expm1(-x)
    return c * a * e ** (-a - 1) * np.exp(-(t + 1) * x) + c * t * np.exp(-t * x) * e ** (-a)


def laplace_exponent_quad(s: float, p: Params, c: Optional[float] = None) -> float:
    """``int (1 - e^{-s x}) lambda(x) dx`` (plus the killing rate ``c`` when
    ``theta = 0``) by adaptive quadrature.

    With ``u = e^{-x}`` the integrand becomes an algebraic-singular weight
    ``u^(t-1) (1-u)^(-a)`` times a smooth factor, which QUADPACK's
    ``weight='alg'`` rule integrates to near machine precision.
    """
    a, t = p.a, p.t
    c = 1 / special.gamma(1 - a) if c is None else c

    def ratio(u):
        # (1 - u^s)/(1 - u), continuous at u = 1
        return s if u == 1 else -np.expm1(s * np.log(u)) / (1 - u) if u > 0 else 1.0

    if t > 0:
        def h(u):
            return a * u * ratio(u) + t * (1 - u) * ratio(u)
        val, _ = integrate.quad(h, 0, 1, weight="alg", wvar=(t - 1, -a),
                                epsabs=0, epsrel=1e-13, limit=200)
        return c * val
    val, _ = integrate.quad(lambda u: a * ratio(u), 0, 1, weight="alg", wvar=(0, -a),
                            epsabs=0, epsrel=1e-13, limit=200)
    return c * val + c


def f_density(u, p: Params):
    """``f(u) = u^-2 lambda(-log u)`` on (0, 1)."""
    u = np.asarray(u, dtype=float)
    return levy_density(-np.log(u), p) / u ** 2


def dislocation_density(u, p: Params):
    """Density of the ranked split ``(u, 1-u)``, ``1/2 < u < 1``.

    ``[a (u^t (1-u)^(-a-1) + u^(-a-1) (1-u)^t)
    + t (u^(t-1) (1-u)^(-a) + u^(-a) (1-u)^(t-1))] / G(1-a)``
    """
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.5) | (u >= 1)):
        raise ValueError("u must lie in (1/2, 1)")
    a, t = p.a, p.t
    v = 1 - u
    body = a * (u ** t * v ** (-a - 1) + u ** (-a - 1) * v ** t)
    if t > 0:
        body = body + t * (u ** (t - 1) * v ** (-a) + u ** (-a) * v ** (t - 1))
    return body / special.gamma(1 - a)


def dislocation_tail_mass(eps: float, p: Params) -> float:
    """``int_{1/2}^{1-eps}`` of the dislocation density."""
    # v = 1 - u = e^y spreads the (1-u)^(-a-1) growth evenly over y
    g = lambda y: float(dislocation_density(1 - np.exp(y), p)) * np.exp(y)  # noqa: E731
    val, _ = integrate.quad(g, np.log(eps), np.log(0.5), epsabs=0, epsrel=1e-10, limit=200)
    return val


def switching_prob(x, p: Params, mass_biased: bool = False):
    """Probability of stopping at an atom whose remaining-mass ratio is ``x``.

    ``(1-x) t / ((1-x) t + x a)``; ``theta = 0`` stops only at ``x = 0``.
    ``mass_biased=True`` gives ``1 - x`` (the alpha = theta case).
    """
    if isinstance(x, Fraction):
        a, t = p.alpha, p.theta
        if mass_biased:
            return 1 - x
        if x == 0:
            return Fraction(1)
        if t == 0:
            return Fraction(0)
        return (1 - x) * t / ((1 - x) * t + x * a)
    x = np.asarray(x, dtype=float)
    if mass_biased:
        return 1 - x
    a, t = p.a, p.t
    if t == 0:
        return np.where(x == 0, 1.0, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(x == 0, 1.0, (1 - x) * t / ((1 - x) * t + x * a))


# ---------------------------------------------------------------------------
# strings of beads


@dataclass(frozen=True)
class StringOfBeads:
    """Atoms ``(position, mass)`` on ``[0, length]`` plus unassigned mass.

    Positions are measured from the root end and strictly increase.
    """

    length: float
    positions: np.ndarray
    masses: np.ndarray
    leftover: float = 0.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "masses", m)
        if pos.shape != m.shape:
            raise ValueError("positions and masses must have equal length")
        if len(pos) and (np.any(np.diff(pos) <= 0) or pos[0] <= 0
                         or pos[-1] > self.length * (1 + 1e-12)):
            raise ValueError("positions must increase strictly within (0, length]")
        if np.any(m <= 0) or self.leftover < 0:
            raise ValueError("masses must be positive and leftover non-negative")

    def __len__(self):
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum() + self.leftover)

    def scaled(self, mass: float, alpha: float) -> "StringOfBeads":
        """Masses times ``mass``, lengths times ``mass**alpha``."""
        f = mass ** alpha
        return StringOfBeads(self.length * f, self.positions * f, self.masses * mass,
                             self.leftover * mass)

    def csv_rows(self) -> list:
        return [(float(x), float(m)) for x, m in zip(self.positions, self.masses)]

    def to_json_obj(self) -> dict:
        return {"length": self.length, "beads": [list(r) for r in self.csv_rows()],
                "leftover": self.leftover}


def string_of_beads(p: Params, n_budget: int, rng) -> StringOfBeads:
    """Discrete (alpha, theta)-string from an ordered CRP with ``n_budget`` customers.

    Table j (left to right) becomes an atom of mass ``size/n`` at position
    ``j n^-alpha``; the string has length ``K n^-alpha``.
    """
    from ._kernels import crp_kernel

    _check_alpha_open(p)
    n = int(n_budget)
    spinal, sizes = crp_kernel(n, p.a, p.t, as_generator(rng))
    k = len(spinal)
    scale = n ** -p.a
    return StringOfBeads(k * scale, np.arange(1, k + 1) * scale, sizes[spinal] / n, 0.0)


def pick_bead_probs(masses: Sequence, leftover, p: Params, mass_biased: bool = False) -> list:
    """Law of the atom returned by :func:`pick_bead`; a final entry holds
    the probability of running past the last atom.

    With rational masses the result is exact.
    """
    exact = all(isinstance(m, (Fraction, int)) for m in list(masses) + [leftover])
    rem = sum(masses, Fraction(0) if exact else 0.0) + leftover
    stay = Fraction(1) if exact else 1.0
    out = []
    if p.theta == 0 and not mass_biased:
        return [0] * (len(masses) - 1) + [1, 0]
    for m in masses:
        after = rem - m
        x = after / rem if exact else float(after / rem)
        q = switching_prob(x, p, mass_biased)
        q = q if exact else float(q)
        out.append(stay * q)
        stay *= 1 - q
        rem = after
    out.append(stay)
    return out


def pick_bead(s: StringOfBeads, p: Params, rng, mass_biased: bool = False) -> Optional[int]:
    """Walk the atoms from the root end, stopping at atom j with probability
    ``switching_prob(x_j)``, ``x_j`` = mass beyond atom j over mass from j on.

    Returns the atom index, or None when no coin stops the walk (only
    possible when ``leftover > 0``). For ``theta = 0`` the last atom is taken.
    """
    if len(s) == 0:
        raise ValueError("cannot pick from an empty string of beads")
    if p.theta == 0 and not mass_biased:
        return len(s) - 1
    rng = as_generator(rng)
    m = s.masses
    tail = np.concatenate((np.cumsum(m[::-1])[::-1], [0.0])) + s.leftover
    x = tail[1:] / tail[:-1]
    q = switching_prob(x, p, mass_biased)
    hits = np.flatnonzero(rng.random(len(m)) < q)
    return int(hits[0]) if len(hits) else None


def ranked_top(masses: np.ndarray, r: int = 3) -> np.ndarray:
    out = np.zeros(r)
    top = np.sort(masses)[::-1][:r]
    out[: len(top)] = top
    return out


# ---------------------------------------------------------------------------
# tables


PHI_S_VALUES = (0.5, 1.0, 2.0, 5.0, 10.0)


def phi_table(params: Sequence[Params], s_values: Sequence[float]) -> list:
    """Rows ``(alpha, theta, s, closed form, quadrature)``."""
    rows = []
    for p in params:
        for s in s_values:
            rows.append((str(p.alpha), str(p.theta), float(s),
                         float(laplace_exponent(s, p)) / float(special.gamma(1 - p.a)),
                         laplace_exponent_quad(s, p)))
    return rows


def moments_json(params: Sequence[Params], orders: Sequence[int]) -> str:
    obj = [{"alpha": str(p.alpha), "theta": str(p.theta),
            "moments": {str(n): local_time_moment(n, p) for n in orders}} for p in params]
    return json.dumps(obj, sort_keys=True)
