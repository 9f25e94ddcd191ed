"""Model parameters (alpha, theta) held as exact rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational


def to_fraction(x) -> Fraction:
    """Convert ``x`` to a Fraction without binary rounding artefacts.

    Strings such as ``"1/3"`` or ``"0.1"`` and Python floats are converted
    through their decimal text, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse {x!r} as a rational number") from exc
    return Fraction(str(x))


def rising(x, k: int):
    """Rising factorial ``[x]_k = x (x+1) ... (x+k-1)``; ``[x]_0 = 1``."""
    out = Fraction(1) if isinstance(x, (Fraction, int)) else 1.0
    for i in range(k):
        out *= x + i
    return out


@dataclass(frozen=True)
class Params:
    """The pair (alpha, theta) with 0 <= alpha <= 1 and theta >= 0."""

    alpha: Fraction
    theta: Fraction

    def __post_init__(self):
        a = to_fraction(self.alpha)
        t = to_fraction(self.theta)
        if not 0 <= a <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {a}")
        if t < 0:
            raise ValueError(f"theta must be non-negative, got {t}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "theta", t)

    @property
    def a(self) -> float:
        return float(self.alpha)

    @property
    def t(self) -> float:
        return float(self.theta)

    @classmethod
    def parse(cls, alpha: str, theta: str) -> "Params":
        return cls(to_fraction(alpha), to_fraction(theta))

    def with_theta(self, theta) -> "Params":
        return Params(self.alpha, theta)

    def __str__(self):
        return f"(alpha={self.alpha}, theta={self.theta})"


def frac_str(x) -> str:
    """Render a rational as ``"num/den"`` (integers as ``"num/1"``)."""
    x = to_fraction(x)
    return f"{x.numerator}/{x.denominator}"


ALPHA_GRID = tuple(Fraction(s) for s in ("1/10", "1/3", "1/2", "2/3", "9/10"))
THETA_GRID = tuple(Fraction(s) for s in ("0", "1/2", "1", "3/2", "2"))


def parameter_grid() -> list[Params]:
    """Rational grid used by the exact suites.

    The 5 x 5 product of ``ALPHA_GRID`` and ``THETA_GRID`` plus the
    weakly consistent lines theta = 1 - alpha and theta = 2 - alpha.
    """
    seen = []
    for a in ALPHA_GRID:
        for t in THETA_GRID + (1 - a, 2 - a):
            p = Params(a, t)
            if p not in seen:
                seen.append(p)
    return seen
