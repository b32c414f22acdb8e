"""Exact arithmetic helpers: rationals, integer roots and comparisons against X^e.

Arc radii such as X^(theta - k) are irrational for most (X, theta), so arc
endpoints are kept as ``u + v * delta`` with rational u, v and a single
irrational scale ``delta = c * X^e``.  Signs of such numbers are decided
exactly by comparing integer powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Union

import mpmath

Real = Union[int, float, Fraction, Decimal, str]


def to_fraction(x) -> Fraction:
    """Exact rational value of ``x``.

    Floats are taken at face value (every double is a dyadic rational); strings
    may be "p/q", integers or decimals; mpmath numbers are expanded exactly.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, float, Decimal)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    if hasattr(x, "item"):
        return to_fraction(x.item())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def mod1(x: Fraction) -> Fraction:
    return x - math.floor(x)


def dist_to_int(x: Fraction) -> Fraction:
    """||x||, the distance to the nearest integer."""
    f = mod1(x)
    return min(f, 1 - f)


def nearest_int(x: Fraction) -> int:
    # Half-integers round down so a/q witnesses are deterministic.
    return math.floor(x + Fraction(1, 2)) if mod1(x) != Fraction(1, 2) else math.floor(x)


def iroot(n: int, r: int) -> int:
    """floor(n^(1/r)) for integers n >= 0, r >= 1."""
    if n < 0 or r < 1:
        raise ValueError("need n >= 0 and r >= 1")
    if n < 2 or r == 1:
        return n
    x = int(round(n ** (1.0 / r))) if n.bit_length() < 1000 else 1 << (n.bit_length() // r + 1)
    x = max(x, 1)
    # Newton from above, then settle exactly.
    while True:
        y = ((r - 1) * x + n // x ** (r - 1)) // r
        if y >= x:
            break
        x = y
    while x**r > n:
        x -= 1
    while (x + 1) ** r <= n:
        x += 1
    return x


def cmp_power(value: Fraction, coeff: Fraction, X: int, e: Fraction) -> int:
    """Sign of value - coeff * X^e, exactly (X >= 1)."""
    value, coeff, e = Fraction(value), Fraction(coeff), Fraction(e)
    if X < 1:
        raise ValueError("X must be at least 1")
    if coeff == 0:
        return (value > 0) - (value < 0)
    if coeff < 0:
        return -cmp_power(-value, -coeff, X, e) if value < 0 else 1
    if value <= 0:
        return -1
    r = value / coeff
    p, q = e.numerator, e.denominator
    lhs = r.numerator**q
    rhs = r.denominator**q
    if p >= 0:
        rhs *= X**p
    else:
        lhs *= X ** (-p)
    return (lhs > rhs) - (lhs < rhs)


def le_power(value, X: int, e, coeff=1) -> bool:
    """value <= coeff * X^e, exactly."""
    return cmp_power(to_fraction(value), to_fraction(coeff), X, to_fraction(e)) <= 0


def floor_power(X: int, e, coeff=1) -> int:
    """Largest integer m with m <= coeff * X^e (0 if none is positive)."""
    e = to_fraction(e)
    coeff = to_fraction(coeff)
    if coeff <= 0:
        return 0
    if e >= 0 and coeff == 1:
        return iroot(X**e.numerator, e.denominator)
    guess = math.floor(float(coeff) * float(X) ** float(e))
    m = max(guess, 0)
    while m > 0 and cmp_power(Fraction(m), coeff, X, e) > 0:
        m -= 1
    while cmp_power(Fraction(m + 1), coeff, X, e) <= 0:
        m += 1
    return m


def power_mpf(X: int, e, coeff=1, dps: int = 50):
    with mpmath.workdps(dps):
        c = to_fraction(coeff)
        ef = to_fraction(e)
        return mpmath.mpf(c.numerator) / c.denominator * mpmath.power(X, mpmath.mpf(ef.numerator) / ef.denominator)


@dataclass(frozen=True)
class Scale:
    """delta = coeff * X^e."""

    X: int
    e: Fraction
    coeff: Fraction = Fraction(1)

    def mpf(self, dps: int = 50):
        return power_mpf(self.X, self.e, self.coeff, dps)

    def __float__(self) -> float:
        return float(self.mpf())

    def label(self) -> str:
        c = "" if self.coeff == 1 else f"{frac_str(self.coeff)}*"
        return f"{c}{self.X}^({frac_str(self.e)})"


@dataclass(frozen=True)
class Affine:
    """The exact real number u + v * delta."""

    u: Fraction
    v: Fraction
    scale: Scale

    @classmethod
    def const(cls, u, scale: Scale) -> "Affine":
        return cls(Fraction(u), Fraction(0), scale)

    def sign(self) -> int:
        u, v = self.u, self.v
        if v == 0:
            return (u > 0) - (u < 0)
        su = (u > 0) - (u < 0)
        sv = 1 if v > 0 else -1
        if su == 0 or su == sv:
            return sv
        # u and v*delta have opposite signs: compare |u| with |v|*delta.
        c = cmp_power(abs(u), abs(v) * self.scale.coeff, self.scale.X, self.scale.e)
        return su * c

    def _coerce(self, other) -> "Affine":
        if isinstance(other, Affine):
            if other.scale != self.scale:
                raise ValueError("mixing different scales")
            return other
        return Affine.const(other, self.scale)

    def __add__(self, other):
        o = self._coerce(other)
        return Affine(self.u + o.u, self.v + o.v, self.scale)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Affine(self.u - o.u, self.v - o.v, self.scale)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Affine(-self.u, -self.v, self.scale)

    def __mul__(self, r):
        r = Fraction(r)
        return Affine(self.u * r, self.v * r, self.scale)

    __rmul__ = __mul__

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __eq__(self, other):
        if not isinstance(other, (Affine, int, Fraction)):
            return NotImplemented
        return (self - other).sign() == 0

    def __hash__(self):
        return hash((self.u, self.v, self.scale))

    def mpf(self, dps: int = 50):
        with mpmath.workdps(dps):
            return mpmath.mpf(self.u.numerator) / self.u.denominator + (
                mpmath.mpf(self.v.numerator) / self.v.denominator
            ) * self.scale.mpf(dps)

    def __float__(self) -> float:
        return float(self.mpf())

    def label(self) -> str:
        return f"{frac_str(self.u)} + {frac_str(self.v)}*{self.scale.label()}"


def amax(a: Affine, b: Affine) -> Affine:
    return a if a >= b else b


def amin(a: Affine, b: Affine) -> Affine:
    return a if a <= b else b
