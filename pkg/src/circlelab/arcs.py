"""Major and minor arcs on the circle and the torus, decided in exact arithmetic.

One-dimensional arcs M(theta): alpha with ||alpha q|| <= X^(theta - k) for some
q <= X^theta.  Two-dimensional arcs N(eta, theta) add ||alpha_d q r|| <=
c X^(-d + (d-1) eta + theta) with r <= X^((d-1) eta).  The enlarged arcs
P(omega) ask for a common denominator s <= c' X^omega with offsets
|gamma_k| <= c' X^(-k + omega), |gamma_d| <= c' X^(-d + omega).

Points are exact rationals.  Floats are accepted and taken at face value;
pass ``alpha_err`` to get a ``"boundary"`` verdict when the decision is not
stable under that error bar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from . import budget as _budget
from .exact import (
    Affine,
    Scale,
    amax,
    amin,
    cmp_power,
    dist_to_int,
    floor_power,
    frac_str,
    mod1,
    nearest_int,
    to_fraction,
)

MEMBER = "member"
MINOR = "minor"
OUTSIDE = "outside"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class TorusPoint:
    alpha_k: Fraction
    alpha_d: Fraction

    def __init__(self, alpha_k, alpha_d=0):
        object.__setattr__(self, "alpha_k", mod1(to_fraction(alpha_k)))
        object.__setattr__(self, "alpha_d", mod1(to_fraction(alpha_d)))

    def __iter__(self):
        return iter((self.alpha_k, self.alpha_d))


@dataclass(frozen=True)
class ArcParams:
    theta: Fraction
    eta: Fraction
    kappa: Fraction | None
    omega: Fraction
    c: Fraction = Fraction(1)
    c_prime: Fraction = Fraction(1)

    @classmethod
    def build(cls, theta, eta, d: int, kappa=None, n: int | None = None, c=1, c_prime=None, linked=False):
        """Assemble parameters with omega = (d-1) eta + theta.

        ``c_prime=None`` calibrates c' = max(c, 1), which is enough for N to sit
        inside P: with s = q r the offsets satisfy |gamma_k| <= c X^(-k+theta)/q and
        |gamma_d| <= c X^(-d+omega)/(q r).
        """
        theta, eta, c = to_fraction(theta), to_fraction(eta), to_fraction(c)
        if not 0 < theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {theta}")
        if eta <= 0:
            raise ValueError("eta must be positive")
        if c <= 0:
            raise ValueError("c must be positive")
        kappa = None if kappa is None else to_fraction(kappa)
        if linked:
            if n is None:
                raise ValueError("linked mode needs n")
            required = Fraction(n) * theta / 2**d
            if kappa is None:
                kappa = required / eta
            elif kappa * eta != required:
                raise ValueError(f"linked mode needs kappa*eta = n*theta/2^d = {required}, got {kappa * eta}")
        c_prime = max(c, Fraction(1)) if c_prime is None else to_fraction(c_prime)
        if c_prime <= 0:
            raise ValueError("c' must be positive")
        return cls(theta, eta, kappa, (d - 1) * eta + theta, c, c_prime)


@dataclass(frozen=True)
class ArcWitness:
    kind: str  # "Ma", "Na" or "Pa"
    q: int = 1
    a_k: int = 0
    r: int | None = None
    s: int | None = None
    a_d: int | None = None
    gamma_k: Fraction = Fraction(0)
    gamma_d: Fraction | None = None


@dataclass(frozen=True)
class ArcDecision:
    status: str
    witness: ArcWitness | None = None

    def __bool__(self) -> bool:
        return self.status == MEMBER


def best_rational_approx(alpha, Q: int) -> tuple[int, int, Fraction]:
    """(a, q, ||alpha q||) with q <= Q minimising ||alpha q||, smallest q on ties.

    Walks the continued-fraction convergents: the minimiser over q <= Q is the
    last convergent denominator not exceeding Q.  Guarantees ||alpha q|| <= 1/(Q+1).
    """
    if Q < 1:
        raise ValueError("Q must be at least 1")
    x = to_fraction(alpha)
    # Convergents p/q of x, generated until the denominator exceeds Q.
    p_prev, q_prev = 1, 0
    p_cur, q_cur = math.floor(x), 1
    best_q = 1
    rest = x - math.floor(x)
    while rest != 0:
        inv = 1 / rest
        a = math.floor(inv)
        rest = inv - a
        p_next, q_next = a * p_cur + p_prev, a * q_cur + q_prev
        if q_next > Q:
            # The semiconvergent with the largest admissible denominator can tie
            # or beat the last convergent only when it is closer; check it.
            t = (Q - q_prev) // q_cur
            q_semi = t * q_cur + q_prev
            if t >= 1 and q_semi <= Q and dist_to_int(x * q_semi) < dist_to_int(x * q_cur):
                best_q = q_semi
            else:
                best_q = q_cur
            break
        p_prev, q_prev, p_cur, q_cur = p_cur, q_cur, p_next, q_next
    else:
        best_q = q_cur
    err = dist_to_int(x * best_q)
    return nearest_int(x * best_q), best_q, err


def _scan_first(beta: Fraction, Q: int, coeff: Fraction, X: int, e: Fraction, err: Fraction | None = None):
    """Smallest q <= Q with ||beta q|| <= coeff * X^e, or None.

    With an error bar on beta, returns (q, robust) where robust tells whether
    the hit survives every perturbation, or (None, robust_miss).
    """
    num, den = beta.numerator % beta.denominator, beta.denominator
    bound = float(coeff) * float(X) ** float(e)
    maybe = False
    for q in range(1, Q + 1):
        r = (num * q) % den
        d = Fraction(min(r, den - r), den)
        if err is None:
            df = float(d)
            if df < bound * (1 - 1e-12):
                return q, True
            if df > bound * (1 + 1e-12):
                continue
            if cmp_power(d, coeff, X, e) <= 0:
                return q, True
            continue
        slack = q * err
        if cmp_power(d + slack, coeff, X, e) <= 0:
            return q, True
        if cmp_power(max(d - slack, Fraction(0)), coeff, X, e) <= 0:
            maybe = True
    return None, not maybe


def classify_Ma(alpha_k, theta, X: int, k: int, c=1, alpha_err=None, q_cap: int | None = None) -> ArcDecision:
    """Is alpha_k in M(theta)?  Witness: the smallest admissible q."""
    theta = to_fraction(theta)
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    if X < 2:
        raise ValueError("X must be at least 2")
    a = mod1(to_fraction(alpha_k))
    Q = floor_power(X, theta)
    _budget.check("q scan", Q, q_cap)
    err = None if alpha_err is None else to_fraction(alpha_err)
    q, robust = _scan_first(a, Q, to_fraction(c), X, theta - k, err)
    if q is None:
        return ArcDecision(MINOR if robust else BOUNDARY)
    if not robust:
        return ArcDecision(BOUNDARY)
    ak = nearest_int(a * q)
    return ArcDecision(MEMBER, ArcWitness("Ma", q=q, a_k=ak, gamma_k=a - Fraction(ak, q)))


def _all_q(beta: Fraction, Q: int, coeff: Fraction, X: int, e: Fraction):
    num, den = beta.numerator % beta.denominator, beta.denominator
    for q in range(1, Q + 1):
        r = (num * q) % den
        if cmp_power(Fraction(min(r, den - r), den), coeff, X, e) <= 0:
            yield q


def classify_Na(alpha, params: ArcParams, X: int, k: int, q_cap: int | None = None) -> ArcDecision:
    """Is alpha in N(eta, theta)?  First witness in increasing (q, r) order."""
    pt = alpha if isinstance(alpha, TorusPoint) else TorusPoint(*alpha)
    d = k - 1
    if X < 2:
        raise ValueError("X must be at least 2")
    Q = floor_power(X, params.theta)
    Rr = floor_power(X, (d - 1) * params.eta)
    _budget.check("(q, r) scan", Q * max(Rr, 1), q_cap)
    ed = -d + (d - 1) * params.eta + params.theta
    for q in _all_q(pt.alpha_k, Q, params.c, X, params.theta - k):
        beta = pt.alpha_d * q
        hit, _ = _scan_first(beta, Rr, params.c, X, ed)
        if hit is not None:
            ak = nearest_int(pt.alpha_k * q)
            ad = nearest_int(pt.alpha_d * q * hit)
            return ArcDecision(
                MEMBER,
                ArcWitness(
                    "Na",
                    q=q,
                    a_k=ak,
                    r=hit,
                    a_d=ad,
                    gamma_k=pt.alpha_k - Fraction(ak, q),
                    gamma_d=pt.alpha_d - Fraction(ad, q * hit),
                ),
            )
    return ArcDecision(MINOR)


def classify_Pa(alpha, omega, c_prime, X: int, k: int, s_cap: int | None = None) -> ArcDecision:
    """Is alpha in P(omega)?  Smallest s first."""
    pt = alpha if isinstance(alpha, TorusPoint) else TorusPoint(*alpha)
    omega, c_prime = to_fraction(omega), to_fraction(c_prime)
    d = k - 1
    S = floor_power(X, omega, c_prime)
    _budget.check("s scan", S, s_cap)
    for s in range(1, S + 1):
        ak = nearest_int(pt.alpha_k * s)
        ad = nearest_int(pt.alpha_d * s)
        gk = pt.alpha_k - Fraction(ak, s)
        gd = pt.alpha_d - Fraction(ad, s)
        if cmp_power(abs(gk), c_prime, X, omega - k) <= 0 and cmp_power(abs(gd), c_prime, X, omega - d) <= 0:
            return ArcDecision(MEMBER, ArcWitness("Pa", q=s, s=s, a_k=ak, a_d=ad, gamma_k=gk, gamma_d=gd))
    return ArcDecision(OUTSIDE)


# ---------------------------------------------------------------- volumes


@dataclass
class Interval:
    lo: Affine
    hi: Affine


def _clip(iv: Interval, zero: Affine, one: Affine) -> Interval | None:
    lo, hi = amax(iv.lo, zero), amin(iv.hi, one)
    return Interval(lo, hi) if lo < hi else None


def _merge(intervals: list[Interval]) -> list[Interval]:
    """Union of intervals, assumed sorted by lower end."""
    out: list[Interval] = []
    for iv in intervals:
        if out and iv.lo <= out[-1].hi:
            out[-1] = Interval(out[-1].lo, amax(out[-1].hi, iv.hi))
        else:
            out.append(Interval(iv.lo, iv.hi))
    return out


def _arc_intervals(centers_radii, scale: Scale) -> list[Interval]:
    zero, one = Affine.const(0, scale), Affine.const(1, scale)
    out = []
    for center, rad in centers_radii:
        c = Affine.const(center, scale)
        r = Affine(Fraction(0), Fraction(rad), scale)
        iv = _clip(Interval(c - r, c + r), zero, one)
        if iv is not None:
            out.append(iv)
    return out


@dataclass
class MajorArcVolume:
    theta: Fraction
    X: int
    k: int
    volume: Affine
    minor_volume: Affine
    disjoint: bool
    n_arcs: int
    bound_ok: bool
    bound_ratio: float

    @property
    def unit(self) -> Scale:
        return self.volume.scale

    def row(self) -> dict:
        coeff = self.volume.v
        return {
            "theta": frac_str(self.theta),
            "X": self.X,
            "volume_num": coeff.numerator if self.volume.u == 0 else "",
            "volume_den": coeff.denominator if self.volume.u == 0 else "",
            "volume_unit": self.unit.label(),
            "volume": self.volume.label(),
            "volume_float": float(self.volume),
            "bound_ratio": self.bound_ratio,
            "disjoint": self.disjoint,
        }


def major_arc_list(theta, X: int, k: int, c=1, q_cap: int | None = None):
    """Reduced fractions a/q in [0, 1] with q <= X^theta and their radii c X^(theta-k)/q."""
    theta = to_fraction(theta)
    Q = floor_power(X, theta)
    _budget.check("major arcs", Q, q_cap)
    scale = Scale(X, theta - k, to_fraction(c))
    arcs = []
    for q in range(1, Q + 1):
        for a in range(0, q + 1):
            if math.gcd(a, q) == 1:
                arcs.append((Fraction(a, q), Fraction(1, q)))
    arcs.sort(key=lambda t: t[0])
    return arcs, scale


def volume_Ma(theta, X: int, k: int, c=1, q_cap: int | None = 10**5) -> MajorArcVolume:
    """Exact measure of M(theta) on the torus, as u + v * X^(theta - k)."""
    theta = to_fraction(theta)
    arcs, scale = major_arc_list(theta, X, k, c, q_cap)
    # Disjointness: an overlap anywhere forces one between neighbours in centre order.
    disjoint = True
    for (c1, r1), (c2, r2) in zip(arcs, arcs[1:]):
        if c1 == 0 and c2 == 1:
            continue
        # Overlap iff (r1 + r2) * delta >= c2 - c1.  Arc 0/1 and 1/1 are one arc on the torus.
        if cmp_power(c2 - c1, (r1 + r2) * scale.coeff, X, scale.e) <= 0:
            disjoint = False
            break
    ivs = _merge(_arc_intervals(arcs, scale))
    zero = Affine.const(0, scale)
    volume = sum((iv.hi - iv.lo for iv in ivs), zero)
    # Complement measured independently, from the gaps between merged arcs.
    gaps = zero
    prev = zero
    for iv in ivs:
        if iv.lo > prev:
            gaps = gaps + (iv.lo - prev)
        prev = amax(prev, iv.hi)
    one = Affine.const(1, scale)
    if one > prev:
        gaps = gaps + (one - prev)
    # Bound vol <= 4 X^(2 theta - k) = 4 X^theta * (delta / c).
    target_e = 2 * theta - k
    if volume.u == 0:
        bound_ok = cmp_power(volume.v * scale.coeff, Fraction(4), X, target_e - scale.e) <= 0
    else:
        bound_ok = volume.mpf() <= 4 * mpmath.power(X, mpmath.mpf(target_e.numerator) / target_e.denominator)
    with mpmath.workdps(50):
        ratio = float(volume.mpf() / mpmath.power(X, mpmath.mpf(target_e.numerator) / target_e.denominator))
    return MajorArcVolume(theta, X, k, volume, gaps, disjoint, len(arcs), bool(bound_ok), ratio)


@dataclass
class Rectangle:
    k_lo: Affine
    k_hi: Affine
    d_lo: Affine
    d_hi: Affine


@dataclass
class AreaResult:
    """Exact area as sum of coeffs[(i, j)] * delta_k^i * delta_d^j."""

    coeffs: dict
    scale_k: Scale
    scale_d: Scale
    n_rectangles: int
    bound_ratio: float | None = None
    extra: dict = field(default_factory=dict)

    def mpf(self, dps: int = 50):
        with mpmath.workdps(dps):
            dk, dd = self.scale_k.mpf(dps), self.scale_d.mpf(dps)
            return sum(
                (mpmath.mpf(v.numerator) / v.denominator) * dk**i * dd**j for (i, j), v in self.coeffs.items()
            )

    def __float__(self) -> float:
        return float(self.mpf())


def _rect_union_area(rects: list[Rectangle], sk: Scale, sd: Scale) -> dict:
    xs = []
    for r in rects:
        xs.extend([r.k_lo, r.k_hi])
    xs = sorted(set(xs), key=_AffineKey)
    coeffs: dict = {}
    for x0, x1 in zip(xs, xs[1:]):
        active = [r for r in rects if r.k_lo <= x0 and r.k_hi >= x1]
        if not active:
            continue
        ivs = sorted((Interval(r.d_lo, r.d_hi) for r in active), key=lambda iv: _AffineKey(iv.lo))
        cover = sum((iv.hi - iv.lo for iv in _merge(ivs)), Affine.const(0, sd))
        width = x1 - x0
        for (i, a), (j, b) in (
            ((0, width.u), (0, cover.u)),
            ((0, width.u), (1, cover.v)),
            ((1, width.v), (0, cover.u)),
            ((1, width.v), (1, cover.v)),
        ):
            if a and b:
                coeffs[(i, j)] = coeffs.get((i, j), Fraction(0)) + a * b
    return coeffs


class _AffineKey:
    __slots__ = ("v",)

    def __init__(self, v: Affine):
        self.v = v

    def __lt__(self, other):
        return self.v < other.v


def _rectangles(centers, sk: Scale, sd: Scale) -> list[Rectangle]:
    zk, ok = Affine.const(0, sk), Affine.const(1, sk)
    zd, od = Affine.const(0, sd), Affine.const(1, sd)
    out = []
    for ck, rk, cd, rd in centers:
        kk = _clip(Interval(Affine.const(ck, sk) - Affine(Fraction(0), rk, sk), Affine.const(ck, sk) + Affine(Fraction(0), rk, sk)), zk, ok)
        dd = _clip(Interval(Affine.const(cd, sd) - Affine(Fraction(0), rd, sd), Affine.const(cd, sd) + Affine(Fraction(0), rd, sd)), zd, od)
        if kk is not None and dd is not None:
            out.append(Rectangle(kk.lo, kk.hi, dd.lo, dd.hi))
    return out


def volume_Na(params: ArcParams, X: int, k: int, d: int | None = None, cap: int | None = 20000) -> AreaResult:
    """Exact measure of N(eta, theta) by a rectangle sweep.

    The area is reported as a combination of 1, delta_k, delta_d and
    delta_k * delta_d with delta_k = c X^(theta-k), delta_d = c X^(-d+(d-1)eta+theta).
    """
    d = k - 1 if d is None else d
    Q = floor_power(X, params.theta)
    Rr = floor_power(X, (d - 1) * params.eta)
    count = sum(q * q * r for q in range(1, Q + 1) for r in range(1, Rr + 1))
    _budget.check("N rectangles", count, cap)
    sk = Scale(X, params.theta - k, params.c)
    sd = Scale(X, -d + (d - 1) * params.eta + params.theta, params.c)
    centers = set()
    for q in range(1, Q + 1):
        for a in range(0, q + 1):
            for r in range(1, Rr + 1):
                for b in range(0, q * r + 1):
                    centers.add((Fraction(a, q), Fraction(1, q), Fraction(b, q * r), Fraction(1, q * r)))
    rects = _rectangles(sorted(centers), sk, sd)
    coeffs = _rect_union_area(rects, sk, sd)
    res = AreaResult(coeffs, sk, sd, len(rects))
    e = -k - d + 2 * (d - 1) * params.eta + 3 * params.theta
    with mpmath.workdps(50):
        res.bound_ratio = float(res.mpf() / mpmath.power(X, mpmath.mpf(e.numerator) / e.denominator))
    return res


def volume_Pa(omega, c_prime, X: int, k: int, cap: int | None = 20000) -> AreaResult:
    """Exact measure of P(omega) by a rectangle sweep."""
    omega, c_prime = to_fraction(omega), to_fraction(c_prime)
    d = k - 1
    S = floor_power(X, omega, c_prime)
    _budget.check("P rectangles", sum(s * s for s in range(1, S + 1)), cap)
    sk = Scale(X, omega - k, c_prime)
    sd = Scale(X, omega - d, c_prime)
    centers = set()
    for s in range(1, S + 1):
        for a in range(0, s + 1):
            for b in range(0, s + 1):
                centers.add((Fraction(a, s), Fraction(1), Fraction(b, s), Fraction(1)))
    rects = _rectangles(sorted(centers), sk, sd)
    return AreaResult(_rect_union_area(rects, sk, sd), sk, sd, len(rects))
