"""Exact bookkeeping for the exponent parameters kappa, eta, theta, omega.

Everything here is rational arithmetic with ``fractions.Fraction``; no floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .exact import frac_str, to_fraction


class InfeasibleError(ValueError):
    pass


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k!r}")


def threshold_n0(k: int) -> int:
    """Number of variables beyond which the asymptotic formula is established: 2^(k-1) (2k-1)."""
    _check_k(k)
    return 2 ** (k - 1) * (2 * k - 1)


def bhb_bound(k: int, d: int) -> int:
    return (2 + d) * (k - 1) * 2 ** (k - 1) + d * 2 ** (d - 1)


def bp_general(k: int, d: int) -> int:
    """Earlier bound for diagonal F of degree k and arbitrary G of degree d < k."""
    if not 1 <= d < k:
        raise ValueError("need 1 <= d < k")
    if k <= d + 4:
        return 2**k * (d + 1)
    if k == d + 5:
        return 2**d * (26 + 32 * d)
    L = (
        (4 * d * d + 8 * d + 1) * k
        - 2 * d**3
        - 7 * d * d
        - 5 * d
        - 4 * d * math.isqrt(2 * k - 2 * d)
        - 2 * math.isqrt(2 * k - 2 * d + 2)
    )
    return 2**d * ((2 * d + 1) * k * k - L)


@dataclass(frozen=True)
class PriorBounds:
    k: int
    new: int
    bhb: int
    bp_general: int
    bp_consecutive: int
    bdhb: int | None = None

    def as_dict(self) -> dict:
        out = {"k": self.k, "new": self.new, "bhb": self.bhb, "bp_general": self.bp_general,
               "bp_consecutive": self.bp_consecutive}
        if self.bdhb is not None:
            out["bdhb"] = self.bdhb
        return out


def prior_bounds(k: int) -> PriorBounds:
    """Earlier thresholds for d = k - 1, next to the new one."""
    _check_k(k)
    d = k - 1
    return PriorBounds(
        k=k,
        new=threshold_n0(k),
        bhb=bhb_bound(k, d),
        bp_general=bp_general(k, d),
        bp_consecutive=2**k * k,
        bdhb=28 if k == 3 else None,
    )


# ------------------------------------------------------------ feasibility


@dataclass(frozen=True)
class Constraint:
    name: str
    kind: str  # "lower", "upper" or "fixed"
    bound: Fraction | None  # kappa bound; None when the constraint cannot hold
    holds: bool = True  # for kappa-free constraints

    def describe(self) -> str:
        if self.kind == "fixed":
            return f"{self.name}: {'holds' if self.holds else 'fails'}"
        if self.bound is None:
            return f"{self.name}: unsatisfiable"
        return f"kappa {'>' if self.kind == 'lower' else '<'} {frac_str(self.bound)}"


@dataclass(frozen=True)
class KappaInterval:
    """The open interval (lo, hi) of admissible kappa, with the constraints that produced it."""

    k: int
    n: int
    lo: Fraction | None
    hi: Fraction | None
    constraints: tuple[Constraint, ...]

    @property
    def empty(self) -> bool:
        if any(c.kind == "fixed" and not c.holds for c in self.constraints):
            return True
        if any(c.bound is None and c.kind != "fixed" for c in self.constraints):
            return True
        return self.lo is not None and self.hi is not None and self.lo >= self.hi

    def __bool__(self) -> bool:
        return not self.empty

    def __contains__(self, kappa) -> bool:
        kappa = to_fraction(kappa)
        return not self.empty and (self.lo is None or kappa > self.lo) and (self.hi is None or kappa < self.hi)

    def binding(self) -> tuple[Constraint, ...]:
        """The constraints attaining the interval ends (the collision when empty)."""
        out = []
        for c in self.constraints:
            if c.kind == "lower" and c.bound is not None and c.bound == self.lo:
                out.append(c)
            elif c.kind == "upper" and c.bound is not None and c.bound == self.hi:
                out.append(c)
            elif c.kind == "fixed" and not c.holds:
                out.append(c)
        return tuple(out)

    def midpoint(self) -> Fraction:
        if self.empty or self.lo is None or self.hi is None:
            raise InfeasibleError("no bounded feasible interval")
        return (self.lo + self.hi) / 2

    def describe(self) -> str:
        if self.empty:
            return "empty: " + " and ".join(c.describe() for c in self.binding())
        return f"({frac_str(self.lo)}, {frac_str(self.hi)})"


def _lower(name: str, a: int, b: int, n: int) -> Constraint:
    """a / kappa + b / n < 1  <=>  kappa > a n / (n - b)."""
    if Fraction(b, n) >= 1:
        return Constraint(name, "lower", None)
    return Constraint(name, "lower", Fraction(a * n, n - b))


def feasible_kappa(k: int, n: int) -> KappaInterval:
    """Open interval of kappa meeting all four constraints, by exact solving."""
    _check_k(k)
    if n < 1:
        raise ValueError("n must be positive")
    d = k - 1
    cons = (
        Constraint("n > 2^(d-1) kappa", "upper", Fraction(n, 2 ** (d - 1))),
        _lower("d/kappa + 2^d (d+2)/n < 1", d, 2**d * (d + 2), n),
        _lower("2(d-1)/kappa + 3 2^d/n < 1", 2 * (d - 1), 3 * 2**d, n),
        Constraint("n/2^d > k + d", "fixed", None, Fraction(n, 2**d) > k + d),
    )
    lows = [c.bound for c in cons if c.kind == "lower" and c.bound is not None]
    highs = [c.bound for c in cons if c.kind == "upper" and c.bound is not None]
    return KappaInterval(k, n, max(lows) if lows else None, min(highs) if highs else None, cons)


def min_feasible_n(k: int, cap: int | None = None) -> int:
    """Smallest n above the threshold with a nonempty kappa interval, by scanning n = 1, 2, ..."""
    n0 = threshold_n0(k)
    cap = cap or 4 * n0 + 100
    for n in range(1, cap + 1):
        if n > n0 and feasible_kappa(k, n):
            if n != n0 + 1:
                raise AssertionError(f"feasibility frontier at n={n}, expected {n0 + 1}")
            return n
    raise RuntimeError(f"no feasible n up to the search cap {cap} for k={k}")


def first_feasible_n(k: int, cap: int | None = None) -> int:
    """Smallest n with a nonempty kappa interval, without the threshold filter."""
    cap = cap or 4 * threshold_n0(k) + 100
    for n in range(1, cap + 1):
        if feasible_kappa(k, n):
            return n
    raise RuntimeError(f"no feasible n up to the search cap {cap} for k={k}")


# ------------------------------------------------------------ certificate


@dataclass(frozen=True)
class Check:
    name: str
    lhs: Fraction
    rhs: Fraction
    strict: bool = True  # lhs < rhs; otherwise lhs <= rhs

    @property
    def margin(self) -> Fraction:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.margin > 0 if self.strict else self.margin >= 0

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": frac_str(self.lhs),
            "rhs": frac_str(self.rhs),
            "strict": self.strict,
            "margin": frac_str(self.margin),
        }


@dataclass(frozen=True)
class DerivedParams:
    theta_max: Fraction
    eta_max: Fraction
    omega: Fraction
    checks: tuple[Check, ...]


def derive_params(k: int, n: int, kappa) -> DerivedParams:
    """theta_max, eta_max and omega for a feasible kappa, with the linking checks."""
    kappa = to_fraction(kappa)
    iv = feasible_kappa(k, n)
    if kappa not in iv:
        raise InfeasibleError(f"kappa={frac_str(kappa)} outside the feasible interval {iv.describe()}")
    d = k - 1
    t = 2**d * kappa
    theta_max = t / (n + t)
    eta_max = Fraction(n) / (n + t)
    omega = (d - 1) * eta_max + theta_max
    checks = (
        # kappa eta = n theta / 2^d at the extreme point.
        Check("kappa*eta_max <= n*theta_max/2^d", kappa * eta_max, n * theta_max / 2**d, strict=False),
        Check("kappa*eta_max >= n*theta_max/2^d", n * theta_max / 2**d, kappa * eta_max, strict=False),
        # eta <= 1 - theta and eta <= (1 + 2^d kappa / n)^-1 coincide under the link.
        Check("eta_max <= 1 - theta_max", eta_max, 1 - theta_max, strict=False),
        Check("eta_max <= (1 + 2^d kappa/n)^-1", eta_max, 1 / (1 + t / n), strict=False),
        Check("(1 + 2^d kappa/n)^-1 <= eta_max", 1 / (1 + t / n), eta_max, strict=False),
        Check("0 < eta_max", Fraction(0), eta_max),
        Check("0 < theta_max", Fraction(0), theta_max),
        Check("theta_max <= 1", theta_max, Fraction(1), strict=False),
    )
    bad = [c.name for c in checks if not c.ok]
    if bad:
        raise AssertionError(f"parameter identities failed: {bad}")
    return DerivedParams(theta_max, eta_max, omega, checks)


def theta_star_bound(k: int, n: int) -> Fraction:
    """theta_* must exceed 2^d d / (n - 2^(d+1))."""
    d = k - 1
    if n <= 2 ** (d + 1):
        raise InfeasibleError(f"n={n} must exceed 2^(d+1)={2 ** (d + 1)}")
    return Fraction(2**d * d, n - 2 ** (d + 1))


def max_theta_step(k: int, n: int, theta_star) -> Fraction:
    """Steps must satisfy 2^(d+1) step < (n - 2^(d+1)) theta_* - 2^d d."""
    d = k - 1
    theta_star = to_fraction(theta_star)
    return ((n - 2 ** (d + 1)) * theta_star - 2**d * d) / 2 ** (d + 1)


def build_theta_sequence(k: int, n: int, kappa, theta_star) -> list[Fraction]:
    """1 = theta_0 > ... > theta_N = theta_* with uniform step strictly below the allowed one, N minimal."""
    theta_star = to_fraction(theta_star)
    bound = theta_star_bound(k, n)
    if theta_star <= bound:
        raise InfeasibleError(f"theta_*={frac_str(theta_star)} must exceed {frac_str(bound)}")
    if theta_star > 1:
        raise InfeasibleError("theta_* must not exceed 1")
    step_max = max_theta_step(k, n, theta_star)
    gap = 1 - theta_star
    if gap == 0:
        return [Fraction(1)]
    # Smallest N with gap / N < step_max.
    N = math.floor(gap / step_max) + 1
    step = gap / N
    seq = [1 - i * step for i in range(N + 1)]
    assert seq[-1] == theta_star
    for a, b in zip(seq, seq[1:]):
        if not 2 ** (k) * (a - b) < (n - 2**k) * theta_star - 2 ** (k - 1) * (k - 1):
            raise AssertionError("step inequality violated")
    return seq


@dataclass
class ExponentCertificate:
    k: int
    n: int
    kappa: Fraction
    kappa_lo: Fraction | None
    kappa_hi: Fraction | None
    theta_star: Fraction
    theta_max: Fraction
    eta_max: Fraction
    omega: Fraction
    theta_sequence: list[Fraction]
    checks: list[Check] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.k - 1

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_dict(self) -> dict:
        fs = frac_str
        return {
            "k": self.k,
            "d": self.d,
            "n": self.n,
            "kappa": fs(self.kappa),
            "kappa_interval": [fs(self.kappa_lo), fs(self.kappa_hi)],
            "theta_star": fs(self.theta_star),
            "theta_max": fs(self.theta_max),
            "eta_max": fs(self.eta_max),
            "omega": fs(self.omega),
            "theta_sequence": [fs(t) for t in self.theta_sequence],
            "steps": len(self.theta_sequence) - 1,
            "checks": [c.as_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExponentCertificate":
        F = Fraction
        checks = [Check(c["name"], F(c["lhs"]), F(c["rhs"]), c["strict"]) for c in data["checks"]]
        return cls(
            data["k"], data["n"], F(data["kappa"]), F(data["kappa_interval"][0]), F(data["kappa_interval"][1]),
            F(data["theta_star"]), F(data["theta_max"]), F(data["eta_max"]), F(data["omega"]),
            [F(t) for t in data["theta_sequence"]], checks,
        )

    def reverify(self) -> "ExponentCertificate":
        """Rebuild from (k, n, kappa, theta_*) and compare every stored number."""
        fresh = certify(self.k, self.n, self.kappa, self.theta_star)
        if fresh.to_dict() != self.to_dict():
            raise AssertionError("certificate does not reproduce")
        return fresh


def certify(k: int, n: int | None = None, kappa=None, theta_star=None) -> ExponentCertificate:
    """Full certificate: kappa interval, derived exponents, theta sequence and all inequalities.

    Defaults: n = threshold + 1, kappa = midpoint of its interval, theta_* = theta_max.
    """
    _check_k(k)
    d = k - 1
    n = threshold_n0(k) + 1 if n is None else n
    iv = feasible_kappa(k, n)
    if iv.empty:
        raise InfeasibleError(f"no admissible kappa for k={k}, n={n}: {iv.describe()}")
    kappa = iv.midpoint() if kappa is None else to_fraction(kappa)
    params = derive_params(k, n, kappa)
    theta_star = params.theta_max if theta_star is None else to_fraction(theta_star)
    seq = build_theta_sequence(k, n, kappa, theta_star)
    F = Fraction
    checks = [
        Check("n > 2^(d-1) kappa", kappa * 2 ** (d - 1), F(n)),
        Check("d/kappa + 2^d (d+2)/n < 1", d / kappa + F(2**d * (d + 2), n), F(1)),
        Check("2(d-1)/kappa + 3 2^d/n < 1", 2 * (d - 1) / kappa + F(3 * 2**d, n), F(1)),
        Check("n/2^d > k + d", F(k + d), F(n, 2**d)),
        Check("theta_* > 2^d d/(n - 2^(d+1))", theta_star_bound(k, n), theta_star),
        Check("theta_* <= theta_max", theta_star, params.theta_max, strict=False),
    ]
    checks += list(params.checks)
    for i, (a, b) in enumerate(zip(seq, seq[1:]), start=1):
        checks.append(
            Check(
                f"step {i}: 2^(d+1)(theta_{i - 1} - theta_{i}) < (n - 2^(d+1)) theta_* - 2^d d",
                2 ** (d + 1) * (a - b),
                (n - 2 ** (d + 1)) * theta_star - 2**d * d,
            )
        )
    cert = ExponentCertificate(
        k, n, kappa, iv.lo, iv.hi, theta_star, params.theta_max, params.eta_max, params.omega, seq, checks
    )
    if not cert.ok:
        raise AssertionError("certificate contains a failing inequality: " + ", ".join(c.name for c in checks if not c.ok))
    return cert


def thresholds_table(ks=range(3, 9)) -> list[dict]:
    """Rows (k, new bound, 2^k k, BHB bound, ...) for the comparison table."""
    return [prior_bounds(k).as_dict() for k in ks]
