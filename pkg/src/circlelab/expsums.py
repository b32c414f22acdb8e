"""Exponential sums S(alpha), the linear sums phi, f, g and Weyl-type diagnostics.

Phases are reduced exactly before they reach floating point: alpha is an exact
rational (floats are read at face value) and frac(alpha * v) is computed with
integer arithmetic, either exactly or to 2^-64 through wrapping 64-bit
products.  Only the final e(.) is evaluated in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import mpmath
import numpy as np

from . import budget as _budget
from .arcs import TorusPoint, classify_Ma
from .counting import _grid, _map
from .exact import frac_str, mod1, to_fraction
from .forms import SystemSpec, difference_polynomial, eval_points

_CHUNK = 1 << 20


def frac_products(alpha, values) -> np.ndarray:
    """frac(alpha * v) for an integer array ``values``, as float64 in [0, 1)."""
    a = mod1(to_fraction(alpha))
    values = np.asarray(values)
    p, q = a.numerator, a.denominator
    if p == 0:
        return np.zeros(values.shape)
    if values.dtype == object:
        return np.array([(p * int(v)) % q for v in values.ravel()], dtype=float).reshape(values.shape) / q
    values = values.astype(np.int64)
    if q < (1 << 31):
        return ((values % q) * p % q) / q
    # Fixed point: A = floor(a 2^64); wrapping products are exact mod 2^64.
    A = np.uint64((p << 64) // q)
    with np.errstate(over="ignore"):
        r = values.astype(np.uint64) * A
    return (r >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _e(phase: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * phase)


def _csum(z: np.ndarray) -> complex:
    # numpy's pairwise summation per chunk, then exact fsum across chunks.
    re, im = [], []
    for s in range(0, z.size, _CHUNK):
        part = z[s : s + _CHUNK]
        re.append(float(np.sum(part.real)))
        im.append(float(np.sum(part.imag)))
    return complex(math.fsum(re), math.fsum(im))


def _as_point(alpha) -> TorusPoint:
    if isinstance(alpha, TorusPoint):
        return alpha
    if isinstance(alpha, (tuple, list)):
        return TorusPoint(*alpha)
    return TorusPoint(alpha, 0)


def _block_sum(sys: SystemSpec, pt: TorusPoint, X: int, variables: Sequence[int], threads: int) -> complex:
    side = np.arange(-X, X + 1, dtype=np.int64)
    m = len(variables)
    inner = m
    while inner > 0 and (2 * X + 1) ** inner > _CHUNK:
        inner -= 1
    inner_grid = _grid(side, inner)
    leads = list(product(range(-X, X + 1), repeat=m - inner))
    g_terms = sys.g_restricted(variables)

    def slab(lead):
        pts = np.concatenate([np.tile(np.array(lead, dtype=np.int64), (len(inner_grid), 1)), inner_grid], axis=1)
        f, g = eval_points(sys, pts, variables=variables, g_terms=g_terms)
        return _csum(_e(frac_products(pt.alpha_k, f) + frac_products(pt.alpha_d, g)))

    parts = _map(slab, leads, threads)
    return complex(math.fsum(z.real for z in parts), math.fsum(z.imag for z in parts))


def eval_S(sys: SystemSpec, alpha, X: int, budget: int | None = None, threads: int = 1, factor: bool = True) -> complex:
    """S(alpha) = sum over [-X, X]^n of e(alpha_k F(x) + alpha_d G(x)).

    F is diagonal, so S is the product of the sums over the blocks of G
    (``factor=False`` enumerates the whole box instead).
    """
    if X < 0:
        raise ValueError("X must be non-negative")
    pt = _as_point(alpha)
    blocks = sys.g_blocks() if factor else [tuple(range(sys.n))]
    _budget.check("exponential sum points", sum((2 * X + 1) ** len(b) for b in blocks), budget)
    value = complex(1.0)
    for b in blocks:
        value *= _block_sum(sys, pt, X, b, threads)
    return value


def _dirichlet_abs(beta_frac: np.ndarray, beta_m_frac: np.ndarray, m: np.ndarray) -> np.ndarray:
    """|sum_{x=0}^{m-1} e(beta x)| = |sin(pi beta m) / sin(pi beta)|, m where beta is integral."""
    beta_frac = np.atleast_1d(beta_frac)
    m = np.atleast_1d(np.asarray(m, dtype=float))
    out = m.copy()
    nz = beta_frac != 0
    out[nz] = np.abs(np.sin(np.pi * np.atleast_1d(beta_m_frac)[nz])) / np.sin(np.pi * beta_frac[nz])
    # Rounding can push a ratio a hair above the trivial bound.
    return np.where(m > 0, np.minimum(out, m), 0.0)


def eval_phi(lead: int, const: int, interval: tuple[int, int], alpha) -> complex:
    """phi(alpha; I) = sum_{x in I} e(alpha (lead x + const)), closed form."""
    lo, hi = int(interval[0]), int(interval[1])
    m = hi - lo + 1
    if m <= 0:
        return 0j
    a = to_fraction(alpha)
    beta = mod1(a * lead)
    start = complex(np.exp(2j * np.pi * float(mod1(a * (lead * lo + const)))))
    if beta == 0:
        return m * start
    # e(beta lo) e(beta (m-1)/2) sin(pi beta m) / sin(pi beta); angles reduced mod 2.
    ratio = math.sin(math.pi * float((beta * m) % 2)) / math.sin(math.pi * float(beta))
    rot = complex(np.exp(1j * np.pi * float((beta * (m - 1)) % 2)))
    return start * rot * ratio


def eval_phi_direct(lead: int, const: int, interval: tuple[int, int], alpha) -> complex:
    lo, hi = int(interval[0]), int(interval[1])
    if hi < lo:
        return 0j
    xs = np.arange(lo, hi + 1, dtype=np.int64)
    return _csum(_e(frac_products(alpha, lead * xs + const)))


def _abs_phi_many(coeffs: np.ndarray, alpha, m) -> np.ndarray:
    """|phi| for linear coefficients ``coeffs`` (integers) over intervals of length m."""
    coeffs = np.asarray(coeffs, dtype=np.int64)
    m = np.broadcast_to(np.asarray(m, dtype=np.int64), coeffs.shape)
    beta = frac_products(alpha, coeffs)
    beta_m = frac_products(alpha, coeffs * m)
    return _dirichlet_abs(beta, beta_m, m)


def weyl_single_sum(lead_const: tuple[int, int], alpha, X: int, k: int, budget: int | None = None) -> float:
    """sum_{h=1}^{floor(X^(k-1))} |phi(h alpha; [-X, X])|."""
    lead, _ = lead_const
    H = X ** (k - 1)
    _budget.check("Weyl single sum terms", H, budget)
    total = []
    for s in range(1, H + 1, _CHUNK):
        h = np.arange(s, min(H, s + _CHUNK - 1) + 1, dtype=np.int64)
        total.append(float(np.sum(_abs_phi_many(h * lead, alpha, 2 * X + 1))))
    return math.fsum(total)


def product_multiplicities(X: int, factors: int) -> dict[int, int]:
    """How often each |h_1 ... h_m| occurs over nonzero h_i in [-X, X]."""
    counts = {1: 1}
    for _ in range(factors):
        nxt: dict[int, int] = {}
        for v, c in counts.items():
            for h in range(1, X + 1):
                nxt[v * h] = nxt.get(v * h, 0) + 2 * c
        counts = nxt
    return counts


def weyl_product_sum(alpha, X: int, k: int, lead: int = 1, budget: int | None = None) -> float:
    """Sum over nonzero h_1..h_(k-1) in [-X, X] of |phi(h_1 ... h_(k-1) alpha; [-X, X])|.

    |phi(-beta)| = |phi(beta)|, so terms are grouped by |product| with their
    multiplicities.
    """
    _budget.check("Weyl product sum terms", (2 * X) ** (k - 1), budget)
    mult = product_multiplicities(X, k - 1)
    vals = np.array(sorted(mult), dtype=np.int64)
    weights = np.array([mult[v] for v in vals], dtype=float)
    return math.fsum(_abs_phi_many(vals * lead, alpha, 2 * X + 1) * weights)


def weyl_product_sum_naive(alpha, X: int, k: int, lead: int = 1) -> float:
    hs = [h for h in range(-X, X + 1) if h]
    terms = [abs(eval_phi(lead * math.prod(t), 0, (-X, X), alpha)) for t in product(hs, repeat=k - 1)]
    return math.fsum(terms)


# ------------------------------------------------------------ differencing


def diff_interval(w: Sequence[int], X: int) -> tuple[int, int]:
    """I(w) = intersection over eps in {0,1}^d of [-X, X] - eps.w (empty when lo > hi)."""
    neg = sum(-v for v in w if v < 0)
    pos = sum(v for v in w if v > 0)
    return -X + neg, X - pos


@dataclass
class DifferencingData:
    """Differencing vectors h_1..h_d in Z^n, regrouped per variable."""

    X: int
    h_vectors: tuple[tuple[int, ...], ...]
    per_variable: tuple[tuple[int, ...], ...] = field(init=False)
    intervals: tuple[tuple[int, int], ...] = field(init=False)
    zero_set_size: int = field(init=False)

    def __post_init__(self):
        self.h_vectors = tuple(tuple(int(v) for v in h) for h in self.h_vectors)
        d = len(self.h_vectors)
        n = len(self.h_vectors[0]) if d else 0
        self.per_variable = tuple(tuple(h[i] for h in self.h_vectors) for i in range(n))
        self.intervals = tuple(diff_interval(w, self.X) for w in self.per_variable)
        self.zero_set_size = zero_set_size(self.X, d)

    def interval_length(self, i: int) -> int:
        lo, hi = self.intervals[i]
        return max(0, hi - lo + 1)


def zero_set_size(X: int, d: int) -> int:
    """#{h in [-X, X]^d : h_1 ... h_d = 0}."""
    return (2 * X + 1) ** d - (2 * X) ** d


def eval_f(alpha, w: Sequence[int], X: int, k: int) -> complex:
    """f(alpha; w) = sum over I(w) of e(alpha p_w(x)), p_w the (k-1)-fold difference of x^k."""
    p = difference_polynomial(k, w)
    return eval_phi(p.product * p.lead, p.product * p.const, diff_interval(w, X), alpha)


@dataclass
class FGResult:
    alpha: Fraction
    X: int
    H: int
    box: str
    g: float
    n_vectors: int
    max_interval: int


def eval_f_g(
    sys: SystemSpec,
    alpha_k,
    X: int,
    box: str = "all",
    index: int = 0,
    H: int | None = None,
    budget: int | None = None,
) -> FGResult:
    """g(alpha_k c; box) = sum over h of |f(alpha_k c; h)| with c the index-th diagonal coefficient.

    h runs over [-H, H]^d (H = X by default); ``box="nonzero"`` keeps only
    h_1 ... h_d != 0.
    """
    if box not in ("all", "nonzero"):
        raise ValueError("box must be 'all' or 'nonzero'")
    k, d = sys.k, sys.d
    H = X if H is None else H
    _budget.check("differencing vectors", (2 * H + 1) ** d, budget)
    alpha = to_fraction(alpha_k) * sys.diag_coeffs[index]
    side = np.arange(-H, H + 1, dtype=np.int64)
    hs = _grid(side, d)
    prod_h = np.prod(hs, axis=1)
    if box == "nonzero":
        keep = prod_h != 0
        hs, prod_h = hs[keep], prod_h[keep]
    m = np.maximum(0, 2 * X + 1 - np.abs(hs).sum(axis=1))
    # p_h(x) = prod(h) (k! x + const), so |f| depends on the linear coefficient only.
    vals = _abs_phi_many(prod_h * math.factorial(k), alpha, m)
    return FGResult(alpha, X, H, box, math.fsum(vals), len(hs), int(m.max()) if m.size else 0)


def eval_f_g_naive(alpha, X: int, k: int, H: int | None = None, box: str = "all") -> float:
    """Brute force: nested numeric differencing of x^k, summed directly."""
    from .forms import forward_difference_value

    H = X if H is None else H
    d = k - 1
    a = to_fraction(alpha)
    total = []
    for w in product(range(-H, H + 1), repeat=d):
        if box == "nonzero" and math.prod(w) == 0:
            continue
        lo, hi = diff_interval(w, X)
        vals = [forward_difference_value(k, w, x) for x in range(lo, hi + 1)]
        z = _csum(_e(frac_products(a, np.array(vals, dtype=object)))) if vals else 0j
        total.append(abs(z))
    return math.fsum(total)


@dataclass
class DifferencingCheck:
    X: int
    log_lhs: float
    log_rhs: float

    @property
    def ratio(self) -> float:
        return math.exp(self.log_lhs - self.log_rhs)

    @property
    def holds(self) -> bool:
        return self.log_lhs <= self.log_rhs + 1e-9


def differencing_check(sys: SystemSpec, alpha, X: int, budget: int | None = None) -> DifferencingCheck:
    """|S|^(2^d) against (4X+1)^((2^d-d-1) n) prod_i g(alpha_k c_i; [-2X, 2X]^d).

    Differences of two points of [-X, X] lie in [-2X, 2X], so with these
    ranges every Cauchy-Schwarz step is exact bookkeeping and the inequality
    holds without slack.
    """
    pt = _as_point(alpha)
    d, n = sys.d, sys.n
    S = abs(eval_S(sys, pt, X, budget))
    log_lhs = 2**d * math.log(S) if S > 0 else -math.inf
    log_rhs = (2**d - d - 1) * n * math.log(4 * X + 1)
    cache: dict[int, float] = {}
    for i, c in enumerate(sys.diag_coeffs):
        if c not in cache:
            cache[c] = eval_f_g(sys, pt.alpha_k, X, "all", i, H=2 * X, budget=budget).g
        log_rhs += math.log(cache[c])
    return DifferencingCheck(X, log_lhs, log_rhs)


# ------------------------------------------------------------ diagnostics


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def golden_fraction(bits: int = 128) -> Fraction:
    """(sqrt 5 - 1)/2 to ``bits`` binary digits."""
    with mpmath.workprec(bits + 16):
        g = (mpmath.sqrt(5) - 1) / 2
        return Fraction(int(mpmath.floor(g * 2**bits)), 2**bits)


@dataclass
class DiagRow:
    X: int
    alpha_k: Fraction
    alpha_d: Fraction
    value: complex
    envelope: float

    @property
    def ratio(self) -> float:
        return abs(self.value) / self.envelope

    def as_dict(self) -> dict:
        return {
            "X": self.X,
            "alpha_k": frac_str(self.alpha_k) if self.alpha_k.denominator < 10**12 else repr(float(self.alpha_k)),
            "alpha_d": frac_str(self.alpha_d) if self.alpha_d.denominator < 10**12 else repr(float(self.alpha_d)),
            "re": self.value.real,
            "im": self.value.imag,
            "abs": abs(self.value),
            "envelope": self.envelope,
            "ratio": self.ratio,
        }


@dataclass
class DiagTable:
    rows: list[DiagRow]
    slope: float | None


def weyl_diag(alpha, X_list: Sequence[int], k: int = 3, theta=1, lead: int = 1, budget: int | None = None) -> DiagTable:
    """weyl_single_sum against X^(k - theta), with the log-log slope of the ratio."""
    a = to_fraction(alpha)
    th = float(to_fraction(theta))
    rows = []
    for X in X_list:
        v = weyl_single_sum((lead, 0), a, X, k, budget)
        rows.append(DiagRow(X, mod1(a), Fraction(0), complex(v), float(X) ** (k - th)))
    slope = loglog_slope([r.X for r in rows], [r.ratio for r in rows]) if len(rows) > 1 else None
    return DiagTable(rows, slope)


def minor_arc_sup_diag(
    sys: SystemSpec,
    theta,
    X_list: Sequence[int],
    alpha_samples: int = 200,
    seed: int = 0,
    budget: int | None = None,
    max_tries: int | None = None,
) -> DiagTable:
    """Largest |S| over random minor-arc samples, against X^(n - n theta / 2^d).

    alpha_k is drawn with 53 random bits and kept only when it lies in the
    minor arc m(theta) for that X; alpha_d is uniform.
    """
    th = to_fraction(theta)
    n, d, k = sys.n, sys.d, sys.k
    rng = np.random.default_rng(seed)
    max_tries = max_tries or 50 * alpha_samples
    rows = []
    for X in X_list:
        best: DiagRow | None = None
        got = tries = 0
        envelope = float(X) ** (n - n * float(th) / 2**d)
        while got < alpha_samples and tries < max_tries:
            tries += 1
            ak = Fraction(int(rng.integers(0, 1 << 53)), 1 << 53)
            ad = Fraction(int(rng.integers(0, 1 << 53)), 1 << 53)
            if classify_Ma(ak, th, X, k):
                continue
            got += 1
            val = eval_S(sys, (ak, ad), X, budget)
            if best is None or abs(val) > abs(best.value):
                best = DiagRow(X, ak, ad, val, envelope)
        if best is None:
            raise ValueError(f"no minor-arc sample found at X={X} for theta={th}")
        rows.append(best)
    slope = loglog_slope([r.X for r in rows], [r.ratio for r in rows]) if len(rows) > 1 else None
    return DiagTable(rows, slope)
