"""Local densities: complete sums, singular series, p-adic densities and the singular integral."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

import numpy as np

from . import budget as _budget
from .arcs import classify_Pa
from .counting import _grid, lift_solutions
from .exact import to_fraction
from .expsums import _as_point, _csum, _e, eval_S, loglog_slope
from .forms import SystemSpec, eval_points

# ------------------------------------------------------------ complete sums


@dataclass(frozen=True)
class CompleteSum:
    s: int
    a_k: int
    a_d: int
    value: complex


def _block_residues(sys: SystemSpec, s: int, block: Sequence[int]):
    pts = _grid(np.arange(s, dtype=np.int64), len(block))
    f, g = eval_points(sys, pts, modulus=s, variables=block)
    return f.astype(np.int64), g.astype(np.int64)


def complete_sum(sys: SystemSpec, s: int, a_k: int, a_d: int, budget: int | None = None) -> CompleteSum:
    """S(s; a) = sum over x mod s of e_s(a_k F(x) + a_d G(x)), phases reduced exactly."""
    if s < 1:
        raise ValueError("s must be positive")
    if math.gcd(math.gcd(s, a_k), a_d) != 1:
        raise ValueError(f"gcd(s, a_k, a_d) must be 1, got s={s}, a=({a_k}, {a_d})")
    blocks = sys.g_blocks()
    _budget.check(f"complete sum mod {s}", sum(s ** len(b) for b in blocks), budget)
    value = complex(1.0)
    for b in blocks:
        f, g = _block_residues(sys, s, b)
        value *= _csum(_e(((a_k * f + a_d * g) % s) / s))
    return CompleteSum(s, a_k % s, a_d % s, value)


def complete_sum_table(sys: SystemSpec, s: int, budget: int | None = None) -> np.ndarray:
    """S(s; a_k, a_d) for all residues at once, indexed [a_k, a_d].

    Each block contributes the 2-d DFT of its histogram of (F, G) mod s.
    """
    blocks = sys.g_blocks()
    _budget.check(f"complete sum table mod {s}", sum(s ** len(b) for b in blocks) + len(blocks) * s * s, budget)
    table = np.ones((s, s), dtype=complex)
    for b in blocks:
        f, g = _block_residues(sys, s, b)
        hist = np.bincount(f * s + g, minlength=s * s).reshape(s, s).astype(float)
        table *= np.fft.ifft2(hist) * (s * s)
    return table


def _coprime_mask(s: int) -> np.ndarray:
    a = np.arange(s)
    return np.gcd(np.gcd(a[:, None], a[None, :]), s) == 1


def a_term(sys: SystemSpec, s: int, budget: int | None = None, table: np.ndarray | None = None) -> float:
    """A(s) = s^-n sum over a mod s with gcd(s, a_k, a_d) = 1 of S(s; a)."""
    if s == 1:
        return 1.0
    table = complete_sum_table(sys, s, budget) if table is None else table
    vals = table[_coprime_mask(s)]
    total = complex(math.fsum(vals.real), math.fsum(vals.imag)) / s**sys.n
    if abs(total.imag) > 1e-9:
        raise _budget.InvariantViolation(f"A({s}) has imaginary part {total.imag:.3e}")
    return total.real


@dataclass
class SeriesTruncation:
    R: int
    value: float
    terms: list[float]
    doubling_residuals: dict[int, float] = field(default_factory=dict)

    def partial(self, R: int) -> float:
        """S(R) for any R up to the computed level."""
        if not 1 <= R <= self.R:
            raise ValueError(f"truncation {R} outside 1..{self.R}")
        return math.fsum(self.terms[:R])


def singular_series(sys: SystemSpec, R: int, budget: int | None = None) -> SeriesTruncation:
    """Truncated singular series sum_{s <= R} A(s), with |S(2r) - S(r)| for r = R/2, R/4, ..."""
    if R < 1:
        raise ValueError("R must be at least 1")
    terms = [a_term(sys, s, budget) for s in range(1, R + 1)]
    out = SeriesTruncation(R, math.fsum(terms), terms)
    r = R // 2
    while r >= 1 and 2 * r <= R:
        out.doubling_residuals[r] = abs(out.partial(2 * r) - out.partial(r))
        r //= 2
    return out


# ------------------------------------------------------------ p-adic densities


def _full_rank_mask(sys: SystemSpec, pts: np.ndarray, p: int) -> np.ndarray:
    """Rank of the Jacobian of (F, G) mod p equals 2, row by row."""
    pts = np.asarray(pts, dtype=object) % p
    m = len(pts)
    dF = [(sys.k * c * pts[:, i] ** (sys.k - 1)) % p for i, c in enumerate(sys.diag_coeffs)]
    dG = [np.zeros(m, dtype=object) for _ in range(sys.n)]
    for exps, coef in sys.g_monomials:
        for j, e in enumerate(exps):
            if e == 0:
                continue
            term = np.full(m, coef * e, dtype=object)
            for i, ei in enumerate(exps):
                power = ei - 1 if i == j else ei
                if power:
                    term = term * pts[:, i] ** power
            dG[j] = dG[j] + term
    dG = [v % p for v in dG]
    ok = np.zeros(m, dtype=bool)
    for i, j in combinations(range(sys.n), 2):
        ok |= ((dF[i] * dG[j] - dF[j] * dG[i]) % p).astype(bool)
    return ok


@dataclass
class LocalDensityReport:
    p: int
    levels: list[tuple[int, float]]
    a_terms: list[tuple[int, float]]
    identity_residuals: list[float]
    stabilized: bool
    h0: int | None
    chi_p: float
    gammas: list[int] = field(default_factory=list)
    jacobian_ok: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "levels": [{"h": h, "gamma": g, "normalized": v} for (h, v), g in zip(self.levels, self.gammas)],
            "a_terms": [{"j": j, "A": a} for j, a in self.a_terms],
            "identity_residuals": self.identity_residuals,
            "stabilized": self.stabilized,
            "h0": self.h0,
            "chi_p": self.chi_p,
            "note": self.note,
        }


def chi_p(sys: SystemSpec, p: int, h_max: int = 4, tol: float = 1e-6, budget: int | None = None) -> LocalDensityReport:
    """Normalized counts p^(h(2-n)) Gamma(p^h) by lifting, checked against sum_j A(p^j).

    Stabilized means two consecutive levels agree within ``tol`` and every
    solution with nonzero reduction mod p is nonsingular mod p.
    """
    from .counting import is_prime

    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    levels, gammas, a_terms, residuals = [], [], [(0, 1.0)], []
    stabilized, h0, jac_ok, note = False, None, False, ""
    a_sum = [1.0]
    try:
        for h, sols in lift_solutions(sys, p, h_max, budget):
            gamma = len(sols)
            value = float(Fraction(gamma) * Fraction(p) ** (h * (2 - sys.n)))
            a_terms.append((h, a_term(sys, p**h, budget)))
            a_sum.append(a_sum[-1] + a_terms[-1][1])
            residuals.append(abs(value - math.fsum(a for _, a in a_terms)))
            levels.append((h, value))
            gammas.append(gamma)
            nonzero = sols[(sols % p).any(axis=1)]
            jac_ok = bool(_full_rank_mask(sys, nonzero, p).all()) if len(nonzero) else True
            if not stabilized and len(levels) >= 2 and abs(levels[-1][1] - levels[-2][1]) < tol and jac_ok:
                stabilized, h0 = True, h - 1
    except _budget.BudgetExceeded as exc:
        note = str(exc)
    if residuals and max(residuals) >= 1e-9:
        raise _budget.InvariantViolation(f"p^(h(2-n)) Gamma(p^h) differs from sum A(p^j) by {max(residuals):.3e}")
    return LocalDensityReport(
        p, levels, a_terms, residuals, stabilized, h0, levels[-1][1] if levels else 1.0, gammas, jac_ok, note
    )


# ------------------------------------------------------------ oscillatory integrals


def _real_values(sys: SystemSpec, block: Sequence[int], pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    f = np.zeros(len(pts))
    for col, i in enumerate(block):
        f += sys.diag_coeffs[i] * pts[:, col] ** sys.k
    g = np.zeros(len(pts))
    for exps, coef in sys.g_restricted(block):
        term = np.full(len(pts), float(coef))
        for col, e in enumerate(exps):
            if e:
                term *= pts[:, col] ** e
        g += term
    return f, g


def _tensor_nodes(m: int, dim: int, lo: float = -1.0) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    if lo == 0.0:
        x, w = (x + 1) / 2, w / 2
    pts = _grid(x, dim) if dim else np.zeros((1, 0))
    wts = np.prod(_grid(w, dim), axis=1) if dim else np.ones(1)
    return pts, wts


def _block_bounds(sys: SystemSpec, block: Sequence[int]) -> tuple[float, float]:
    """Upper bounds for |F_B| and |G_B| on [-1, 1]^|B|."""
    fmax = sum(abs(sys.diag_coeffs[i]) for i in block)
    gmax = sum(abs(c) for _, c in sys.g_restricted(block))
    return float(fmax), float(gmax)


def _single_var(sys: SystemSpec, block: Sequence[int]) -> tuple[int, int] | None:
    """(c, b) when the block is one variable with F_B = c x^k and G_B = b x^d."""
    if len(block) != 1:
        return None
    terms = sys.g_restricted(block)
    b = sum(c for exps, c in terms if exps == (sys.d,))
    return sys.diag_coeffs[block[0]], b


def auto_order(sys: SystemSpec, block: Sequence[int], gk: float, gd: float) -> int:
    """Gauss-Legendre order per axis that resolves e(gk F_B + gd G_B) on [-1, 1].

    Uses the largest phase derivative along any axis of the block; Gauss-Legendre
    converges geometrically once the order exceeds about e/4 times that frequency.
    """
    worst = 0.0
    for col, i in enumerate(block):
        slope = abs(gk) * sys.k * abs(sys.diag_coeffs[i])
        slope += abs(gd) * sum(abs(c) * exps[col] for exps, c in sys.g_restricted(block))
        worst = max(worst, slope)
    return 16 + math.ceil(0.75 * 2 * math.pi * worst)


def _block_J(sys: SystemSpec, block, gk: float, gd: float, m: int) -> complex:
    pts, wts = _tensor_nodes(m, len(block))
    f, g = _real_values(sys, block, pts)
    return complex(np.dot(wts, np.exp(2j * np.pi * (gk * f + gd * g))))


@dataclass(frozen=True)
class JValue:
    value: complex
    error: float
    order: int
    converged: bool


def eval_J(
    sys: SystemSpec,
    gamma_k: float,
    gamma_d: float,
    order: int | None = None,
    tol: float = 1e-10,
    max_points: int = 4_000_000,
) -> JValue:
    """J(gamma) = integral over [-1, 1]^n of e(gamma_k F + gamma_d G).

    Tensor Gauss-Legendre per G-block; the order is doubled until two
    successive orders agree within ``tol`` (the reported error).
    """
    if sys.n > 8:
        raise _budget.BudgetExceeded("quadrature dimension", sys.n, 8)
    total, err, converged, used = complex(1.0), 0.0, True, 0
    for block in sys.g_blocks():
        m = order or max(16, auto_order(sys, block, gamma_k, gamma_d) // 2)
        cur = _block_J(sys, block, gamma_k, gamma_d, m)
        while True:
            if (2 * m) ** len(block) > max_points:
                converged = False
                e = math.inf
                break
            nxt = _block_J(sys, block, gamma_k, gamma_d, 2 * m)
            e = abs(nxt - cur)
            cur, m = nxt, 2 * m
            if e < tol:
                break
        err = err + e * abs(total) if math.isfinite(e) else math.inf
        total *= cur
        used = max(used, m)
    return JValue(total, err, used, converged)


def eval_J_X(sys: SystemSpec, gamma_k: float, gamma_d: float, X: float, **kw) -> complex:
    """J_X(gamma) = X^n J(X^k gamma_k, X^d gamma_d)."""
    return X**sys.n * eval_J(sys, X**sys.k * gamma_k, X**sys.d * gamma_d, **kw).value


def J_box_direct(sys: SystemSpec, gamma_k: float, gamma_d: float, X: float, order: int = 200) -> complex:
    """Integral of e(gamma_k F + gamma_d G) over [-X, X]^n by plain tensor quadrature."""
    pts, wts = _tensor_nodes(order, sys.n)
    pts = pts * X
    f, g = _real_values(sys, list(range(sys.n)), pts)
    return complex(np.dot(wts * X**sys.n, np.exp(2j * np.pi * (gamma_k * f + gamma_d * g))))


def _panel_nodes(lo: float, hi: float, panels: int, p: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(p)
    edges = np.linspace(lo, hi, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


@dataclass
class IntegralTruncation:
    R: float
    value: float
    doubling_residuals: dict[float, float] = field(default_factory=dict)
    truncations: dict[float, float] = field(default_factory=dict)
    grid_shape: tuple[int, int] = (0, 0)
    orders: dict[tuple[int, ...], int] = field(default_factory=dict)
    grid: np.ndarray | None = None
    grid_nodes: tuple[np.ndarray, np.ndarray] | None = None


def _block_tile(sys, block, gk, gd, m, single):
    """J_B on the tile gk x gd as a complex matrix."""
    if single is not None:
        c, b = single
        x, w = np.polynomial.legendre.leggauss(m)
        x, w = (x + 1) / 2, w / 2
        # One variable: x^k and x^d have opposite parity, so fold [-1, 1] onto [0, 1].
        if sys.k % 2:
            A = np.cos(2 * np.pi * np.outer(gk, c * x**sys.k)) * (2 * w)
            B = 2 * np.pi * np.outer(b * x**sys.d, gd)
            return (A @ np.cos(B)) + 1j * (A @ np.sin(B))
        A = 2 * np.pi * np.outer(gk, c * x**sys.k)
        B = np.cos(2 * np.pi * np.outer(b * x**sys.d, gd)) * (2 * w)[:, None]
        return (np.cos(A) @ B) + 1j * (np.sin(A) @ B)
    pts, wts = _tensor_nodes(m, len(block))
    f, g = _real_values(sys, block, pts)
    out = np.zeros((len(gk), len(gd)), dtype=complex)
    step = max(256, (1 << 22) // max(len(gk), len(gd)))
    for s in range(0, len(wts), step):
        Ek = np.exp(2j * np.pi * np.outer(gk, f[s : s + step])) * wts[s : s + step]
        out += Ek @ np.exp(2j * np.pi * np.outer(g[s : s + step], gd))
    return out


def singular_integral(
    sys: SystemSpec,
    R: float,
    levels: int = 3,
    nodes: int = 16,
    panels_per_unit: tuple[float, float] | None = None,
    order: int | None = None,
    budget: int | None = None,
    keep_grid: bool = False,
    tile: int = 1024,
) -> IntegralTruncation:
    """Truncated singular integral over |gamma_k|, |gamma_d| <= R.

    One J grid (composite Gauss-Legendre panels in each gamma direction,
    aligned with R/2, R/4, ...) yields the truncations at R, R/2, ..., R/2^levels.
    J(-gamma) = conj J(gamma), so only gamma_k >= 0 is evaluated.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    blocks = sys.g_blocks()
    fmax = sum(_block_bounds(sys, b)[0] for b in blocks)
    gmax = sum(_block_bounds(sys, b)[1] for b in blocks)
    if panels_per_unit is None:
        # A 16-node panel resolves e(omega t) comfortably while e omega w / 2 <= 20.
        panels_per_unit = tuple(max(2.0, math.e * 2 * math.pi * v / 40) for v in (fmax, gmax))
    align = 2**levels
    pk = align * max(1, math.ceil(R * panels_per_unit[0] / align))
    pd = 2 * align * max(1, math.ceil(R * panels_per_unit[1] / align))
    gk, wk = _panel_nodes(0.0, R, pk, nodes)
    gd, wd = _panel_nodes(-R, R, pd, nodes)
    orders = {}
    singles = {}
    for b in blocks:
        orders[b] = order or auto_order(sys, b, R, R)
        singles[b] = _single_var(sys, b)
        if singles[b] is not None and order is None:
            orders[b] = max(16, orders[b] // 2)
    work = len(gk) * len(gd) * sum(orders[b] ** len(b) for b in blocks)
    _budget.check("singular integral work", work, budget if budget is not None else 10**13)
    radii = [R / 2**j for j in range(levels + 1)]
    acc = {r: 0.0 for r in radii}
    grid = np.zeros((len(gk), len(gd)), dtype=complex) if keep_grid else None
    for i0 in range(0, len(gk), tile):
        rows = slice(i0, i0 + tile)
        for j0 in range(0, len(gd), 2 * tile):
            cols = slice(j0, j0 + 2 * tile)
            J = np.ones((len(gk[rows]), len(gd[cols])), dtype=complex)
            cache = {}
            for b in blocks:
                key = (singles[b], orders[b]) if singles[b] is not None else (b, orders[b])
                if key not in cache:
                    cache[key] = _block_tile(sys, b, gk[rows], gd[cols], orders[b], singles[b])
                J *= cache[key]
            if grid is not None:
                grid[rows, cols] = J
            for r in radii:
                mk = (gk[rows] <= r) * wk[rows]
                md = (np.abs(gd[cols]) <= r) * wd[cols]
                acc[r] += 2 * float((mk @ J @ md).real)
    out = IntegralTruncation(R, acc[R], grid_shape=(len(gk), len(gd)), orders=orders)
    out.truncations = dict(sorted(acc.items()))
    for r in radii[1:]:
        out.doubling_residuals[r] = abs(acc[2 * r] - acc[r])
    if grid is not None:
        out.grid, out.grid_nodes = grid, (gk, gd)
    return out


def J_decay(sys: SystemSpec, gammas: Sequence[float] = (4, 8, 16, 32)) -> tuple[list[float], float]:
    """|J(gamma_k, 0)| along the gamma_k axis and its log-log slope."""
    vals = [abs(eval_J(sys, g, 0.0).value) for g in gammas]
    return vals, loglog_slope(gammas, vals)


# ------------------------------------------------------------ main term


@dataclass
class MainTerm:
    X: int
    omega: Fraction
    c_prime: Fraction
    series_R: int
    integral_R: float
    series: float
    integral: float

    @property
    def value(self) -> float:
        return self.scale * self.series * self.integral

    scale: float = 1.0


def major_arc_main_term(
    sys: SystemSpec, X: int, omega, c_prime=1, budget: int | None = None, **integral_kw
) -> MainTerm:
    """X^(n-k-d) S(floor(c' X^omega)) I(c' X^omega)."""
    omega, c_prime = to_fraction(omega), to_fraction(c_prime)
    from .exact import floor_power, power_mpf

    Rs = max(1, floor_power(X, omega, c_prime))
    Ri = float(power_mpf(X, omega, c_prime))
    series = singular_series(sys, Rs, budget).value
    integral = singular_integral(sys, Ri, levels=0, budget=budget, **integral_kw).value
    return MainTerm(X, omega, c_prime, Rs, Ri, series, integral, scale=float(X) ** (sys.n - sys.k - sys.d))


# ------------------------------------------------------------ peeling diagnostic


@dataclass
class PeelDiag:
    X: int
    s: int
    gamma_k: Fraction
    gamma_d: Fraction
    S: complex
    approx: complex
    bound: float

    @property
    def ratio(self) -> float:
        return abs(self.S - self.approx) / self.bound


def peel_error_diag(sys: SystemSpec, alpha, X: int, omega, c_prime=1, budget: int | None = None) -> PeelDiag:
    """|S(alpha) - s^-n S(s; a) J_X(gamma)| / (X^(n-1) s (1 + X^k |gamma_k| + X^d |gamma_d|))."""
    pt = _as_point(alpha)
    dec = classify_Pa(pt, omega, c_prime, X, sys.k, budget)
    if not dec:
        raise ValueError("alpha lies outside the enlarged major arcs")
    w = dec.witness
    s = w.s
    a_k, a_d = w.a_k % s, w.a_d % s
    Ssa = complete_sum(sys, s, a_k, a_d, budget).value
    gk, gd = float(w.gamma_k), float(w.gamma_d)
    JX = eval_J_X(sys, gk, gd, X)
    approx = Ssa / s**sys.n * JX
    S = eval_S(sys, pt, X, budget)
    bound = float(X) ** (sys.n - 1) * s * (1 + X**sys.k * abs(gk) + X**sys.d * abs(gd))
    return PeelDiag(X, s, w.gamma_k, w.gamma_d, S, approx, bound)
