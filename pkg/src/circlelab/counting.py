"""Exact counting of integer solutions of F = G = 0 in a box and modulo q."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import budget as _budget
from .forms import SystemSpec, eval_points

METHODS = ("enumeration", "meet-in-middle", "dft-oracle")

# Rows per vectorised chunk; bounds peak memory at a few hundred MB.
_CHUNK = 1 << 20


@dataclass(frozen=True)
class CountResult:
    X: int
    N: int
    method: str
    elapsed: float
    residual: float | None = None


@dataclass(frozen=True)
class ModCountResult:
    q: int
    gamma: int
    method: str = "direct"


def _grid(values: np.ndarray, m: int) -> np.ndarray:
    """All m-tuples over ``values`` as rows, first coordinate slowest."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    mesh = np.meshgrid(*([values] * m), indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1)


def _map(func, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _enumerate(sys: SystemSpec, X: int, threads: int) -> int:
    n = sys.n
    side = np.arange(-X, X + 1, dtype=np.int64)
    # Leading variables index the slabs, the rest form one vectorised block.
    inner = n
    while inner > 0 and (2 * X + 1) ** inner > _CHUNK:
        inner -= 1
    inner_grid = _grid(side, inner)
    leads = list(product(range(-X, X + 1), repeat=n - inner))

    def slab(lead: tuple[int, ...]) -> int:
        pts = np.concatenate(
            [np.tile(np.array(lead, dtype=np.int64), (len(inner_grid), 1)), inner_grid], axis=1
        )
        f, g = eval_points(sys, pts)
        return int(np.count_nonzero((f == 0) & (g == 0)))

    return sum(_map(slab, leads, threads))


def choose_split(sys: SystemSpec) -> tuple[tuple[int, ...], tuple[int, ...], bool]:
    """Split variables in two halves for the hash join.

    Returns (A, B, separable).  When G decomposes across blocks, A is a union
    of blocks minimising the larger side (ties: lexicographically smallest A).
    Otherwise A is the first ceil(n/2) variables and G is checked per pair.
    """
    n = sys.n
    blocks = sys.g_blocks()
    if len(blocks) > 1:
        best = None
        for mask in range(1, 2 ** len(blocks) - 1):
            A = tuple(sorted(i for b, blk in enumerate(blocks) if mask >> b & 1 for i in blk))
            key = (max(len(A), n - len(A)), -len(A), A)
            if best is None or key < best[0]:
                best = (key, A)
        A = best[1]
        B = tuple(i for i in range(n) if i not in A)
        return A, B, True
    half = (n + 1) // 2
    return tuple(range(half)), tuple(range(half, n)), False


def _half_values(sys: SystemSpec, X: int, variables, with_g: bool):
    side = np.arange(-X, X + 1, dtype=np.int64)
    pts = _grid(side, len(variables))
    f, g = eval_points(sys, pts, variables=variables)
    return pts, f, (g if with_g else None)


def _pair_keys(f: np.ndarray, g: np.ndarray, gmax: int):
    width = 2 * gmax + 1
    fmax = int(np.abs(f).max()) if f.size else 0
    if (fmax + 1) * width < 2**62 and f.dtype != object:
        return f * width + (g + gmax)
    # Exact fallback: tuples as keys.
    return np.array([(int(a), int(b)) for a, b in zip(f, g)], dtype=object)


def _count_join(keys_a, keys_b_neg) -> int:
    if keys_a.dtype == object:
        from collections import Counter

        ca = Counter(map(tuple, keys_a) if keys_a.ndim > 1 else keys_a.tolist())
        cb = Counter(map(tuple, keys_b_neg) if keys_b_neg.ndim > 1 else keys_b_neg.tolist())
        return sum(v * cb.get(key, 0) for key, v in ca.items())
    ua, ca = np.unique(keys_a, return_counts=True)
    ub, cb = np.unique(keys_b_neg, return_counts=True)
    common, ia, ib = np.intersect1d(ua, ub, assume_unique=True, return_indices=True)
    return int(np.dot(ca[ia].astype(object), cb[ib].astype(object))) if len(common) else 0


def _meet_in_middle(sys: SystemSpec, X: int, threads: int) -> int:
    A, B, separable = choose_split(sys)
    if separable:
        _, fa, ga = _half_values(sys, X, A, True)
        _, fb, gb = _half_values(sys, X, B, True)
        gmax = max(int(np.abs(ga).max()), int(np.abs(gb).max()))
        if fa.dtype == object or fb.dtype == object:
            ka = np.array(list(zip(fa.tolist(), ga.tolist())), dtype=object)
            kb = np.array(list(zip((-fb).tolist(), (-gb).tolist())), dtype=object)
            return _count_join(ka, kb)
        return _count_join(_pair_keys(fa, ga, gmax), _pair_keys(-fb, -gb, gmax))
    # G couples the halves: join on F only, then test G on matching pairs.
    pa, fa, _ = _half_values(sys, X, A, False)
    pb, fb, _ = _half_values(sys, X, B, False)
    order = np.argsort(fb, kind="stable")
    fb_sorted = fb[order]
    target = -fa
    lo = np.searchsorted(fb_sorted, target, side="left")
    hi = np.searchsorted(fb_sorted, target, side="right")
    counts = hi - lo
    ia = np.repeat(np.arange(len(pa)), counts)
    if len(ia) == 0:
        return 0
    starts = np.repeat(lo, counts)
    offsets = np.arange(len(ia)) - np.repeat(np.cumsum(counts) - counts, counts)
    ib = order[starts + offsets]
    total = 0
    for s in range(0, len(ia), _CHUNK):
        pts = np.empty((len(ia[s : s + _CHUNK]), sys.n), dtype=np.int64)
        pts[:, list(A)] = pa[ia[s : s + _CHUNK]]
        pts[:, list(B)] = pb[ib[s : s + _CHUNK]]
        _, g = eval_points(sys, pts)
        total += int(np.count_nonzero(g == 0))
    return total


def count_solutions(
    sys: SystemSpec, X: int, method: str = "meet-in-middle", budget: int | None = None, threads: int = 1
) -> CountResult:
    """Number of x in [-X, X]^n with F(x) = G(x) = 0."""
    if sys.n == 0:
        raise ValueError("n must be positive")
    if X < 0:
        raise ValueError("X must be non-negative")
    side = 2 * X + 1
    t0 = time.perf_counter()
    if method == "enumeration":
        _budget.check("enumeration", side**sys.n, budget)
        N = _enumerate(sys, X, threads)
        return CountResult(X, N, method, time.perf_counter() - t0)
    if method == "meet-in-middle":
        A, B, _ = choose_split(sys)
        _budget.check("meet-in-middle", side ** max(len(A), len(B)), budget)
        N = _meet_in_middle(sys, X, threads)
        return CountResult(X, N, method, time.perf_counter() - t0)
    if method == "dft-oracle":
        return dft_count_oracle(sys, X, budget=budget)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def dft_count_oracle(sys: SystemSpec, X: int, budget: int | None = None, tol: float = 1e-6) -> CountResult:
    """Average S over the grid (j/M_k, l/M_d); equals N once M exceeds twice the value range."""
    t0 = time.perf_counter()
    side = np.arange(-X, X + 1, dtype=np.int64)
    P = (2 * X + 1) ** sys.n
    _budget.check("dft-oracle points", P, budget)
    f, g = eval_points(sys, _grid(side, sys.n))
    f = np.array([int(v) for v in f], dtype=object) if f.dtype == object else f
    Mk = 2 * int(np.abs(f).max()) + 1
    Md = 2 * int(np.abs(g).max()) + 1
    _budget.check("dft-oracle grid", Mk * Md * P, budget)
    fr = np.array([int(v) % Mk for v in f], dtype=np.int64) if f.dtype == object else f % Mk
    gr = g % Md
    total = 0j
    jk = np.arange(Mk, dtype=np.int64)
    jd = np.arange(Md, dtype=np.int64)
    step = max(1, _CHUNK // max(Mk, Md))
    for s in range(0, P, step):
        # Exact integer reduction before the phase keeps every argument in [0, 1).
        ef = np.exp(2j * np.pi * ((np.outer(jk, fr[s : s + step]) % Mk) / Mk))
        eg = np.exp(2j * np.pi * ((np.outer(jd, gr[s : s + step]) % Md) / Md))
        total += (ef @ eg.T).sum()
    mean = total / (Mk * Md)
    N = int(round(mean.real))
    residual = float(max(abs(mean.real - N), abs(mean.imag)))
    if residual >= tol:
        raise _budget.InvariantViolation(f"dft oracle residual {residual:.3e} exceeds {tol:g}")
    return CountResult(X, N, "dft-oracle", time.perf_counter() - t0, residual)


def factorize(q: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= q:
        if q % p == 0:
            e = 0
            while q % p == 0:
                q //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if q > 1:
        out.append((q, 1))
    return out


def _count_mod_direct(sys: SystemSpec, q: int) -> int:
    residues = np.arange(q, dtype=np.int64)
    inner = sys.n
    while inner > 0 and q**inner > _CHUNK:
        inner -= 1
    inner_grid = _grid(residues, inner)
    total = 0
    for lead in product(range(q), repeat=sys.n - inner):
        pts = np.concatenate([np.tile(np.array(lead, dtype=np.int64), (len(inner_grid), 1)), inner_grid], axis=1)
        f, g = eval_points(sys, pts, modulus=q)
        total += int(np.count_nonzero((f == 0) & (g == 0)))
    return total


def lift_solutions(sys: SystemSpec, p: int, h_max: int, budget: int | None = None):
    """Solutions modulo p, p^2, ..., p^h_max by lifting through p^n fibres.

    Yields (h, solutions) where ``solutions`` is an (m, n) array of residues
    modulo p^h.  Each level scans x + p^h * t for t in (Z/p)^n.
    """
    cap = budget if budget is not None else _budget.default_budget()
    fibre = _grid(np.arange(p, dtype=np.int64), sys.n)
    sols = np.zeros((1, sys.n), dtype=np.int64)
    spent = 0
    for h in range(1, h_max + 1):
        modulus = p**h
        prev = p ** (h - 1)
        spent += len(sols) * len(fibre)
        if spent > cap:
            raise _budget.BudgetExceeded(f"lifting to {p}^{h}", spent, cap)
        new = []
        for s in range(0, len(sols), max(1, _CHUNK // len(fibre))):
            block = sols[s : s + max(1, _CHUNK // len(fibre))]
            cand = (block[:, None, :] + prev * fibre[None, :, :]).reshape(-1, sys.n)
            f, g = eval_points(sys, cand, modulus=modulus)
            new.append(cand[(f == 0) & (g == 0)])
        sols = np.concatenate(new, axis=0) if new else np.zeros((0, sys.n), dtype=np.int64)
        yield h, sols


def count_mod(sys: SystemSpec, q: int, method: str = "auto", budget: int | None = None) -> ModCountResult:
    """Gamma(q) = #{x mod q : F(x) = G(x) = 0 mod q}."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    if q == 1:
        return ModCountResult(1, 1, "direct")
    cap = budget if budget is not None else _budget.default_budget()
    if method == "auto":
        method = "direct" if q**sys.n <= cap else "crt"
    if method == "direct":
        _budget.check(f"Gamma({q}) direct", q**sys.n, cap)
        return ModCountResult(q, _count_mod_direct(sys, q), "direct")
    if method == "lift":
        fac = factorize(q)
        if len(fac) != 1:
            raise ValueError("lifting needs a prime power modulus")
        p, e = fac[0]
        sols = None
        for _, sols in lift_solutions(sys, p, e, cap):
            pass
        return ModCountResult(q, len(sols), "lift")
    if method == "crt":
        gamma = 1
        for p, e in factorize(q):
            pe = p**e
            if pe**sys.n <= cap:
                gamma *= _count_mod_direct(sys, pe)
            else:
                gamma *= count_mod(sys, pe, "lift", cap).gamma
        return ModCountResult(q, gamma, "crt")
    raise ValueError(f"unknown method {method!r}")


def is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, math.isqrt(p) + 1))
