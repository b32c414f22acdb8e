"""Integer form pairs (F diagonal of degree k, G of degree k-1) and Weyl differencing.

Form-spec files are JSON documents::

    {
      "n": 2,
      "k": 3,
      "diag": [1, 1],
      "g_monomials": [{"exps": [2, 0], "coef": 1},
                      {"exps": [0, 2], "coef": 1}]
    }

``diag`` lists the coefficients c_1..c_n of F = sum c_i x_i^k.  Each entry of
``g_monomials`` is one monomial of G; exponent vectors must have length n and
sum to k - 1.  An optional ``"name"`` string is carried along for reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

# int64 evaluation is used while |values| stay below this; otherwise object arrays.
_INT64_SAFE = 2**62


class FormSpecError(ValueError):
    """Malformed or invalid form specification."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class SystemSpec:
    """F = sum c_i x_i^k together with a form G of degree d = k - 1."""

    n: int
    k: int
    diag_coeffs: tuple[int, ...]
    g_monomials: tuple[tuple[tuple[int, ...], int], ...]
    name: str = ""

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def d(self) -> int:
        return self.k - 1

    def F(self, x: Sequence[int]) -> int:
        return eval_form(self, "F", x)

    def G(self, x: Sequence[int]) -> int:
        return eval_form(self, "G", x)

    def g_blocks(self) -> list[tuple[int, ...]]:
        """Connected components of the variable graph of G.

        Two variables are linked when some monomial of G contains both, so G is
        a sum of forms in disjoint variable blocks.  Variables absent from G are
        singleton blocks.
        """
        parent = list(range(self.n))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for exps, _ in self.g_monomials:
            support = [i for i, e in enumerate(exps) if e]
            for a, b in zip(support, support[1:]):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        groups: dict[int, list[int]] = {}
        for i in range(self.n):
            groups.setdefault(find(i), []).append(i)
        return [tuple(v) for _, v in sorted(groups.items())]

    def is_diagonal_g(self) -> bool:
        return all(len(b) == 1 for b in self.g_blocks())

    def g_restricted(self, variables: Sequence[int]) -> list[tuple[tuple[int, ...], int]]:
        """Monomials of G supported inside ``variables``, re-indexed to that subset."""
        vs = list(variables)
        vset = set(vs)
        out = []
        for exps, coef in self.g_monomials:
            if all(e == 0 or i in vset for i, e in enumerate(exps)):
                out.append((tuple(exps[i] for i in vs), coef))
        return out

    def max_abs(self, X: int) -> tuple[int, int]:
        """Upper bounds for |F| and |G| on the box [-X, X]^n."""
        fmax = sum(abs(c) for c in self.diag_coeffs) * X**self.k
        gmax = sum(abs(c) for _, c in self.g_monomials) * X**self.d
        return fmax, gmax

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "k": self.k,
            "diag": list(self.diag_coeffs),
            "g_monomials": [{"exps": list(e), "coef": c} for e, c in self.g_monomials],
        }
        if self.name:
            out["name"] = self.name
        return out


def _validate(sys: SystemSpec) -> None:
    if sys.n < 1:
        raise FormSpecError("n must be at least 1", "n")
    if sys.k < 3:
        raise FormSpecError("k must be at least 3", "k")
    if len(sys.diag_coeffs) != sys.n:
        raise FormSpecError(f"expected {sys.n} diagonal coefficients, got {len(sys.diag_coeffs)}", "diag")
    for i, c in enumerate(sys.diag_coeffs):
        if c == 0:
            raise FormSpecError("zero diagonal coefficient", f"diag[{i}]")
    seen = set()
    for j, (exps, coef) in enumerate(sys.g_monomials):
        if len(exps) != sys.n:
            raise FormSpecError(
                f"exponent vector of length {len(exps)}, expected {sys.n}", f"g_monomials[{j}].exps"
            )
        if any(e < 0 for e in exps):
            raise FormSpecError("negative exponent", f"g_monomials[{j}].exps")
        if sum(exps) != sys.d:
            raise FormSpecError(
                f"G not homogeneous of degree k-1 = {sys.d} (monomial has degree {sum(exps)})",
                f"g_monomials[{j}].exps",
            )
        if coef == 0:
            raise FormSpecError("zero monomial coefficient", f"g_monomials[{j}].coef")
        if tuple(exps) in seen:
            raise FormSpecError("duplicate exponent vector", f"g_monomials[{j}].exps")
        seen.add(tuple(exps))


def _locate(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def _as_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormSpecError(f"expected an integer, got {value!r}", field)
    return value


def system_from_dict(data: dict, text: str | None = None) -> SystemSpec:
    def fail(message: str, field: str):
        top = field.split("[")[0].split(".")[0]
        line = _locate(text, top) if text else None
        raise FormSpecError(message, field, line)

    if not isinstance(data, dict):
        raise FormSpecError("top level must be an object")
    for key in ("n", "k", "diag", "g_monomials"):
        if key not in data:
            raise FormSpecError("missing required field", key)
    if "d" in data and data["d"] != data["k"] - 1:
        fail(f"d must equal k-1 = {data['k'] - 1}, got {data['d']}", "d")
    try:
        n = _as_int(data["n"], "n")
        k = _as_int(data["k"], "k")
        if not isinstance(data["diag"], list):
            raise FormSpecError("expected an array", "diag")
        diag = tuple(_as_int(c, f"diag[{i}]") for i, c in enumerate(data["diag"]))
        if not isinstance(data["g_monomials"], list):
            raise FormSpecError("expected an array", "g_monomials")
        monos = []
        for j, m in enumerate(data["g_monomials"]):
            if not isinstance(m, dict) or "exps" not in m or "coef" not in m:
                raise FormSpecError("expected {exps, coef}", f"g_monomials[{j}]")
            if not isinstance(m["exps"], list):
                raise FormSpecError("expected an array", f"g_monomials[{j}].exps")
            exps = tuple(_as_int(e, f"g_monomials[{j}].exps") for e in m["exps"])
            monos.append((exps, _as_int(m["coef"], f"g_monomials[{j}].coef")))
        return SystemSpec(n=n, k=k, diag_coeffs=diag, g_monomials=tuple(monos), name=str(data.get("name", "")))
    except FormSpecError as exc:
        if exc.line is None and exc.field is not None and text:
            fail(str(exc).split(": ", 1)[-1], exc.field)
        raise


def parse_system(spec_text: str) -> SystemSpec:
    """Parse and validate a form-spec JSON document."""
    try:
        data = json.loads(spec_text)
    except json.JSONDecodeError as exc:
        raise FormSpecError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    return system_from_dict(data, spec_text)


def load_system(path) -> SystemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


def make_system(diag: Iterable[int], g_terms: dict[tuple[int, ...], int], k: int = 3, name: str = "") -> SystemSpec:
    diag = tuple(diag)
    return SystemSpec(
        n=len(diag), k=k, diag_coeffs=diag, g_monomials=tuple(sorted(g_terms.items())), name=name
    )


def eval_form(sys: SystemSpec, which: str, x: Sequence[int], modulus: int | None = None) -> int:
    """Exact value of F(x) or G(x), optionally reduced modulo ``modulus``."""
    if len(x) != sys.n:
        raise ValueError(f"dimension mismatch: system has n={sys.n}, point has {len(x)} coordinates")
    x = [int(v) for v in x]
    if which == "F":
        value = sum(c * v**sys.k for c, v in zip(sys.diag_coeffs, x))
    elif which == "G":
        value = 0
        for exps, coef in sys.g_monomials:
            term = coef
            for v, e in zip(x, exps):
                if e:
                    term *= v**e
            value += term
    else:
        raise ValueError(f"which must be 'F' or 'G', got {which!r}")
    if modulus is not None:
        if modulus <= 0:
            raise ValueError("modulus must be positive")
        value %= modulus
    return value


def _power_table(values: np.ndarray, e: int, modulus: int | None):
    if modulus is None:
        return values**e
    out = np.ones_like(values)
    for _ in range(e):
        out = (out * values) % modulus
    return out


def eval_points(
    sys: SystemSpec,
    points: np.ndarray,
    modulus: int | None = None,
    variables: Sequence[int] | None = None,
    g_terms: Sequence[tuple[tuple[int, ...], int]] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (F, G) over rows of ``points`` (shape (m, len(variables))).

    With ``variables`` the diagonal part of F restricted to those variables is
    evaluated, and G is replaced by ``g_terms`` (exponents indexed like the
    columns).  Values are exact: int64 when provably in range, Python ints
    otherwise.
    """
    points = np.asarray(points)
    if variables is None:
        variables = range(sys.n)
        g_terms = sys.g_monomials
    variables = list(variables)
    if g_terms is None:
        g_terms = sys.g_restricted(variables)
    coeffs = [sys.diag_coeffs[i] for i in variables]
    if modulus is None:
        bound = int(np.abs(points).max()) if points.size else 0
        fbound = sum(abs(c) for c in coeffs) * bound**sys.k
        gbound = sum(abs(c) for _, c in g_terms) * bound**sys.d
        dtype = np.int64 if max(fbound, gbound) < _INT64_SAFE else object
    else:
        dtype = np.int64 if modulus * modulus < _INT64_SAFE and modulus * max(
            [abs(c) for c in coeffs] + [abs(c) for _, c in g_terms] + [1]
        ) < _INT64_SAFE else object
    pts = points.astype(dtype)
    if modulus is not None:
        pts = pts % modulus
    m = pts.shape[0]
    f = np.zeros(m, dtype=dtype)
    for col, c in enumerate(coeffs):
        f = f + c * _power_table(pts[:, col], sys.k, modulus)
        if modulus is not None:
            f %= modulus
    g = np.zeros(m, dtype=dtype)
    for exps, coef in g_terms:
        term = np.full(m, coef, dtype=dtype)
        for col, e in enumerate(exps):
            if e:
                term = term * _power_table(pts[:, col], e, modulus)
                if modulus is not None:
                    term %= modulus
        g = g + term
        if modulus is not None:
            g %= modulus
    return f, g


@dataclass(frozen=True)
class DifferencePoly:
    """p_w(x) = product * (lead * x + const) for a differencing vector w."""

    w: tuple[int, ...]
    product: int
    lead: int
    const: int

    def __call__(self, x: int) -> int:
        return self.product * (self.lead * x + self.const)

    @property
    def is_zero(self) -> bool:
        return self.product == 0


def _divided_difference(coeffs: list[int], w: int) -> list[int]:
    # (f(x + w) - f(x)) / w for f = sum coeffs[j] x^j; integral and defined at w = 0.
    out = [0] * max(len(coeffs) - 1, 1)
    for j, a in enumerate(coeffs):
        if a == 0:
            continue
        for i in range(1, j + 1):
            out[j - i] += a * math.comb(j, i) * w ** (i - 1)
    return out


def difference_polynomial(k: int, w: Sequence[int]) -> DifferencePoly:
    """Iterated forward difference of x^k along w_1, ..., w_{k-1}, in factored form."""
    w = tuple(int(v) for v in w)
    if len(w) != k - 1:
        raise ValueError(f"differencing vector must have length k-1 = {k - 1}, got {len(w)}")
    coeffs = [0] * k + [1]
    for wi in w:
        coeffs = _divided_difference(coeffs, wi)
    assert len(coeffs) == 2
    return DifferencePoly(w=w, product=math.prod(w), lead=coeffs[1], const=coeffs[0])


def forward_difference_value(k: int, w: Sequence[int], x: int) -> int:
    """Numeric nested differencing of x^k: independent check of difference_polynomial."""

    def f(t: int) -> int:
        return t**k

    funcs = f
    for wi in w:
        funcs = (lambda g, h: (lambda t: g(t + h) - g(t)))(funcs, wi)
    return funcs(x)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    r = math.isqrt(p)
    return all(p % q for q in range(3, r + 1, 2))


def gradients(sys: SystemSpec, x: Sequence[int]) -> tuple[list[int], list[int]]:
    x = [int(v) for v in x]
    dF = [sys.k * c * v ** (sys.k - 1) for c, v in zip(sys.diag_coeffs, x)]
    dG = [0] * sys.n
    for exps, coef in sys.g_monomials:
        for j, e in enumerate(exps):
            if e == 0:
                continue
            term = coef * e
            for i, (v, ei) in enumerate(zip(x, exps)):
                p = ei - 1 if i == j else ei
                if p:
                    term *= v**p
            dG[j] += term
    return dF, dG


def jacobian_rank_mod_p(sys: SystemSpec, x: Sequence[int], p: int) -> int:
    """Rank over F_p of the 2 x n Jacobian of (F, G) at x."""
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    if len(x) != sys.n:
        raise ValueError(f"dimension mismatch: system has n={sys.n}, point has {len(x)} coordinates")
    dF, dG = gradients(sys, x)
    dF = [v % p for v in dF]
    dG = [v % p for v in dG]
    if not any(dF) and not any(dG):
        return 0
    for i, j in combinations(range(sys.n), 2):
        if (dF[i] * dG[j] - dF[j] * dG[i]) % p:
            return 2
    return 1
