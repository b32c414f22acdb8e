import cmath
import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from circlelab.expsums import (
    diff_interval,
    differencing_check,
    eval_f,
    eval_f_g,
    eval_f_g_naive,
    eval_phi,
    eval_phi_direct,
    eval_S,
    golden_fraction,
    minor_arc_sup_diag,
    weyl_diag,
    weyl_product_sum,
    weyl_product_sum_naive,
    weyl_single_sum,
    zero_set_size,
)
from circlelab.forms import forward_difference_value


def S_direct(sys, alpha, X):
    ak, ad = (float(a) for a in alpha)
    r = range(-X, X + 1)
    return sum(cmath.exp(2j * math.pi * (ak * sys.F(x) + ad * sys.G(x))) for x in itertools.product(r, repeat=sys.n))


def test_S_at_origin(n4):
    assert eval_S(n4, (0, 0), 3) == pytest.approx(7**4)


def test_S_three_terms(n1):
    assert eval_S(n1, (Fraction(1, 2), 0), 1) == pytest.approx(-1)


def test_S_conjugacy_and_periodicity(n2):
    a = (Fraction(1, 3), Fraction(1, 7))
    s = eval_S(n2, a, 6)
    assert eval_S(n2, (1 - a[0], 1 - a[1]), 6) == pytest.approx(s.conjugate(), abs=1e-9)
    assert eval_S(n2, (a[0] + 3, a[1] - 2), 6) == pytest.approx(s, abs=1e-9)
    assert abs(s) <= 13**2


@pytest.mark.parametrize("alpha", [(Fraction(2, 9), Fraction(5, 11)), (0.123456, 0.654321)])
def test_S_matches_direct(n4, alpha):
    assert eval_S(n4, alpha, 3) == pytest.approx(S_direct(n4, alpha, 3), abs=1e-8)
    assert eval_S(n4, alpha, 3, factor=False) == pytest.approx(eval_S(n4, alpha, 3), abs=1e-8)


def test_S_large_phase_exact(n2):
    # at X^3 ~ 1e15 the phase must still be reduced exactly
    a = (Fraction(1, 3), Fraction(0))
    X = 10**5
    v = eval_S(n2, a, X)
    per = sum(cmath.exp(2j * math.pi * (x**3 % 3) / 3) for x in range(3))
    assert abs(v) < 1e-6 and abs(per) < 1e-12


def test_dft_identity(n2):
    X = 2
    Mk, Md = 2 * 2 * X**3 + 1, 2 * 2 * X**2 + 1
    tot = 0
    for a in range(Mk):
        for b in range(Md):
            tot += eval_S(n2, (Fraction(a, Mk), Fraction(b, Md)), X)
    assert tot / (Mk * Md) == pytest.approx(1, abs=1e-9)


def test_phi_examples():
    assert eval_phi(6, 6, (0, 2), Fraction(1, 3)) == pytest.approx(3)
    assert eval_phi(6, 6, (3, 2), Fraction(1, 3)) == 0
    assert eval_phi(5, 2, (-4, 7), 0) == pytest.approx(12)


def test_phi_closed_form_random():
    rng = random.Random(3)
    for _ in range(500):
        lo = rng.randint(-200, 200)
        hi = lo + rng.randint(-1, 300)
        lead, const = rng.randint(-50, 50), rng.randint(-50, 50)
        alpha = rng.random() if rng.random() < 0.7 else Fraction(rng.randint(0, 30), rng.randint(1, 30))
        m = max(0, hi - lo + 1)
        assert abs(eval_phi(lead, const, (lo, hi), alpha) - eval_phi_direct(lead, const, (lo, hi), alpha)) < 1e-9 * max(m, 1)


def test_weyl_single_examples():
    assert weyl_single_sum((1, 0), 0, 10, 3) == pytest.approx(2100)
    assert weyl_single_sum((1, 0), Fraction(1, 2), 4, 2) == pytest.approx(20)


def test_weyl_product_examples():
    assert weyl_product_sum(0, 2, 3) == pytest.approx(80)
    assert weyl_product_sum(Fraction(1, 2), 1, 3) == pytest.approx(4)


@pytest.mark.parametrize("X", range(1, 9))
def test_weyl_product_matches_naive(X):
    a = Fraction(3, 17)
    assert weyl_product_sum(a, X, 3) == pytest.approx(weyl_product_sum_naive(a, X, 3), rel=1e-12)


def test_diff_interval_is_domain():
    X = 5
    for w in itertools.product(range(-4, 5), repeat=2):
        lo, hi = diff_interval(w, X)
        dom = [x for x in range(-X, X + 1) if all(-X <= x + sum(e * v for e, v in zip(eps, w)) <= X for eps in itertools.product((0, 1), repeat=2))]
        assert (hi - lo + 1 if hi >= lo else 0) == len(dom)
        if dom:
            assert (lo, hi) == (dom[0], dom[-1])


def test_f_is_nested_difference_sum():
    alpha, X, k = Fraction(2, 7), 4, 3
    for w in [(1, 2), (-3, 1), (2, 2)]:
        lo, hi = diff_interval(w, X)
        direct = sum(cmath.exp(2j * math.pi * float(alpha) * forward_difference_value(k, w, x)) for x in range(lo, hi + 1))
        assert abs(eval_f(alpha, w, X, k) - direct) < 1e-9


def test_fg_zero_phase(n1):
    X = 3
    r = eval_f_g(n1, 0, X)
    H = r.H
    total = sum(max(0, 2 * X + 1 - abs(a) - abs(b)) for a in range(-H, H + 1) for b in range(-H, H + 1))
    assert r.g == pytest.approx(total)


def test_fg_matches_naive(n1):
    for box in ("all", "nonzero"):
        assert eval_f_g(n1, Fraction(1, 2), 1, box=box, H=1).g == pytest.approx(eval_f_g_naive(Fraction(1, 2), 1, 3, 1, box))
        assert eval_f_g(n1, 0.3183, 3, box=box).g == pytest.approx(eval_f_g_naive(0.3183, 3, 3, None, box), rel=1e-12)


def test_fg_split(n1):
    X = 4
    a = Fraction(5, 13)
    full = eval_f_g(n1, a, X, box="all", H=X)
    nz = eval_f_g(n1, a, X, box="nonzero", H=X)
    assert full.g <= nz.g + zero_set_size(X, 2) * (2 * X + 1) + 1e-9


def test_differencing_inequality(n2, n4):
    rng = random.Random(5)
    for sys in (n2, n4):
        for _ in range(5):
            a = (rng.random(), rng.random())
            chk = differencing_check(sys, a, 3)
            assert chk.holds, chk


def test_golden_weyl_slope():
    tab = weyl_diag(golden_fraction(), [50, 100, 200, 400])
    assert tab.slope <= 0.15
    assert all(r.ratio > 0 for r in tab.rows)


def test_minor_arc_diag(n2):
    tab = minor_arc_sup_diag(n2, Fraction(1), [10, 20], alpha_samples=30)
    assert all(np.isfinite(r.ratio) and r.ratio > 0 for r in tab.rows)
    assert all(r.alpha_k != 0 for r in tab.rows)
