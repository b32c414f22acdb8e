from fractions import Fraction

import pytest

from circlelab.arcs import (
    MEMBER,
    MINOR,
    OUTSIDE,
    ArcParams,
    TorusPoint,
    best_rational_approx,
    classify_Ma,
    classify_Na,
    classify_Pa,
    major_arc_list,
    volume_Ma,
    volume_Na,
    volume_Pa,
)
from circlelab.exact import Scale, dist_to_int, mod1
from circlelab.expsums import golden_fraction

GOLD = golden_fraction()


def test_best_rational_examples():
    assert best_rational_approx(Fraction(1, 3), 10) == (1, 3, 0)
    assert best_rational_approx(Fraction(0), 17) == (0, 1, 0)
    a, q, err = best_rational_approx(GOLD, 6)
    assert q == 5
    assert float(err) == pytest.approx(0.0902, abs=1e-4)


@pytest.mark.parametrize("Q", [1, 2, 6, 50, 333])
def test_best_rational_is_optimal(Q):
    alpha = Fraction(355, 113) + Fraction(1, 10**9)
    _, q, err = best_rational_approx(alpha, Q)
    assert err == min(dist_to_int(alpha * t) for t in range(1, Q + 1))
    assert err == dist_to_int(alpha * q)


def test_torus_point_reduces():
    p = TorusPoint(Fraction(5, 2), Fraction(-1, 3))
    assert (p.alpha_k, p.alpha_d) == (Fraction(1, 2), Fraction(2, 3))


def test_classify_Ma_examples():
    d = classify_Ma(0, Fraction(1, 2), 100, 3)
    assert d.status == MEMBER and d.witness.q == 1
    d = classify_Ma(Fraction(1, 2), Fraction(1, 2), 100, 3)
    assert d and d.witness.q == 2 and d.witness.gamma_k == 0
    assert classify_Ma(GOLD, Fraction(2, 5), 100, 3).status == MINOR


def test_classify_Na_examples():
    params = ArcParams.build(Fraction(1, 2), Fraction(1, 2), 2)
    d = classify_Na((0, 0), params, 100, 3)
    assert d and (d.witness.q, d.witness.r) == (1, 1)
    d = classify_Na((Fraction(1, 3), Fraction(1, 5)), params, 100, 3)
    assert d and d.witness.q == 3 and d.witness.r == 5
    p2 = ArcParams.build(Fraction(2, 5), Fraction(1, 2), 2)
    for ad in (Fraction(0), Fraction(1, 2), Fraction(1, 7)):
        assert classify_Na((GOLD, ad), p2, 100, 3).status == MINOR


def test_classify_Pa_examples():
    d = classify_Pa((0, 0), Fraction(1, 4), 1, 100, 3)
    assert d and d.witness.s == 1 and d.witness.gamma_k == 0 and d.witness.gamma_d == 0
    d = classify_Pa((Fraction(1, 2) + Fraction(1, 100), 0), Fraction(1, 10), 1, 100, 3)
    assert d.status == OUTSIDE


def test_Na_members_are_Pa_members():
    params = ArcParams.build(Fraction(1, 2), Fraction(1, 2), 2)
    X, k = 100, 3
    hits = 0
    for num in range(0, 40):
        for den in (3, 5, 7, 15):
            pt = (Fraction(num % den, den) + Fraction(1, 10**7), Fraction(num, 7 * den))
            nd = classify_Na(pt, params, X, k)
            if nd:
                hits += 1
                pd = classify_Pa(pt, params.omega, params.c_prime, X, k)
                assert pd, pt
    assert hits > 10


def test_witness_invariants():
    theta, X, k = Fraction(1, 2), 100, 3
    for a in range(1, 30):
        alpha = Fraction(a, 29) + Fraction(1, 10**6)
        d = classify_Ma(alpha, theta, X, k)
        if d:
            w = d.witness
            assert w.q <= 10
            assert abs(mod1(alpha) - Fraction(w.a_k, w.q)) == abs(w.gamma_k)
            assert Scale(X, theta - k).mpf() >= float(abs(w.gamma_k) * w.q)


def test_arc_list():
    arcs, scale = major_arc_list(Fraction(1, 2), 10, 3)
    centers = [c for c, _ in arcs]
    assert centers[:4] == [0, Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)]
    assert len(centers) == 5  # 0, 1/3, 1/2, 2/3, 1


@pytest.mark.parametrize("X", [10, 100])
@pytest.mark.parametrize("theta", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
def test_volume_Ma_disjoint_and_bounded(X, theta):
    v = volume_Ma(theta, X, 3)
    assert v.disjoint and v.bound_ok
    assert v.volume + v.minor_volume == 1


def test_volume_single_arc():
    v = volume_Ma(Fraction(1, 10), 100, 3)
    assert v.volume.u == 0 and v.volume.v == 2
    assert v.volume.scale.e == Fraction(1, 10) - 3


def test_volume_monotone():
    assert volume_Ma(Fraction(1, 2), 10, 3).volume.mpf() <= volume_Ma(Fraction(1), 10, 3).volume.mpf()


def test_volume_Na_single_rectangle():
    theta, eta, X = Fraction(1, 10), Fraction(1, 10), 100
    params = ArcParams.build(theta, eta, 2)
    res = volume_Na(params, X, 3)
    expected = 2 * X ** float(theta - 3) * 2 * X ** float(-2 + eta + theta)
    assert res.coeffs == {(1, 1): 4}  # one rectangle, exact product of side lengths
    assert float(res) == pytest.approx(expected, rel=1e-12)


def test_volume_Na_sweep_and_inclusion():
    params = ArcParams.build(Fraction(1, 4), Fraction(1, 4), 2)
    na = volume_Na(params, 16, 3)
    pa = volume_Pa(params.omega, params.c_prime, 16, 3)
    assert na.coeffs == {(1, 1): 10}
    assert float(na) <= float(pa)


def test_linked_mode():
    with pytest.raises(ValueError):
        ArcParams.build(Fraction(1, 2), Fraction(1, 2), 2, kappa=Fraction(1), n=21, linked=True)
    p = ArcParams.build(Fraction(12, 19), Fraction(7, 19), 2, kappa=9, n=21, linked=True)
    assert p.omega == 1
