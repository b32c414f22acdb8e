import json
from fractions import Fraction

import pytest

from circlelab.certifier import (
    ExponentCertificate,
    InfeasibleError,
    build_theta_sequence,
    certify,
    derive_params,
    feasible_kappa,
    max_theta_step,
    min_feasible_n,
    prior_bounds,
    theta_star_bound,
    threshold_n0,
)


def test_thresholds():
    assert [threshold_n0(k) for k in (3, 4, 5)] == [20, 56, 144]


def test_prior_bounds():
    pb = prior_bounds(3)
    assert (pb.bhb, pb.bp_consecutive, pb.bdhb) == (36, 24, 28)
    assert prior_bounds(4).bp_consecutive == 64
    for k in range(3, 11):
        assert threshold_n0(k) < prior_bounds(k).bp_consecutive


def test_feasible_kappa_examples():
    iv = feasible_kappa(3, 21)
    assert (iv.lo, iv.hi) == (Fraction(42, 5), Fraction(21, 2))
    empty = feasible_kappa(3, 20)
    assert empty.empty
    text = empty.describe()
    assert "kappa > 10" in text and "kappa < 10" in text
    assert Fraction(7) in feasible_kappa(3, 24)


def test_min_feasible_n():
    for k in range(3, 9):
        assert min_feasible_n(k) == threshold_n0(k) + 1 == 2 ** (k - 1) * (2 * k - 1) + 1


def test_derive_params():
    dp = derive_params(3, 21, 9)
    assert (dp.theta_max, dp.eta_max, dp.omega) == (Fraction(12, 19), Fraction(7, 19), 1)
    assert 9 * dp.eta_max == 21 * dp.theta_max / 4
    assert dp.eta_max <= 1 - dp.theta_max
    assert all(c.ok for c in dp.checks)


def test_derive_params_rejects_infeasible_kappa():
    with pytest.raises(InfeasibleError):
        derive_params(3, 21, 11)


def test_theta_sequence():
    seq = build_theta_sequence(3, 21, 9, Fraction(12, 19))
    assert seq[0] == 1 and seq[-1] == Fraction(12, 19)
    assert all(a > b for a, b in zip(seq, seq[1:]))
    step_max = max_theta_step(3, 21, Fraction(12, 19))
    assert step_max == Fraction(1, 38)
    # the step must be strictly below the maximum, so 14 steps of 1/38 are not enough
    assert all(a - b < step_max for a, b in zip(seq, seq[1:]))
    assert len(seq) - 1 == 15


def test_theta_star_boundary():
    assert theta_star_bound(3, 21) == Fraction(8, 13)
    with pytest.raises(InfeasibleError):
        build_theta_sequence(3, 21, 9, Fraction(8, 13))


def test_certificate_roundtrip():
    cert = certify(3)
    assert cert.ok and cert.n == 21
    data = json.loads(cert.to_json())
    assert data["kappa_interval"] == ["42/5", "21/2"]
    again = ExponentCertificate.from_dict(data)
    assert again.reverify()
    assert again.theta_sequence == cert.theta_sequence


@pytest.mark.parametrize("k", range(3, 9))
def test_certify_all_k(k):
    assert certify(k).ok
    with pytest.raises(InfeasibleError):
        certify(k, threshold_n0(k))
