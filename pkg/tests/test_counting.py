import itertools

import pytest
from hypothesis import given, settings, strategies as st

from circlelab.budget import BudgetExceeded
from circlelab.counting import count_mod, count_solutions, dft_count_oracle, factorize, lift_solutions
from circlelab.forms import make_system


def brute(sys, X):
    r = range(-X, X + 1)
    return sum(1 for x in itertools.product(r, repeat=sys.n) if sys.F(x) == 0 and sys.G(x) == 0)


def test_diagonal_example(diag_minus):
    for m in ("enumeration", "meet-in-middle"):
        assert count_solutions(diag_minus, 5, m).N == 11


def test_origin_only_at_zero(n4, n2):
    assert count_solutions(n4, 0).N == 1
    assert count_solutions(n2, 0, "enumeration").N == 1


def test_n4_example(n4):
    assert count_solutions(n4, 1, "enumeration").N == 15
    assert count_solutions(n4, 1).N == 15


def test_dft_examples(diag_minus, n1, n4):
    assert dft_count_oracle(diag_minus, 2).N == 5
    assert dft_count_oracle(n4, 0).N == 1
    assert dft_count_oracle(n1, 1).N == 1


def test_dft_residual_small(n4):
    r = dft_count_oracle(n4, 2)
    assert r.N == brute(n4, 2)
    assert r.residual < 1e-6


def test_count_budget(n4):
    with pytest.raises(BudgetExceeded):
        count_solutions(n4, 50, "enumeration", budget=1000)


coef = st.integers(-4, 4).filter(lambda v: v != 0)


@settings(max_examples=25, deadline=None)
@given(st.lists(coef, min_size=1, max_size=3), st.lists(coef, min_size=3, max_size=3), st.integers(0, 3))
def test_methods_agree_with_brute(diag, gco, X):
    n = len(diag)
    terms = {tuple(2 if j == i else 0 for j in range(n)): gco[i] for i in range(n)}
    if n >= 2:
        terms[tuple(1 if j < 2 else 0 for j in range(n))] = gco[-1]
    s = make_system(diag, terms)
    N = brute(s, X)
    assert count_solutions(s, X, "enumeration").N == N
    assert count_solutions(s, X, "meet-in-middle").N == N


def test_gamma_examples(n2):
    assert count_mod(n2, 1).gamma == 1
    assert count_mod(n2, 2).gamma == 2
    assert count_mod(n2, 3).gamma == 1


@pytest.mark.parametrize("q", [4, 6, 8, 9, 12, 25, 27, 30])
def test_gamma_methods_agree(n4, q):
    direct = count_mod(n4, q, "direct").gamma
    assert count_mod(n4, q, "crt").gamma == direct
    assert count_mod(n4, q, "auto").gamma == direct
    if len(factorize(q)) == 1:
        assert count_mod(n4, q, "lift").gamma == direct


def test_lift_levels_match_direct(n2):
    for h, sols in lift_solutions(n2, 2, 4):
        assert len(sols) == count_mod(n2, 2**h, "direct").gamma


def test_factorize():
    assert factorize(360) == [(2, 3), (3, 2), (5, 1)]
    assert factorize(1) == []
