import itertools
import random

import numpy as np
import pytest

from circlelab.forms import (
    FormSpecError,
    difference_polynomial,
    eval_form,
    eval_points,
    forward_difference_value,
    jacobian_rank_mod_p,
    make_system,
    parse_system,
    system_from_dict,
)

N2_TEXT = '{"n": 2, "k": 3, "diag": [1, 1], "g_monomials": [{"exps": [2, 0], "coef": 1}, {"exps": [0, 2], "coef": 1}]}'


def test_parse_transcribes_forms():
    s = parse_system(N2_TEXT)
    assert (s.n, s.k, s.d) == (2, 3, 2)
    for x in itertools.product(range(-3, 4), repeat=2):
        assert s.F(x) == x[0] ** 3 + x[1] ** 3
        assert s.G(x) == x[0] ** 2 + x[1] ** 2


def test_zero_diagonal_rejected():
    with pytest.raises(FormSpecError, match="zero diagonal coefficient"):
        parse_system(N2_TEXT.replace("[1, 1]", "[1, 0]"))


def test_inhomogeneous_g_rejected():
    bad = N2_TEXT.replace('[2, 0], "coef"', '[3, 0], "coef"')
    with pytest.raises(FormSpecError, match="not homogeneous"):
        parse_system(bad)


def test_parse_error_names_field():
    with pytest.raises(FormSpecError) as exc:
        system_from_dict({"n": 2, "k": 3, "diag": [1], "g_monomials": []})
    assert exc.value.field is not None


def test_malformed_json():
    with pytest.raises(FormSpecError):
        parse_system("{not json")


def test_roundtrip_dict(n4):
    assert system_from_dict(n4.to_dict()) == n4


def test_eval_form_examples(n2):
    assert eval_form(n2, "F", (1, 2)) == 9
    assert eval_form(n2, "G", (3, 4), modulus=5) == 0
    s = make_system([1, -1], {(2, 0): 1, (0, 2): -1})
    assert eval_form(s, "F", (10**6, 0)) == 10**18


def test_eval_points_matches_scalar(n4):
    rng = random.Random(1)
    pts = np.array([[rng.randint(-50, 50) for _ in range(4)] for _ in range(200)])
    f, g = eval_points(n4, pts)
    for row, fv, gv in zip(pts, f, g):
        assert int(fv) == n4.F(row.tolist())
        assert int(gv) == n4.G(row.tolist())
    fm, gm = eval_points(n4, pts, modulus=7)
    assert np.array_equal(np.asarray(fm) % 7, np.asarray(f) % 7)
    assert np.array_equal(np.asarray(gm) % 7, np.asarray(g) % 7)


def test_g_blocks(n4, n2):
    assert sorted(n4.g_blocks()) == [(0, 1), (2, 3)]
    assert sorted(n2.g_blocks()) == [(0,), (1,)]


@pytest.mark.parametrize(
    "k,w,product,lead,const",
    [(3, (1, 1), 1, 6, 6), (3, (2, 3), 6, 6, 15)],
)
def test_difference_polynomial_examples(k, w, product, lead, const):
    p = difference_polynomial(k, w)
    assert (p.product, p.lead, p.const) == (product, lead, const)


def test_difference_polynomial_zero_factor():
    p = difference_polynomial(4, (1, 0, 1))
    assert p.product == 0 and p.is_zero
    assert all(p(x) == 0 for x in range(-5, 6))


def test_difference_polynomial_matches_nested_differences():
    rng = random.Random(7)
    for _ in range(50):
        k = rng.randint(2, 6)
        w = [rng.randint(-6, 6) for _ in range(k - 1)]
        x = rng.randint(-30, 30)
        assert difference_polynomial(k, w)(x) == forward_difference_value(k, w, x)


def test_jacobian_rank_examples(n2):
    assert jacobian_rank_mod_p(n2, (1, 1), 5) == 1
    assert jacobian_rank_mod_p(n2, (0, 0), 5) == 0
    s = make_system([1, 1], {(2, 0): 1, (0, 2): -1})
    assert jacobian_rank_mod_p(s, (1, 1), 7) == 2
