"""Polynomials, rational functions and transfer-function matrices."""

import numpy as np
import pytest

from gridadmit.poly_tf import (DegreeCapError, PoleHitError, Polynomial, RationalFunction,
                               TFMatrix, det_roots, poly_roots, tf_add, tf_det, tf_eval)
from property_checks import multiset_distance

S = RationalFunction(Polynomial([0.0, 1.0]))
INV_S = RationalFunction([1.0], [0.0, 1.0])


@pytest.mark.parametrize("coeffs, expected", [
    ([1.0, 0.0, 1.0], [1j, -1j]),
    ([2.0, 1.0], [-2.0]),
    ((Polynomial([1, 1]) * Polynomial([5, 2, 1])).coeffs, [-1, -1 + 2j, -1 - 2j]),
])
def test_poly_roots_examples(coeffs, expected):
    r = poly_roots(Polynomial(coeffs))
    assert multiset_distance(r, expected) < 1e-12


def test_poly_roots_residual_small():
    rng = np.random.default_rng(1)
    p = Polynomial(rng.normal(size=9))
    for r in poly_roots(p):
        assert abs(p(r)) <= 1e-10 * np.linalg.norm(p.coeffs) * (1 + abs(r)) ** p.degree


def test_poly_roots_rejects_constant():
    with pytest.raises(ValueError, match="constant polynomial has no roots"):
        poly_roots(Polynomial([3.0]))


def test_complex_coefficients_supported():
    p = Polynomial.from_roots([1j, 2 - 1j])
    assert p.is_complex
    assert multiset_distance(poly_roots(p), [1j, 2 - 1j]) < 1e-12


def test_degree_cap():
    with pytest.raises(DegreeCapError):
        Polynomial(np.ones(10_000))


def test_polynomial_arithmetic_cancels_leading_term():
    p = Polynomial([1.0, 2.0, 3.0])
    assert (p - p).is_zero()
    assert (p * p).degree == 4


def test_tf_add_identity_and_diag():
    Y = TFMatrix([[INV_S, 1.0], [0.0, S]])
    same = tf_add(Y, TFMatrix.zeros(2, 2))
    s = np.array([0.3 + 2j, -1 + 5j])
    assert np.allclose(same.evaluate_many(s), Y.evaluate_many(s))
    D = TFMatrix([[INV_S, 0.0], [0.0, INV_S]])
    twice = tf_add(D, D)
    assert twice[0, 0].den == INV_S.den          # common denominator kept, not squared
    assert np.allclose(tf_eval(twice, 2j), np.diag([2 / 2j, 2 / 2j]))


def test_tf_add_dimension_mismatch():
    with pytest.raises(ValueError):
        tf_add(TFMatrix.identity(2), TFMatrix.identity(3))


def test_tf_det_examples():
    assert tf_det(TFMatrix.identity(2)).evaluate(1.7j) == pytest.approx(1.0)
    a = RationalFunction([1.0], [1.0, 1.0])
    b = RationalFunction([2.0, 1.0], [3.0, 0.0, 1.0])
    d = tf_det(TFMatrix([[a, 0.0], [0.0, b]]))
    for s in (0.5j, 2 + 1j):
        assert d.evaluate(s) == pytest.approx(a.evaluate(s) * b.evaluate(s))


def test_tf_det_not_square():
    with pytest.raises(ValueError):
        tf_det(TFMatrix([[1.0, 2.0]]))


def test_tf_eval_examples():
    assert tf_eval(TFMatrix([[INV_S]]), 1j)[0, 0] == pytest.approx(-1j)
    assert np.allclose(tf_eval(TFMatrix.identity(3), 4 - 2j), np.eye(3))


def test_tf_eval_pole_hit_names_entry():
    m = TFMatrix([[1.0, 0.0], [0.0, INV_S]])
    with pytest.raises(PoleHitError, match=r"entry \(1,1\).*s=0"):
        tf_eval(m, 0.0)


def test_simplify_is_explicit():
    f = RationalFunction(Polynomial.from_roots([-1.0, -2.0]), Polynomial.from_roots([-1.0, -3.0]))
    assert f.num.degree == 2                     # no implicit cancellation
    g = f.simplify()
    assert g.num.degree == 1 and g.den.degree == 1
    assert g.evaluate(1j) == pytest.approx(f.evaluate(1j))


def test_det_roots_keeps_rhp_pole_zero_information():
    # det of diag((s-1)/(s+2), 1/(s+3)) has a RHP zero at +1
    a = RationalFunction(Polynomial([-1.0, 1.0]), Polynomial([2.0, 1.0]))
    b = RationalFunction([1.0], [3.0, 1.0])
    r = det_roots(TFMatrix([[a, 0.0], [0.0, b]])).roots
    assert multiset_distance(r, [1.0]) < 1e-10


def test_det_roots_matches_tf_det_numerator():
    rng = np.random.default_rng(4)
    den = Polynomial.from_roots(-rng.uniform(1, 10, 3) + 0j)
    entries = [[RationalFunction(rng.normal(size=3), den) + (1.0 if i == j else 0.0)
                for j in range(2)] for i in range(2)]
    m = TFMatrix(entries)
    exact = tf_det(m).simplify()
    assert multiset_distance(det_roots(m).roots, exact.zeros()) < 1e-7
