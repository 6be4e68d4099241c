import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wlab.cplx import (
    INF,
    Polynomial,
    RationalMap,
    apply_mobius_value,
    chordal,
    map_from_json,
    map_to_json,
    mobius,
    mobius_to_infinity,
    poly_from_json,
    poly_to_json,
    value_from_json,
    value_to_json,
)
from wlab.errors import ConstantMap, SingularMatrix

finite = st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False)
# coefficients on a quarter-integer lattice: well scaled, no subnormals
coeff = st.builds(lambda a, b: complex(a, b) / 4, st.integers(-8, 8), st.integers(-8, 8))
sphere = st.one_of(finite, st.just(INF))


def test_polynomial_coefficients_lowest_first():
    p = Polynomial((1, 2, 3))
    assert p.degree == 2
    assert p(2.0) == 1 + 4 + 12
    assert Polynomial((1, 2, 0, 0)).degree == 1
    assert Polynomial((0,)).is_zero


def test_polynomial_vectorised_eval():
    p = Polynomial.from_roots([1, -1])
    z = np.array([0, 1, 2, 1j])
    np.testing.assert_allclose(p(z), z**2 - 1)


def test_factor_recovers_multiplicities():
    p = Polynomial.from_roots([2, 2, 2, -1j, 0.5, 0.5])
    got = sorted(p.factor(), key=lambda t: (t[0].real, t[0].imag))
    assert [k for _, k in got] == [1, 2, 3]
    for (r, _), want in zip(got, [-1j, 0.5, 2]):
        assert abs(r - want) < 1e-6


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(1, 3)), min_size=1, max_size=3,
                unique_by=lambda t: (t[0], t[1])))
def test_factor_property(layout):
    roots = {complex(a, b) * 0.5: k for a, b, k in layout}
    p = Polynomial.from_roots([r for r, k in roots.items() for _ in range(k)])
    fac = p.factor()
    assert sum(k for _, k in fac) == p.degree
    for r, k in fac:
        match = min(roots, key=lambda s: abs(s - r))
        assert roots[match] == k
        assert abs(match - r) < 1e-5


def test_order_at_and_deflate():
    p = Polynomial.from_roots([1, 1, 3])
    assert p.order_at(1) == 2
    assert p.order_at(3) == 1
    assert p.order_at(0) == 0
    q = p.deflate(1, 2)
    assert q.degree == 1 and abs(q(3)) < 1e-12


def test_rational_map_reduces_common_factors():
    f = RationalMap(Polynomial.from_roots([1, 1, 3]), Polynomial.from_roots([1, 2, 2]))
    assert f.num.degree == 2 and f.den.degree == 2
    assert abs(f.den.lead - 1) < 1e-12
    assert [k for _, k in f.poles()] == [2]
    assert f.order_at(1) == 1


def test_rational_eval_on_sphere():
    f = RationalMap.from_coeffs([1], [0, 1])  # 1/z
    assert f.eval(0) is INF
    assert f.eval(INF) == 0
    assert RationalMap.identity().eval(INF) is INF
    g = RationalMap.from_coeffs([1, 2], [3, 4])
    assert abs(g.eval(INF) - 0.5) < 1e-15
    assert np.isinf(f(np.array([0.0]))[0].real)


def test_order_at_infinity():
    f = RationalMap.from_coeffs([0, 0, 1], [1, 1])  # z²/(1+z)
    assert f.order_at(INF) == -1
    assert RationalMap.from_coeffs([1], [0, 0, 1]).order_at(INF) == 2


@pytest.mark.parametrize(
    "f, df",
    [
        (RationalMap.from_coeffs([1], [0, 1]), lambda z: -1 / z**2),
        (RationalMap.from_coeffs([0, 1], [-1, 1]), lambda z: -1 / (z - 1) ** 2),
        (RationalMap.from_coeffs([1], [0, 0, 1]), lambda z: -2 / z**3),
    ],
)
def test_derivative(f, df):
    z = np.array([0.3 + 0.7j, -1.2 + 0.1j, 2.0])
    np.testing.assert_allclose(f.derivative()(z), df(z), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(coeff, min_size=1, max_size=3), st.lists(coeff, min_size=1, max_size=3), coeff)
def test_derivative_matches_difference_quotient(num, den, z0):
    if not any(den):
        return
    f = RationalMap.from_coeffs(num, den)
    if f.num.is_zero:
        return
    if abs(f.den(z0)) < 1e-3 * max(1.0, f.den._abs_scale(z0, 0)):
        return
    h = 1e-6 * (1 + abs(z0))
    fd = (f(z0 + h) - f(z0 - h)) / (2 * h)
    d = f.derivative()(z0)
    assert abs(d - fd) <= 1e-4 * (1 + abs(d))


def test_preimages_with_multiplicity():
    sq = RationalMap.from_coeffs([0, 0, 1])
    pts = sorted(sq.preimages(1), key=lambda t: t[0].real)
    assert [k for _, k in pts] == [1, 1]
    assert abs(pts[0][0] + 1) < 1e-12
    assert sq.preimages(0) == [(0j, 2)] or sq.preimages(0)[0][1] == 2
    assert RationalMap.identity().preimages(INF) == [(INF, 1)]
    with pytest.raises(ConstantMap):
        RationalMap.constant(3).preimages(1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-2, 2), min_size=2, max_size=4), st.lists(st.integers(-2, 2), min_size=1, max_size=3),
       finite)
def test_preimage_count_equals_degree(num, den, v):
    try:
        f = RationalMap.from_coeffs(num, den)
    except ZeroDivisionError:
        return
    if f.is_constant:
        return
    total = sum(k for _, k in f.preimages(complex(v)))
    assert total == f.degree


def test_chordal_values():
    assert chordal(0, INF) == pytest.approx(1.0)
    assert chordal(INF, INF) == 0.0
    assert chordal(1, INF) == pytest.approx(1 / math.sqrt(2))
    assert chordal(0, 1) == pytest.approx(1 / math.sqrt(2))
    assert chordal(1, -1) == pytest.approx(1.0)


@settings(max_examples=80, deadline=None)
@given(sphere, sphere, sphere)
def test_chordal_is_a_metric(a, b, c):
    ab, bc, ac = chordal(a, b), chordal(b, c), chordal(a, c)
    assert 0 <= ab <= 1 + 1e-12
    assert ab == pytest.approx(chordal(b, a), abs=1e-12)
    assert ac <= ab + bc + 1e-9


def test_mobius():
    f = RationalMap.identity()
    M = mobius_to_infinity(2 + 1j)
    h = mobius(f, M)
    assert h.eval(2 + 1j) is INF
    assert apply_mobius_value(M, 2 + 1j) is INF
    with pytest.raises(SingularMatrix):
        mobius(f, [[1, 2], [2, 4]])


def test_compose_affine():
    f = RationalMap.from_coeffs([1, 0, 1], [0, 1])
    g = f.compose_affine(2, 1)
    z = 0.3 + 0.4j
    assert abs(g(z) - f(2 * z + 1)) < 1e-12


def test_rsub():
    f = 1 - RationalMap.identity()
    assert abs(f(0.25) - 0.75) < 1e-15


def test_json_round_trip():
    f = RationalMap.from_coeffs([1, 2j], [3, 0, 1])
    g = map_from_json(map_to_json(f))
    assert g.allclose(f)
    p = Polynomial((1, 1j))
    assert poly_from_json(poly_to_json(p)).coeffs == p.coeffs
    assert value_from_json(value_to_json(INF)) is INF
    assert value_from_json(value_to_json(1 + 2j)) == 1 + 2j
    assert map_from_json([[0, 0], [1, 0]]).allclose(RationalMap.identity())
