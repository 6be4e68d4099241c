import numpy as np
import pytest
from _data import CATENOID, ENNEPER, lattice, random_weierstrass
from hypothesis import given, settings
from hypothesis import strategies as st

from wlab.cplx import INF, RationalMap
from wlab.domain import PLANE, Domain
from wlab.errors import (
    DegenerateMetric,
    EtaOutOfRange,
    OutsideDomain,
    StencilOutsideDomain,
    WindowEmpty,
)
from wlab.metric import (
    WeierstrassData,
    auxiliary_curvature_numeric,
    auxiliary_metric_factor,
    auxiliary_params,
    compare_curvature,
    conformal_factor,
    eta_window,
    gauss_curvature,
    gauss_curvature_numeric,
    normalize_infinity,
)
from wlab.verify import make_voss


def enneper(m=2):
    return WeierstrassData(ENNEPER["g"], ENNEPER["omega"], m)


def test_enneper_closed_form():
    d = enneper()
    assert gauss_curvature(d, 0) == pytest.approx(-4.0, abs=1e-14)
    z = 0.3 - 0.8j
    assert gauss_curvature(d, z) == pytest.approx(-4 / (1 + abs(z) ** 2) ** 4, rel=1e-13)
    assert conformal_factor(d, z) == pytest.approx((1 + abs(z) ** 2) ** 2, rel=1e-14)


def test_catenoid_closed_form():
    d = WeierstrassData(CATENOID["g"], CATENOID["omega"], 2)
    assert d.domain.punctures == (0j,)
    z = 0.5 + 0.25j
    r2 = abs(z) ** 2
    want = -4 * r2**2 / (1 + r2) ** 4
    assert gauss_curvature(d, z) == pytest.approx(want, rel=1e-12)
    with pytest.raises(OutsideDomain):
        conformal_factor(d, 0)


def test_critical_point_has_zero_curvature():
    d = WeierstrassData(RationalMap.from_coeffs([0, 0, 1]), RationalMap.constant(1), 3)
    assert gauss_curvature(d, 0) == 0.0
    assert gauss_curvature(d, 0.5) < 0


def test_constant_g_is_flat():
    d = WeierstrassData(RationalMap.constant(2), RationalMap.constant(1), 2)
    K = d.curvature_array(lattice(1, 0.25))
    assert np.all(K == 0)


def test_pole_of_g_compensated_by_zero_of_omega():
    # g = 1/z with ω̂ = z^2: factor (|z|^2+1)^2, regular at 0
    d = WeierstrassData(RationalMap.from_coeffs([1], [0, 1]), RationalMap.from_coeffs([0, 0, 1]), 2)
    assert d.domain.punctures == ()
    assert conformal_factor(d, 0) == pytest.approx(1.0)
    assert np.isfinite(gauss_curvature(d, 0))


def test_validation():
    with pytest.raises(ValueError):
        enneper(m=-1)
    with pytest.raises(ValueError):
        enneper(m=1.5)
    assert WeierstrassData(ENNEPER["g"], ENNEPER["omega"], 1.5, allow_real_m=True).m == 1.5
    with pytest.raises(DegenerateMetric):
        WeierstrassData(ENNEPER["g"], RationalMap.constant(0), 2)
    # a pole of ω̂ inside an explicitly given domain
    with pytest.raises(DegenerateMetric):
        WeierstrassData(ENNEPER["g"], RationalMap.from_coeffs([1], [0, 1]), 2, Domain(PLANE, ()))
    assert enneper(m=0).flat_case


def test_numeric_oracle_single_point():
    d = enneper()
    z = 0.4 + 0.2j
    assert gauss_curvature_numeric(d, z) == pytest.approx(gauss_curvature(d, z), rel=1e-5)
    cat = WeierstrassData(CATENOID["g"], CATENOID["omega"], 2)
    with pytest.raises(StencilOutsideDomain):
        gauss_curvature_numeric(cat, 0)


def test_compare_curvature_admissibility():
    cat = WeierstrassData(CATENOID["g"], CATENOID["omega"], 2)
    cmp = compare_curvature(cat, np.array([0, 0.5, 1e-3j]))
    assert cmp.admissible.tolist() == [False, True, False]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_curvature_nonpositive_and_matches_oracle(seed):
    d = random_weierstrass(np.random.default_rng(seed))
    cmp = compare_curvature(d, lattice(1.5, 0.3))
    K = cmp.K[np.isfinite(cmp.K)]
    assert np.all(K <= 0)
    assert cmp.pass_fraction(1e-4) >= 0.9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=2), st.complex_numbers(min_magnitude=0.5,
                                                                                          max_magnitude=2))
def test_curvature_is_coordinate_invariant(seed, b, a):
    # pulling back by w -> a w + b leaves K unchanged at corresponding points
    d = random_weierstrass(np.random.default_rng(seed))
    pulled = WeierstrassData(d.g.compose_affine(a, b), d.omega_hat.compose_affine(a, b) * a, d.m)
    w = np.array([0.1 + 0.2j, -0.7 + 0.3j])
    K1 = pulled.curvature_array(w)
    K2 = d.curvature_array(a * w + b)
    ok = np.isfinite(K1) & np.isfinite(K2)
    np.testing.assert_allclose(K1[ok], K2[ok], rtol=1e-7, atol=1e-12)


# -- auxiliary metric -------------------------------------------------------


def test_eta_window_and_lambda_range():
    lo, hi = eta_window(1, 4)
    assert (lo, hi) == (0.0, 0.25)
    p = auxiliary_params(1, 4)
    assert p.eta == pytest.approx(0.125)
    assert p.lam == pytest.approx(1 / (4 - 2 - 0.5))
    for m in range(1, 5):
        for q in range(m + 3, m + 8):
            lam = auxiliary_params(m, q).lam
            assert 0.5 < lam < 1


def test_window_rejects_q_below_hypothesis():
    for m in range(1, 5):
        for q in range(2, m + 3):
            with pytest.raises(WindowEmpty):
                auxiliary_params(m, q)


def test_unenforced_window_reproduces_small_q_example():
    p = auxiliary_params(1, 3, enforce_hypothesis=False)
    assert p.lam == pytest.approx(2 / 3)


def test_eta_out_of_range():
    with pytest.raises(EtaOutOfRange):
        auxiliary_params(1, 4, eta=0.3)


def test_normalize_infinity():
    g, rest, M = normalize_infinity(RationalMap.identity(), [0, 1, 2])
    assert g.eval(2) is INF
    assert len(rest) == 2 and all(v is not INF for v in rest)
    g2, rest2, _ = normalize_infinity(RationalMap.identity(), [0, INF])
    assert rest2 == [0j] and g2.allclose(RationalMap.identity())


def test_auxiliary_metric_is_flat():
    pts = [0, 1, 1j]
    d = make_voss(1, 4, pts)
    p = auxiliary_params(1, 4, exceptional_values=pts)
    z = np.array([0.5 + 0.5j, -0.8 + 0.1j, 1.5 - 1j])
    assert np.max(np.abs(auxiliary_curvature_numeric(d, p, z))) < 1e-5
    assert np.max(np.abs(auxiliary_curvature_numeric(d, p, z, h=1e-10, dps=60))) < 1e-12
    assert auxiliary_metric_factor(d, p, 0.5 + 0.5j) > 0


def test_flatness_does_not_depend_on_eta():
    pts = [0, 1, 1j]
    d = make_voss(1, 4, pts)
    z = np.array([0.5 + 0.5j, -0.8 + 0.1j])
    lams = []
    for eta in (0.05, 0.2):
        p = auxiliary_params(1, 4, eta=eta, exceptional_values=pts)
        lams.append(p.lam)
        assert np.max(np.abs(auxiliary_curvature_numeric(d, p, z, h=1e-10, dps=60))) < 1e-12
    assert lams[0] != lams[1]
