import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wlab.cplx import RationalMap
from wlab.domain import PLANE, Domain
from wlab.errors import (
    ExactnessViolation,
    IdenticallyUnitModulus,
    IntegrationThroughPole,
    NotSimplyConnected,
    OutsideDomain,
    PeriodViolation,
    PoleEncountered,
)
from wlab.surfaces import (
    FrontData,
    ParamGrid,
    build,
    extract_singular_set,
    hausdorff,
    hausdorff_to_circle,
    hyperboloid,
)
from wlab.surfaces import integrate as itg
from wlab.surfaces.builders import transfer_matrices

Z = RationalMap.identity()
ONE = RationalMap.constant(1)
ZERO = RationalMap.constant(0)
INV = RationalMap.from_coeffs([1], [0, 1])
INV2 = RationalMap.from_coeffs([1], [0, 0, 1])


def small(fd, half=1.5, n=61):
    return ParamGrid.square(half, n, fd.base_point, punctures=fd.domain.punctures, exclusion=0.1)


# -- grids and integration ---------------------------------------------------


def test_param_grid_mask_and_faces():
    g = ParamGrid.square(1.0, 11, 0j, punctures=(0j,), exclusion=0.15)
    assert g.shape == (11, 11)
    assert not g.mask[5, 5] and g.mask[0, 0]
    assert g.contains_point(0.5j) and not g.contains_point(2 + 0j)
    assert g.points().size == g.mask.sum()
    f = g.faces()
    assert f.max() < g.points().size and f.shape[1] == 3
    order, pred = g.spanning_tree(0)
    assert len(order) == g.points().size


def test_segment_integrals_exact_for_polynomials():
    f = lambda z: np.stack([3 * z**2, np.exp(z)], axis=-1)  # noqa: E731
    a = np.array([0j, 1 + 1j])
    b = np.array([1 + 0j, -2j])
    got = itg.segment_integrals(f, a, b)
    np.testing.assert_allclose(got[:, 0], b**3 - a**3, rtol=1e-13)
    np.testing.assert_allclose(got[:, 1], np.exp(b) - np.exp(a), rtol=1e-13)


def test_segment_through_pole_raises():
    with pytest.raises(IntegrationThroughPole):
        itg.segment_integrals(lambda z: 1 / z[..., None], np.array([-1 + 0j]), np.array([1 + 0j]), poles=[0j])


def test_loop_integral_residue():
    val, length = itg.loop_integral(lambda z: np.stack([1 / z, 1 / z**2], axis=-1), 0j, 0.5)
    np.testing.assert_allclose(val, [2j * np.pi, 0], atol=1e-12)
    # ds-length uses the vector norm: |f| = sqrt(2^2 + 4^2) on the circle of radius 1/2
    assert length == pytest.approx(np.pi * np.sqrt(20))


# -- minimal ------------------------------------------------------------------


def enneper_closed(z):
    return np.stack([np.real(z - z**3 / 3), np.real(1j * (z + z**3 / 3)), np.real(z**2)], axis=1)


def test_enneper_matches_closed_form():
    fd = FrontData("minimal", {"g": Z, "omega": ONE})
    mesh = build(fd, small(fd))
    np.testing.assert_allclose(mesh.vertices, enneper_closed(mesh.params), atol=1e-12)
    r = mesh.report
    assert r["nullity_residual"] < 1e-12 and r["metric_identity_residual"] < 1e-12
    assert r["harmonicity_residual"] < 1e-3
    assert r["metric_fd_rel_error"] < 1e-2


def test_spanning_tree_choice_does_not_matter():
    fd = FrontData("minimal", {"g": Z, "omega": INV2}, base_point=1)
    grid = small(fd, 1.5, 41)
    a = build(fd, grid, "bfs").vertices
    b = build(fd, grid, "dfs").vertices
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_catenoid_periods_vanish():
    fd = FrontData("minimal", {"g": Z, "omega": INV2}, base_point=1)
    mesh = build(fd, small(fd))
    assert all(p["ok"] for p in mesh.report["periods"])
    # height 2 Re ∫ dz/z = 2 log|z| up to a constant
    shift = mesh.vertices[:, 2] - 2 * np.log(np.abs(mesh.params))
    np.testing.assert_allclose(shift, shift[0], atol=1e-9)


def test_period_violation():
    fd = FrontData("minimal", {"g": ZERO, "omega": INV}, base_point=1)
    with pytest.raises(PeriodViolation) as ei:
        build(fd, small(fd))
    assert ei.value.residuals


def test_front_data_validation():
    with pytest.raises(PoleEncountered):
        FrontData("minimal", {"g": Z, "omega": INV}, domain=Domain(PLANE, (1,)))
    with pytest.raises(OutsideDomain):
        FrontData("minimal", {"g": Z, "omega": INV}, base_point=0)
    with pytest.raises(ValueError):
        FrontData("minimal", {"g": Z})


# -- maxface ------------------------------------------------------------------


def test_maxface_enneper():
    fd = FrontData("maxface", {"g": Z, "omega": ONE})
    mesh = build(fd, small(fd, 1.5, 151))
    r = mesh.report
    assert r["nullity_residual"] < 1e-12
    assert r["lorentz_nullity_residual"] < 1e-12
    assert r["ds2_le_dsigma2"]
    assert hausdorff_to_circle(mesh.singular_polylines) < 1e-3
    assert np.all(mesh.scalars["conformal_factor"] <= mesh.scalars["dsigma2_factor"])


def test_maxface_unit_modulus_rejected():
    fd = FrontData("maxface", {"g": RationalMap.constant(1j), "omega": ONE})
    with pytest.raises(IdenticallyUnitModulus):
        build(fd, small(fd))


# -- affine -------------------------------------------------------------------


def test_affine_paraboloid():
    fd = FrontData("affine", {"F_prime": ZERO, "G_prime": ONE})
    mesh = build(fd, small(fd))
    z = mesh.params
    want = np.stack([z.real, z.imag, np.abs(z) ** 2 / 2], axis=1)
    np.testing.assert_allclose(mesh.vertices, want, atol=1e-12)
    assert mesh.singular_polylines == []
    assert mesh.report["nu_identically_zero"]
    assert mesh.companions["C2"].vertices.shape[1] == 4


def test_affine_singular_curve_separates_signs_of_h():
    fd = FrontData("affine", {"F_prime": Z, "G_prime": ONE})
    mesh = build(fd, small(fd, 1.5, 121))
    assert hausdorff_to_circle(mesh.singular_polylines) < 1e-3
    h = mesh.scalars["h"]
    r = np.abs(mesh.params)
    assert np.all(h[r < 0.95] > 0) and np.all(h[r > 1.05] < 0)


def test_affine_nonexact_rejected():
    # F′ = 1/z gives log z: not single valued
    fd = FrontData("affine", {"F_prime": INV, "G_prime": ONE}, base_point=1)
    with pytest.raises(ExactnessViolation):
        build(fd, small(fd))


def test_affine_constants_shift():
    fd = FrontData("affine", {"F_prime": ZERO, "G_prime": ONE}, constants={"G0": 1 + 0j})
    mesh = build(fd, small(fd, 1.0, 21))
    z = mesh.params
    np.testing.assert_allclose(mesh.vertices[:, 0], z.real + 1, atol=1e-12)


# -- flat fronts -----------------------------------------------------------------


def test_horosphere_closed_form():
    fd = FrontData("flat_front", {"omega": ONE, "theta": ZERO})
    mesh = build(fd, small(fd, 1.0, 41))
    z = mesh.params
    L = np.zeros((len(z), 2, 2), complex)
    L[:, 0, 0] = L[:, 1, 1] = 1
    L[:, 1, 0] = z
    np.testing.assert_allclose(mesh.lift, L, atol=1e-10)
    np.testing.assert_allclose(mesh.vertices, hyperboloid(L), atol=1e-9)
    x = mesh.vertices
    np.testing.assert_allclose(-x[:, 0] ** 2 + np.sum(x[:, 1:] ** 2, axis=1), -1, atol=1e-9)


def test_flat_front_total_degeneracy_flag():
    fd = FrontData("flat_front", {"omega": ONE, "theta": ONE})
    mesh = build(fd, small(fd, 0.5, 21))
    assert mesh.report["total_degeneracy"]
    assert mesh.singular_polylines == []


def test_flat_front_rho_z_singular_circle():
    fd = FrontData("flat_front", {"omega": ONE, "theta": Z})
    mesh = build(fd, small(fd, 1.5, 151))
    assert mesh.report["det_drift"] <= 1e-8
    assert hausdorff_to_circle(mesh.singular_polylines) < 1e-3


def test_flat_front_needs_simply_connected_rectangle():
    fd = FrontData("flat_front", {"omega": INV, "theta": ZERO}, base_point=1)
    with pytest.raises(NotSimplyConnected):
        build(fd, small(fd))


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_transfer_matrices_unimodular(c):
    om = RationalMap.from_coeffs([1 + 0.25 * c[0], 0.25 * c[1]])
    th = RationalMap.from_coeffs([0.25 * c[2], 0.25j * c[3]])
    a = np.array([0j, 0.5 + 0.5j])
    b = np.array([0.3 - 0.2j, -0.5 + 1j])
    T, _ = transfer_matrices(om, th, a, b)
    det = np.linalg.det(T)
    np.testing.assert_allclose(det, 1, atol=1e-10)


# -- singular sets ---------------------------------------------------------------


def test_extract_singular_set_circle_and_empty():
    x = np.linspace(-2, 2, 201)
    X, Y = np.meshgrid(x, x, indexing="ij")
    Zg = X + 1j * Y
    lines = extract_singular_set(Zg / 1.5, x, x)
    assert len(lines) == 1
    assert hausdorff_to_circle(lines, 0, 1.5) < 1e-3
    assert extract_singular_set(np.full(Zg.shape, 0.5 + 0j), x, x) == []
    assert extract_singular_set(np.ones(Zg.shape, complex), x, x) == []


def test_hausdorff_symmetric():
    a = np.array([0, 1 + 0j])
    b = np.array([0, 1 + 0.5j])
    assert hausdorff(a, b) == pytest.approx(hausdorff(b, a))
    assert hausdorff(a, a) == 0
