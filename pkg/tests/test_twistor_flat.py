from unittest.mock import patch

import pytest

from twistorkit.errors import NotConstant
from twistorkit.linalg import det, is_zero_matrix
from twistorkit.scalars import EXACT, FLOAT
from twistorkit.twistor_flat import (
    CHARTS,
    TwistorPoint,
    check_battery,
    deterministic_zetas,
    fiber_jacobian,
    hk_invariant_residuals,
    intertwine_residual,
    omega_at,
    phi_forward,
    phi_inverse,
    quaternionic_from_tau,
    real_section_from_point,
    restrict_omega,
    standard_flat,
    structure_at,
    tau_apply,
    type_20_residual,
)


@pytest.fixture
def hk():
    return standard_flat(1, EXACT)


def test_standard_structures_are_hyperkaehler(hk):
    """Tests the quaternion relations of the standard flat structures."""
    assert all(v == 0 for v in hk_invariant_residuals(hk).values())
    assert all(v == 0 for v in hk_invariant_residuals(standard_flat(2, EXACT)).values())


@pytest.mark.parametrize("zeta, name", [((0, 0), "I"), ((1, 0), "J"), ((0, 1), "K")])
def test_structure_at_special_points(hk, zeta, name):
    """Tests that zeta = 0, 1 and i give I, J and K."""
    S = structure_at(hk, "U0", EXACT.from_parts(*zeta))
    assert is_zero_matrix(S - getattr(hk, name), EXACT)


def test_structure_at_infinity_is_minus_i(hk):
    """Tests the structure over the point at infinity."""
    assert is_zero_matrix(structure_at(hk, "U1", 0) + hk.I, EXACT)


def test_omega_at_zero(hk):
    """Tests the fiber form over zeta = 0."""
    W = omega_at(hk, "U0", 0)
    assert W[0, 1] == EXACT.convert(-1)
    assert W[1, 0] == EXACT.one


def test_omega_chart_law(hk):
    """Tests the O(2) transition law of the fiber form."""
    for z in deterministic_zetas(12)[1:]:
        lhs = omega_at(hk, "U0", z)
        rhs = omega_at(hk, "U1", EXACT.one / z) * (z * z)
        assert is_zero_matrix(lhs - rhs, EXACT)


def test_phi_forward_value(gaussian):
    """Tests one value of the chart map into the total space."""
    out = phi_forward(1, TwistorPoint("U0", 1, [1, 0]))
    assert list(out.fiber) == [gaussian("1/2", 0), gaussian(0, "-1/2")]


@pytest.mark.parametrize("chart", CHARTS)
def test_phi_round_trip(chart, rng):
    """Tests that the chart map and its inverse round trip."""
    for _ in range(5):
        pt = TwistorPoint(chart, rng.scalar(EXACT, 3), rng.vector(EXACT, 4, 3))
        back = phi_inverse(2, phi_forward(2, pt))
        assert is_zero_matrix(back.fiber - pt.fiber, EXACT)


@pytest.mark.parametrize("chart", CHARTS)
def test_jacobian_intertwines_structures(hk, chart):
    """Tests that the fiber Jacobian intertwines the complex structures."""
    for z in deterministic_zetas(12):
        assert intertwine_residual(hk, z, chart) == 0


def test_jacobian_determinant():
    """Tests the fiber Jacobian determinant at zeta = 1."""
    assert det(fiber_jacobian(1, "U0", 1), EXACT) == EXACT.from_parts("1/4", 0)


def test_tau_value(gaussian):
    """Tests tau on a point over zeta = 0."""
    image = tau_apply(TwistorPoint("U0", 0, [1, 0]))
    assert image.chart == "U1"
    assert image.zeta == EXACT.zero
    assert list(image.fiber) == [EXACT.zero, gaussian(0, 1)]


def test_tau_is_an_involution(rng):
    """Tests tau o tau = id on both charts."""
    for chart in CHARTS:
        pt = TwistorPoint(chart, rng.scalar(EXACT), rng.vector(EXACT, 2))
        twice = tau_apply(tau_apply(pt))
        assert twice.chart == chart
        assert twice.zeta == pt.zeta
        assert is_zero_matrix(twice.fiber - pt.fiber, EXACT)


def test_tau_matrix():
    """Tests the quaternionic matrix of tau."""
    Q = quaternionic_from_tau(1)
    i = EXACT.i
    assert is_zero_matrix(Q.A - EXACT.array([[0, -i], [i, 0]]), EXACT)


def test_real_section_through_a_point(gaussian):
    """Tests the coefficients of the real section through (1, 0)."""
    s = real_section_from_point([1], [0])
    assert list(s.a) == [EXACT.one, EXACT.zero]
    assert list(s.b) == [EXACT.zero, gaussian(0, 1)]


def test_restricted_omega_is_the_standard_form(hk):
    """Tests the restricted fiber form of the flat model."""
    Omega = restrict_omega(hk)
    assert is_zero_matrix(Omega - EXACT.array([[0, -1], [1, 0]]), EXACT)


def test_restricted_omega_detects_variation(hk):
    """Tests that a fiber form varying with zeta is rejected."""
    with patch(
        "twistorkit.twistor_flat.omega_at",
        side_effect=lambda _hk, _chart, zeta: EXACT.eye(4) * (EXACT.one + zeta),
    ):
        with pytest.raises(NotConstant):
            restrict_omega(hk)


def test_unknown_chart():
    """Tests that only U0 and U1 are charts."""
    with pytest.raises(ValueError):
        TwistorPoint("U2", 0, [1, 0])


def test_exact_battery_passes():
    """Tests the flat check battery on the exact backend."""
    report = check_battery(1, EXACT, samples=6)
    assert report["passed"], report["failures"]
    assert set(report["residuals"]) >= {"type_20", "chart_law", "omega_constancy"}


def test_float_battery_passes():
    """Tests the flat check battery on the float backend."""
    report = check_battery(2, FLOAT, samples=12)
    assert report["passed"], report["failures"]
    assert report["backend"] == "float"


@pytest.mark.parametrize("chart", CHARTS)
def test_float_invariants_at_random_points(rng, chart):
    """Tests the float intertwining and type residuals at random zeta."""
    hk = standard_flat(1, FLOAT)
    zetas = [rng.scalar(FLOAT, bound=3) for _ in range(100)]
    assert max(intertwine_residual(hk, z, chart) for z in zetas) <= 1e-10
    assert max(type_20_residual(hk, chart, z) for z in zetas[:50]) <= 1e-10
