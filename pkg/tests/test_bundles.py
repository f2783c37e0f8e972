import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistorkit.bundles import (
    BundleCP1,
    GlobalSection,
    cohomology_summary,
    default_degree_bound,
    euler_characteristic,
    gauge_transform,
    h0,
    h1,
    is_section,
    line_sum,
    random_unimodular_gauge,
    section_residual_at,
    section_space,
    splitting_type,
    twist,
)
from twistorkit.errors import BackendError, NotInvertibleOnChart, NotUnitOnCStar
from twistorkit.laurent import LaurentMatrix, LaurentPoly
from twistorkit.rng import SplitMix64
from twistorkit.scalars import EXACT, FLOAT

Z = LaurentPoly.monomial
ZERO = LaurentPoly.zero()


def jump_bundle(t):
    return BundleCP1(LaurentMatrix([[Z(-1), LaurentPoly.constant(t)], [ZERO, Z(1)]]))


def test_line_sum_transition(o1_sum):
    """Tests the transition of O(1) + O(1)."""
    assert o1_sum.T == LaurentMatrix.monomial_diagonal([1, 1])
    assert o1_sum.rank == 2
    assert o1_sum.winding == 2


def test_non_unit_transition_rejected():
    """Tests that a transition with non-unit determinant is rejected."""
    with pytest.raises(NotUnitOnCStar):
        BundleCP1(LaurentMatrix([[Z(0), Z(1)], [Z(1), Z(0)]]))


def test_sections_of_o1_sum(o1_sum):
    """Tests the canonical section basis of O(1) + O(1)."""
    space = section_space(o1_sum)
    assert space.dimension == 4
    assert all(is_section(o1_sum, s) for s in space.basis)
    first = space.basis[0]
    assert first.p == (LaurentPoly.constant(1), ZERO)
    assert first.q == (Z(1), ZERO)
    third = space.basis[2]
    assert third.p == (Z(1), ZERO)
    assert third.q == (LaurentPoly.constant(1), ZERO)


@pytest.mark.parametrize("n, expected", [(3, 4), (0, 1), (-1, 0), (-2, 0)])
def test_h0_of_line_bundles(n, expected):
    """Tests h0 of single line bundles."""
    assert h0(line_sum([n])) == expected
    assert section_space(line_sum([n])).dimension == expected


def test_twist_shifts_degrees():
    """Tests that twisting shifts the transition degrees."""
    assert h0(line_sum([-2]), 3) == 2
    assert twist(line_sum([1, -1]), 2).T == LaurentMatrix.monomial_diagonal([3, 1])


def test_generous_policy_agrees():
    """Tests that the generous bound gives the same section space."""
    E = line_sum([2, -1, 0])
    assert default_degree_bound(E, "generous") > default_degree_bound(E)
    assert section_space(E, policy="generous").dimension == section_space(E).dimension


def test_h0_honours_the_degree_bound_policy():
    """h0 computes at the bound of the requested policy."""
    E = line_sum([2, -1, 0])
    assert h0(E, policy="generous") == h0(E) == 4
    assert h0(E, 1, policy="generous") == h0(twist(E, 1)) == 7
    with pytest.raises(ValueError):
        h0(E, policy="loose")


def test_splitting_of_line_sums():
    """Tests the splitting type of diagonal bundles."""
    assert splitting_type(line_sum([2, -1, 0])).degrees == (2, 0, -1)
    assert splitting_type(line_sum([-3])).degrees == (-3,)


def test_h1_and_euler_characteristic():
    """Tests h1 and h0 - h1 = deg + rank."""
    assert h1(line_sum([-3])) == 2
    assert h1(line_sum([-1])) == 0
    E = line_sum([1, -3])
    assert h0(E) - h1(E) == euler_characteristic(E) == 0


def test_cohomology_summary_of_o_minus_one():
    """Tests the cohomology summary of O(-1)."""
    assert cohomology_summary(line_sum([-1])) == {
        "h0": 0,
        "h1": 0,
        "splitting": [-1],
        "winding": -1,
    }


def test_jump_family_splitting():
    """Tests the splitting jump from (0, 0) to (1, -1) at t = 0."""
    assert splitting_type(jump_bundle(0)).degrees == (1, -1)
    assert splitting_type(jump_bundle(1)).degrees == (0, 0)
    assert h0(jump_bundle(0), -1) == 1
    assert h0(jump_bundle(EXACT.from_parts(0, 1)), -1) == 0


@pytest.mark.parametrize("seed", range(4))
def test_splitting_is_gauge_invariant(seed):
    """Tests splitting after a random gauge."""
    rng = SplitMix64(seed)
    degrees = [rng.randint(-3, 3) for _ in range(rng.randint(1, 3))]
    E = line_sum(degrees)
    P0, P1 = random_unimodular_gauge(E.rank, rng)
    assert splitting_type(gauge_transform(E, P0, P1)).degrees == tuple(sorted(degrees, reverse=True))


@pytest.mark.slow
def test_splitting_recovered_over_many_gauges():
    """Tests splitting recovery over many random gauges."""
    rng = SplitMix64(2024)
    for _ in range(100):
        degrees = [rng.randint(-4, 4) for _ in range(rng.randint(1, 3))]
        E = line_sum(degrees)
        for _ in range(20):
            P0, P1 = random_unimodular_gauge(E.rank, rng)
            F = gauge_transform(E, P0, P1)
            assert splitting_type(F).degrees == tuple(sorted(degrees, reverse=True))


def test_gauge_rejects_non_unimodular(o1_sum):
    """Tests that a gauge not invertible on its chart is rejected."""
    P0 = LaurentMatrix.monomial_diagonal([1, 0])
    with pytest.raises(NotInvertibleOnChart):
        gauge_transform(o1_sum, P0, LaurentMatrix.identity(2))


def test_section_residual_at_points(o1_sum):
    """Tests pointwise residuals of a section and a non-section."""
    s = section_space(o1_sum).basis[3]
    assert section_residual_at(o1_sum, s, EXACT.from_parts(2, -1)) == 0.0
    broken = GlobalSection((LaurentPoly.constant(1), ZERO), (ZERO, ZERO))
    assert not is_section(o1_sum, broken)
    assert section_residual_at(o1_sum, broken, 1) > 0


def test_float_transition_is_rejected():
    """Tests that exact-only operations refuse float data."""
    E = line_sum([1], backend=FLOAT)
    with pytest.raises(BackendError):
        section_space(E)
    with pytest.raises(BackendError):
        splitting_type(E)


degree_lists = st.lists(st.integers(-3, 3), min_size=1, max_size=3)


@settings(max_examples=15, deadline=None)
@given(degree_lists, st.integers(-3, 3), st.integers(0, 2**32))
def test_twist_shifts_splitting_type(degrees, m, seed):
    """The splitting type of E(m) is that of E shifted by m."""
    E = line_sum(degrees)
    P0, P1 = random_unimodular_gauge(E.rank, SplitMix64(seed))
    F = gauge_transform(E, P0, P1)
    assert splitting_type(twist(F, m)) == splitting_type(F).shifted(m)


@settings(max_examples=40, deadline=None)
@given(degree_lists)
def test_h0_of_random_line_sums(degrees):
    """h0 of a sum of line bundles is the sum of max(n + 1, 0)."""
    assert h0(line_sum(degrees)) == sum(max(n + 1, 0) for n in degrees)


@settings(max_examples=10, deadline=None)
@given(
    degree_lists,
    st.integers(0, 2**32),
    st.tuples(st.integers(-6, 6), st.integers(-6, 6)).filter(lambda t: t != (0, 0)),
)
def test_basis_sections_glue_at_random_points(degrees, seed, point):
    """Every basis section satisfies p(z) = T(z) q(1/z) at a random point of C*."""
    E = line_sum(degrees)
    P0, P1 = random_unimodular_gauge(E.rank, SplitMix64(seed))
    F = gauge_transform(E, P0, P1)
    z = EXACT.from_parts(point[0], point[1])
    for s in section_space(F).basis:
        assert section_residual_at(F, s, z) == 0.0
