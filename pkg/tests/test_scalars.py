from fractions import Fraction

import pytest
from sympy.polys.domains import QQ_I

from twistorkit.errors import BackendError
from twistorkit.scalars import EXACT, FLOAT, format_scalar, get_backend, same_backend


def test_exact_convert_accepts_rationals():
    """Tests exact conversion of ints, fractions and rational text."""
    assert EXACT.convert(3) == QQ_I(3, 0)
    assert EXACT.convert(Fraction(1, 2)) == EXACT.from_parts("1/2", 0)
    assert EXACT.convert("3/4") == EXACT.from_parts(3, 0) / EXACT.convert(4)


def test_exact_rejects_floats_and_bools():
    """Tests that floats and bools are not exact scalars."""
    with pytest.raises(BackendError):
        EXACT.convert(0.5)
    with pytest.raises(BackendError):
        EXACT.convert(True)


def test_float_rejects_gaussian_rationals():
    """Tests that exact values do not enter the float backend."""
    with pytest.raises(BackendError):
        FLOAT.convert(QQ_I(1, 0))


def test_parts_and_conjugate(gaussian):
    """Tests parts, conjugate and squared modulus."""
    x = gaussian("1/2", -3)
    assert EXACT.parts(x) == (Fraction(1, 2), Fraction(-3))
    assert EXACT.conj(x) == gaussian("1/2", 3)
    assert EXACT.abs2(x) == gaussian("37/4", 0)


def test_sqrt_abs2_exact_or_none(gaussian):
    """Tests the exact modulus when it is rational."""
    assert EXACT.sqrt_abs2(gaussian(3, 4)) == EXACT.convert(5)
    assert EXACT.sqrt_abs2(gaussian(1, 1)) is None
    assert FLOAT.sqrt_abs2(3 + 4j) == 5


def test_is_zero_uses_truthiness(gaussian):
    """Tests exact and tolerance-based zero checks."""
    assert EXACT.is_zero(gaussian(0, 0))
    assert not EXACT.is_zero(gaussian(0, "1/1000"))
    assert FLOAT.is_zero(1e-13, 1e-12)


def test_get_backend():
    """Tests backend lookup by name."""
    assert get_backend("EXACT") is EXACT
    assert get_backend(" float ") is FLOAT
    with pytest.raises(BackendError):
        get_backend("quad")


def test_same_backend_rejects_mixtures():
    """Tests that mixed backends are rejected."""
    assert same_backend(EXACT, EXACT) is EXACT
    with pytest.raises(BackendError):
        same_backend(EXACT, FLOAT)


@pytest.mark.parametrize(
    "re, im, text",
    [(2, 0, "2"), (0, 1, "i"), (0, -2, "-2i"), ("1/2", -3, "1/2-3i"), (1, 1, "1+i")],
)
def test_format_scalar(re, im, text):
    """Tests the compact text form of exact scalars."""
    assert format_scalar(EXACT.from_parts(re, im), EXACT) == text


def test_arrays_keep_backend_types(gaussian):
    """Tests array dtypes and entry types per backend."""
    arr = EXACT.array([[1, "1/2"], [gaussian(0, 1), 0]])
    assert arr.dtype == object
    assert all(isinstance(v, type(QQ_I(0, 0))) for v in arr.ravel())
    assert EXACT.max_abs(arr) == 1.0
    assert FLOAT.array([1, 2j]).dtype.kind == "c"
