"""Complex scalar backends.

Two backends share one interface:

* ``EXACT`` stores Gaussian rationals (``sympy`` ``QQ_I`` elements), so ranks,
  kernels and identity checks involve no rounding.
* ``FLOAT`` stores Python ``complex`` values and is used for residual checks of
  the differential-geometric identities.

Values from different backends never meet in one expression; conversion
refuses a float inside exact arithmetic and vice versa.
"""

import math
from fractions import Fraction
from numbers import Integral, Rational
from typing import Any

import numpy as np
from sympy.polys.domains import QQ, QQ_I

from twistorkit.errors import BackendError

GaussianRational = QQ_I.dtype


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class ExactBackend:
    """Gaussian rationals with arbitrary-precision real and imaginary parts."""

    name = "exact"
    dtype = object
    exact = True

    def __init__(self):
        self.zero = QQ_I(0, 0)
        self.one = QQ_I(1, 0)
        self.i = QQ_I(0, 1)

    def __repr__(self) -> str:
        return "ExactBackend()"

    def convert(self, value: Any):
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (bool, np.bool_)):
            raise BackendError(f"cannot use boolean {value!r} as a scalar")
        if isinstance(value, Integral):
            return QQ_I(int(value), 0)
        if isinstance(value, Rational):
            return QQ_I(QQ(int(value.numerator), int(value.denominator)), 0)
        if isinstance(value, QQ.dtype):
            return QQ_I(value, 0)
        if isinstance(value, str):
            return self.from_parts(value, 0)
        if isinstance(value, (float, complex, np.floating, np.complexfloating)):
            raise BackendError(
                f"floating value {value!r} used with the exact backend"
            )
        raise BackendError(f"cannot convert {value!r} to an exact scalar")

    def from_parts(self, re, im):
        return QQ_I(self._rational(re), self._rational(im))

    @staticmethod
    def _rational(part):
        if isinstance(part, QQ.dtype):
            return part
        if isinstance(part, (float, np.floating)):
            raise BackendError(f"floating part {part!r} used with the exact backend")
        try:
            frac = Fraction(part)
        except (TypeError, ValueError) as e:
            raise BackendError(f"not a rational number: {part!r}") from e
        return QQ(frac.numerator, frac.denominator)

    def parts(self, x) -> tuple[Fraction, Fraction]:
        x = self.convert(x)
        return _to_fraction(x.x), _to_fraction(x.y)

    def conj(self, x):
        return QQ_I(x.x, -x.y)

    def real(self, x):
        return QQ_I(x.x, 0)

    def imag(self, x):
        return QQ_I(x.y, 0)

    def abs2(self, x):
        return QQ_I(x.x * x.x + x.y * x.y, 0)

    def magnitude(self, x) -> float:
        return math.hypot(float(x.x), float(x.y))

    def to_complex(self, x) -> complex:
        return complex(float(x.x), float(x.y))

    def is_zero(self, x, tol: float = 0.0) -> bool:
        return not bool(x)

    def is_positive_real(self, x, tol: float = 0.0) -> bool:
        return not bool(x.y) and x.x > 0

    def sqrt_abs2(self, x):
        """|x| as an exact scalar, or None when it is irrational."""
        q = _to_fraction(x.x * x.x + x.y * x.y)
        num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
        if num * num != q.numerator or den * den != q.denominator:
            return None
        return QQ_I(QQ(num, den), 0)

    def encode_part(self, part: Fraction) -> str:
        return f"{part.numerator}/{part.denominator}"

    # arrays
    def array(self, values) -> np.ndarray:
        arr = np.array(values, dtype=object)
        flat = [self.convert(v) for v in arr.ravel()]
        out = np.empty(arr.shape, dtype=object)
        out.ravel()[:] = flat
        return out

    def zeros(self, shape) -> np.ndarray:
        out = np.empty(shape, dtype=object)
        out.ravel()[:] = [self.zero] * out.size
        return out

    def eye(self, n: int) -> np.ndarray:
        out = self.zeros((n, n))
        for k in range(n):
            out[k, k] = self.one
        return out

    def conj_array(self, arr: np.ndarray) -> np.ndarray:
        out = np.empty(arr.shape, dtype=object)
        out.ravel()[:] = [self.conj(v) for v in arr.ravel()]
        return out

    def max_abs(self, arr) -> float:
        arr = np.asarray(arr, dtype=object)
        return max((self.magnitude(v) for v in arr.ravel()), default=0.0)


class FloatBackend:
    """Double-precision complex numbers."""

    name = "float"
    dtype = np.complex128
    exact = False

    def __init__(self):
        self.zero = 0j
        self.one = 1 + 0j
        self.i = 1j

    def __repr__(self) -> str:
        return "FloatBackend()"

    def convert(self, value: Any) -> complex:
        if isinstance(value, GaussianRational):
            raise BackendError(f"exact value {value!r} used with the float backend")
        if isinstance(value, (bool, np.bool_)):
            raise BackendError(f"cannot use boolean {value!r} as a scalar")
        if isinstance(value, str):
            return complex(float(Fraction(value)))
        if isinstance(value, QQ.dtype):
            return complex(float(value))
        try:
            return complex(value)
        except (TypeError, ValueError) as e:
            raise BackendError(f"cannot convert {value!r} to a float scalar") from e

    def from_parts(self, re, im) -> complex:
        return complex(self._real(re), self._real(im))

    @staticmethod
    def _real(part) -> float:
        if isinstance(part, str):
            return float(Fraction(part))
        return float(part)

    def parts(self, x) -> tuple[float, float]:
        x = self.convert(x)
        return x.real, x.imag

    def conj(self, x):
        return complex(x).conjugate()

    def real(self, x):
        return complex(complex(x).real, 0.0)

    def imag(self, x):
        return complex(complex(x).imag, 0.0)

    def abs2(self, x):
        x = complex(x)
        return complex(x.real * x.real + x.imag * x.imag, 0.0)

    def magnitude(self, x) -> float:
        return abs(complex(x))

    def to_complex(self, x) -> complex:
        return complex(x)

    def is_zero(self, x, tol: float = 0.0) -> bool:
        return abs(complex(x)) <= tol

    def is_positive_real(self, x, tol: float = 0.0) -> bool:
        x = complex(x)
        return abs(x.imag) <= tol and x.real > tol

    def sqrt_abs2(self, x):
        return complex(abs(complex(x)), 0.0)

    def encode_part(self, part: float) -> float:
        return float(part)

    def array(self, values) -> np.ndarray:
        arr = np.array(values, dtype=object)
        return np.array(
            [self.convert(v) for v in arr.ravel()], dtype=np.complex128
        ).reshape(arr.shape)

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.complex128)

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=np.complex128)

    def conj_array(self, arr: np.ndarray) -> np.ndarray:
        return np.conj(np.asarray(arr, dtype=np.complex128))

    def max_abs(self, arr) -> float:
        arr = np.asarray(arr, dtype=np.complex128)
        return float(np.max(np.abs(arr))) if arr.size else 0.0


EXACT = ExactBackend()
FLOAT = FloatBackend()

Backend = ExactBackend | FloatBackend


def get_backend(name: str) -> Backend:
    """Look up a backend by its configuration name."""
    if isinstance(name, (ExactBackend, FloatBackend)):
        return name
    key = str(name).strip().lower()
    if key == "exact":
        return EXACT
    if key == "float":
        return FLOAT
    raise BackendError(f"unknown backend {name!r} (expected 'exact' or 'float')")


def backend_of(value) -> Backend | None:
    """Backend a raw value belongs to, or None for neutral rationals."""
    if isinstance(value, GaussianRational):
        return EXACT
    if isinstance(value, (float, complex, np.floating, np.complexfloating)):
        return FLOAT
    return None


def same_backend(*backends: Backend) -> Backend:
    """Return the common backend, rejecting mixtures."""
    found = {b.name: b for b in backends if b is not None}
    if len(found) > 1:
        raise BackendError("mixing exact and float scalars in one expression")
    if not found:
        raise BackendError("no backend given")
    return next(iter(found.values()))


def format_scalar(x, backend: Backend) -> str:
    """Short text form such as "1/2", "-3i" or "2-1/3i"."""
    re, im = backend.parts(x)
    fmt = str if backend.exact else (lambda v: f"{v:g}")
    if not im:
        return fmt(re)
    imag = ("" if abs(im) == 1 else fmt(abs(im))) + "i"
    if not re:
        return ("-" if im < 0 else "") + imag
    return fmt(re) + ("-" if im < 0 else "+") + imag
