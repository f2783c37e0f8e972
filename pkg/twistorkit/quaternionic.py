"""Real structures on the sum of 2n copies of O(1) and their matrix form.

A real structure compatible with the antipodal map is determined by one
constant matrix A with A conj(A) = -I. It induces

* the quaternionic structure j(x) = conj(A) conj(x) on C^2n,
* the real structure r(a, b) = (j(b), -j(a)) on sections zeta0 -> a + b zeta0.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from twistorkit.bundles import GlobalSection
from twistorkit.errors import (
    DimensionMismatch,
    NotQuaternionic,
    OddDimension,
    SingularP,
)
from twistorkit.laurent import LaurentPoly
from twistorkit.linalg import inv, max_abs_diff, rank, realify_columns
from twistorkit.scalars import EXACT, Backend, backend_of


QUATERNIONIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SectionAB:
    """The section zeta0 -> a + b zeta0 of the sum of 2n copies of O(1)."""

    a: np.ndarray
    b: np.ndarray
    backend: Backend = EXACT

    def __post_init__(self):
        a = self.backend.array(self.a)
        b = self.backend.array(self.b)
        if a.shape != b.shape or a.ndim != 1:
            raise DimensionMismatch("a and b must be vectors of equal length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 2

    @classmethod
    def zero(cls, dim: int, backend: Backend = EXACT) -> "SectionAB":
        return cls(backend.zeros(dim), backend.zeros(dim), backend)

    def equals(self, other: "SectionAB", tol: float = 0.0) -> bool:
        b = self.backend
        if self.dim != other.dim:
            return False
        if b.exact:
            return all(x == y for x, y in zip(self.a, other.a)) and all(
                x == y for x, y in zip(self.b, other.b)
            )
        return max_abs_diff(self.a, other.a, b) <= tol and max_abs_diff(self.b, other.b, b) <= tol

    def __add__(self, other: "SectionAB") -> "SectionAB":
        return SectionAB(self.a + other.a, self.b + other.b, self.backend)

    def to_global_section(self) -> GlobalSection:
        """p(zeta0) = a + b zeta0, q(zeta1) = a zeta1 + b."""
        bk = self.backend
        p = tuple(LaurentPoly({0: x, 1: y}, bk) for x, y in zip(self.a, self.b))
        q = tuple(LaurentPoly({1: x, 0: y}, bk) for x, y in zip(self.a, self.b))
        return GlobalSection(p, q)

    @classmethod
    def from_global_section(cls, s: GlobalSection, backend: Backend = EXACT) -> "SectionAB":
        for c in s.p:
            if not c.is_zero() and (c.lo < 0 or c.hi > 1):
                raise DimensionMismatch("section is not of the form a + b zeta0")
        return cls([c.coeff(0) for c in s.p], [c.coeff(1) for c in s.p], backend)


@dataclass(frozen=True, eq=False)
class QuaternionicData:
    """Validated matrix A with A conj(A) = -I."""

    A: np.ndarray
    backend: Backend = EXACT

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 2

    @property
    def A_bar(self) -> np.ndarray:
        return self.backend.conj_array(self.A)


def _infer_backend(matrix) -> Backend:
    for v in np.asarray(matrix, dtype=object).ravel():
        found = backend_of(v)
        if found is not None:
            return found
    return EXACT


def check_quaternionic(
    A, backend: Backend | None = None, tol: float = QUATERNIONIC_TOL
) -> QuaternionicData:
    """Validate A * conj(A) = -I.

    Args:
        A: Square matrix of even size.
        backend (Backend | None): Scalar backend; inferred from the entries
            when omitted.
        tol (float): Frobenius tolerance on the float backend.

    Returns:
        QuaternionicData: The validated wrapper.

    Raises:
        OddDimension: If A is square of odd size.
        NotQuaternionic: If A conj(A) differs from -I.
    """
    backend = backend or _infer_backend(A)
    A = backend.array(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got shape {A.shape}")
    if A.shape[0] % 2:
        raise OddDimension(f"A has odd size {A.shape[0]}")
    defect = A @ backend.conj_array(A) + backend.eye(A.shape[0])
    if backend.exact:
        bad = any(bool(v) for v in defect.ravel())
    else:
        bad = float(np.linalg.norm(defect)) > tol
    if bad:
        raise NotQuaternionic("A * conj(A) != -I")
    return QuaternionicData(A, backend)


def _vector(Q: QuaternionicData, x) -> np.ndarray:
    x = Q.backend.array(x)
    if x.shape != (Q.dim,):
        raise DimensionMismatch(f"expected a vector of length {Q.dim}, got shape {x.shape}")
    return x


def apply_j(Q: QuaternionicData, x) -> np.ndarray:
    """j(x) = conj(A) conj(x); conjugate-linear with j o j = -id."""
    x = _vector(Q, x)
    return Q.A_bar @ Q.backend.conj_array(x)


def _check_section(Q: QuaternionicData, s: SectionAB) -> None:
    if s.dim != Q.dim:
        raise DimensionMismatch(f"section has dimension {s.dim}, structure {Q.dim}")


def induced_r(Q: QuaternionicData, s: SectionAB) -> SectionAB:
    """r(s) with coefficients (conj(A) conj(b), -conj(A) conj(a))."""
    _check_section(Q, s)
    bk = Q.backend
    return SectionAB(Q.A_bar @ bk.conj_array(s.b), -(Q.A_bar @ bk.conj_array(s.a)), bk)


def twist_section(Q: QuaternionicData, s: SectionAB) -> SectionAB:
    """Coefficients (A b, -A a) of f o s o sigma^-1 in the conjugate-bundle trivialization."""
    _check_section(Q, s)
    return SectionAB(Q.A @ s.b, -(Q.A @ s.a), Q.backend)


def conj_section(s: SectionAB) -> SectionAB:
    bk = s.backend
    return SectionAB(bk.conj_array(s.a), bk.conj_array(s.b), bk)


def change_trivialization(Q: QuaternionicData, P) -> QuaternionicData:
    """Matrix conj(P) A P^-1 of the same real structure after x -> P x.

    Raises:
        SingularP: If P is not invertible.
    """
    bk = Q.backend
    P = bk.array(P)
    if P.shape != Q.A.shape:
        raise DimensionMismatch(f"P has shape {P.shape}, expected {Q.A.shape}")
    P_inv = inv(P, bk)
    return check_quaternionic(bk.conj_array(P) @ Q.A @ P_inv, bk, tol=1e-9)


def is_real_section(Q: QuaternionicData, s: SectionAB, tol: float = 1e-12) -> bool:
    """b = -j(a), equivalently r(s) = s."""
    _check_section(Q, s)
    residual = s.b + apply_j(Q, s.a)
    if Q.backend.exact:
        return not any(bool(v) for v in residual)
    return Q.backend.max_abs(residual) <= tol


def tau_point(Q: QuaternionicData, chart: str, zeta, x) -> tuple[str, object, np.ndarray]:
    """Real structure on the total space, read in the charts of the same bundle.

    A point (zeta0, x0) of U0 goes to (-conj(zeta0), -j(x0)) in U1, and
    (zeta1, x1) of U1 to (-conj(zeta1), j(x1)) in U0.
    """
    bk = Q.backend
    zeta = bk.convert(zeta)
    fx = apply_j(Q, x)
    if chart == "U0":
        return "U1", -bk.conj(zeta), -fx
    if chart == "U1":
        return "U0", -bk.conj(zeta), fx
    raise ValueError(f"unknown chart {chart!r}")


BundleChartMap = Callable[[object, np.ndarray], tuple[object, np.ndarray]]


def bundle_map(Q: QuaternionicData) -> tuple[BundleChartMap, BundleChartMap]:
    """Holomorphic bundle map f onto the conjugate bundle covering zeta -> -zeta.

    f0 sends (zeta0, x0) to (-zeta0, -A x0) in the conjugate bundle's U1 chart
    and f1 sends (zeta1, x1) to (-zeta1, A x1) in its U0 chart.
    """
    bk = Q.backend

    def f0(zeta0, x0):
        return -bk.convert(zeta0), -(Q.A @ bk.array(x0))

    def f1(zeta1, x1):
        return -bk.convert(zeta1), Q.A @ bk.array(x1)

    return f0, f1


def extract_matrix(f1: BundleChartMap, dim: int, backend: Backend = EXACT) -> QuaternionicData:
    """Recover A from the U1 component of a bundle map by evaluating on a basis."""
    eye = backend.eye(dim)
    columns = [f1(backend.one, eye[:, k])[1] for k in range(dim)]
    return check_quaternionic(backend.array(columns).T, backend)


def section_image(Q: QuaternionicData, s: SectionAB) -> SectionAB:
    """r(s) computed pointwise as tau o s o sigma.

    The image is a section written in U1 as zeta1 -> a' zeta1 + b'; it is read
    off at zeta1 = 0 and zeta1 = 1, whose preimages under sigma are
    zeta0 = -conj(zeta1).
    """
    bk = Q.backend
    values = []
    for z1 in (bk.zero, bk.one):
        zeta0 = -bk.conj(z1)
        _, _, fiber = tau_point(Q, "U0", zeta0, s.a + s.b * zeta0)
        values.append(fiber)
    b_new = values[0]
    return SectionAB(values[1] - b_new, b_new, bk)


def real_section_constraint_rank(Q: QuaternionicData) -> int:
    """Real rank of (a, b) -> b + j(a) on R^8n; 4n means real sections form a 4n-dim space."""
    bk = Q.backend
    dim = Q.dim
    eye = bk.eye(dim)
    images = []
    for use_b in (False, True):
        for unit in (bk.one, bk.i):
            for k in range(dim):
                e = eye[:, k] * unit
                images.append(e if use_b else apply_j(Q, e))
    return rank(realify_columns(images, bk), bk)


def real_structure_matrix(Q: QuaternionicData) -> np.ndarray:
    """Real 8n x 8n matrix of r on (Re a, Im a, Re b, Im b)."""
    bk = Q.backend
    dim = Q.dim
    eye = bk.eye(dim)
    zero = bk.zeros(dim)
    columns = []
    for use_b in (False, True):
        for unit in (bk.one, bk.i):
            for k in range(dim):
                e = eye[:, k] * unit
                s = SectionAB(zero, e, bk) if use_b else SectionAB(e, zero, bk)
                out = induced_r(Q, s)
                columns.append(
                    [bk.real(v) for v in out.a]
                    + [bk.imag(v) for v in out.a]
                    + [bk.real(v) for v in out.b]
                    + [bk.imag(v) for v in out.b]
                )
    return bk.array(columns).T
