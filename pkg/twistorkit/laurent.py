"""Laurent polynomials and matrices in the chart coordinate zeta.

A ``LaurentPoly`` is a sparse map ``power -> coefficient`` over one scalar
backend, kept in canonical form (no stored exact zeros). ``LaurentMatrix`` is
a square matrix of them and carries the transition data of bundles on CP^1.
Both are immutable after construction.
"""

from itertools import permutations
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from twistorkit.errors import BackendError, DimensionMismatch, EvalAtPole, NotUnitOnCStar
from twistorkit.scalars import EXACT, Backend, backend_of, same_backend


class LaurentPoly:
    """Finite sum of c_k * zeta**k with k of either sign."""

    __slots__ = ("_terms", "backend")

    def __init__(self, terms: Mapping[int, object] | None = None, backend: Backend = EXACT):
        clean = {}
        for power, coeff in (terms or {}).items():
            value = backend.convert(coeff)
            # exact zeros are dropped; tiny float coefficients are kept as they are
            if backend.exact and not bool(value):
                continue
            if not backend.exact and value == 0:
                continue
            clean[int(power)] = value
        self._terms = dict(sorted(clean.items()))
        self.backend = backend

    @classmethod
    def constant(cls, c, backend: Backend = EXACT) -> "LaurentPoly":
        return cls({0: c}, backend)

    @classmethod
    def monomial(cls, power: int, c=1, backend: Backend = EXACT) -> "LaurentPoly":
        return cls({power: c}, backend)

    @classmethod
    def zero(cls, backend: Backend = EXACT) -> "LaurentPoly":
        return cls({}, backend)

    @property
    def terms(self) -> Mapping[int, object]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def lo(self) -> int:
        if not self._terms:
            raise ValueError("the zero Laurent polynomial has no degree span")
        return next(iter(self._terms))

    @property
    def hi(self) -> int:
        if not self._terms:
            raise ValueError("the zero Laurent polynomial has no degree span")
        return next(reversed(self._terms))

    def coeff(self, power: int):
        return self._terms.get(power, self.backend.zero)

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def is_polynomial(self) -> bool:
        return self.is_zero() or self.lo >= 0

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            same_backend(self.backend, other.backend)
            return other
        found = backend_of(other)
        if found is not None:
            same_backend(self.backend, found)
        return LaurentPoly.constant(other, self.backend)

    def __add__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out[k] + c if k in out else c
        return LaurentPoly(out, self.backend)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({k: -c for k, c in self._terms.items()}, self.backend)

    def __sub__(self, other) -> "LaurentPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "LaurentPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        out: dict[int, object] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                k = k1 + k2
                out[k] = out[k] + c1 * c2 if k in out else c1 * c2
        return LaurentPoly(out, self.backend)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "LaurentPoly":
        if exponent < 0:
            if not self.is_monomial():
                raise ValueError("only monomials have Laurent inverses")
            (k, c), = self._terms.items()
            inv = self.backend.one / c
            return LaurentPoly({-k: inv}, self.backend) ** (-exponent)
        result = LaurentPoly.constant(1, self.backend)
        for _ in range(exponent):
            result = result * self
        return result

    def shift(self, m: int) -> "LaurentPoly":
        """Multiply by zeta**m."""
        return LaurentPoly({k + m: c for k, c in self._terms.items()}, self.backend)

    def scale(self, c) -> "LaurentPoly":
        c = self.backend.convert(c)
        return LaurentPoly({k: v * c for k, v in self._terms.items()}, self.backend)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentPoly):
            try:
                other = self._coerce(other)
            except BackendError:
                return False
        if self.backend.name != other.backend.name:
            return False
        if self._terms.keys() != other._terms.keys():
            return False
        return all(self._terms[k] == other._terms[k] for k in self._terms)

    def __hash__(self) -> int:
        return hash((self.backend.name, tuple(self._terms.keys())))

    def __repr__(self) -> str:
        if not self._terms:
            return "LaurentPoly(0)"
        body = " + ".join(f"({c})*z^{k}" for k, c in self._terms.items())
        return f"LaurentPoly({body})"


def lp_eval(p: LaurentPoly, z):
    """Evaluate a Laurent polynomial at a point of C*.

    Args:
        p (LaurentPoly): The polynomial.
        z: A scalar of the same backend as ``p``.

    Returns:
        The scalar sum of c_k * z**k.

    Raises:
        EvalAtPole: If z is zero and p has negative powers.
    """
    found = backend_of(z)
    if found is not None:
        same_backend(p.backend, found)
    b = p.backend
    z = b.convert(z)
    if p.is_zero():
        return b.zero
    if b.is_zero(z):
        if p.lo < 0:
            raise EvalAtPole(f"{p!r} has a pole at zeta = 0")
        return p.coeff(0)
    total = b.zero
    zinv = b.one / z
    for k, c in p.terms.items():
        total = total + c * _power(z if k >= 0 else zinv, abs(k), b)
    return total


def _power(base, e: int, backend: Backend):
    result = backend.one
    while e:
        if e & 1:
            result = result * base
        base = base * base
        e >>= 1
    return result


def lp_flip(p: LaurentPoly) -> LaurentPoly:
    """Chart substitution zeta -> 1/zeta."""
    return LaurentPoly({-k: c for k, c in p.terms.items()}, p.backend)


def lp_derivative(p: LaurentPoly) -> LaurentPoly:
    """Termwise derivative d/dzeta."""
    return LaurentPoly({k - 1: c * k for k, c in p.terms.items() if k != 0}, p.backend)


class LaurentMatrix:
    """Square matrix of Laurent polynomials sharing one backend."""

    __slots__ = ("_rows", "backend")

    def __init__(self, rows: Iterable[Iterable[LaurentPoly]], backend: Backend | None = None):
        rows = [list(r) for r in rows]
        size = len(rows)
        if size == 0 or any(len(r) != size for r in rows):
            raise DimensionMismatch("a LaurentMatrix must be square and nonempty")
        if backend is None:
            first = next((e for r in rows for e in r if isinstance(e, LaurentPoly)), None)
            backend = first.backend if first is not None else EXACT
        fixed = []
        for r in rows:
            out = []
            for e in r:
                if not isinstance(e, LaurentPoly):
                    e = LaurentPoly.constant(e, backend)
                same_backend(backend, e.backend)
                out.append(e)
            fixed.append(tuple(out))
        self._rows = tuple(fixed)
        self.backend = backend

    @classmethod
    def identity(cls, r: int, backend: Backend = EXACT) -> "LaurentMatrix":
        return cls.diagonal([LaurentPoly.constant(1, backend)] * r, backend)

    @classmethod
    def diagonal(cls, entries: list[LaurentPoly], backend: Backend = EXACT) -> "LaurentMatrix":
        r = len(entries)
        zero = LaurentPoly.zero(backend)
        return cls(
            [[entries[i] if i == j else zero for j in range(r)] for i in range(r)],
            backend,
        )

    @classmethod
    def monomial_diagonal(cls, powers: list[int], backend: Backend = EXACT) -> "LaurentMatrix":
        return cls.diagonal([LaurentPoly.monomial(k, 1, backend) for k in powers], backend)

    @property
    def size(self) -> int:
        return len(self._rows)

    @property
    def rows(self) -> tuple[tuple[LaurentPoly, ...], ...]:
        return self._rows

    def __getitem__(self, key: tuple[int, int]) -> LaurentPoly:
        i, j = key
        return self._rows[i][j]

    def span(self) -> tuple[int, int]:
        """(lo, hi) over all nonzero entries."""
        nonzero = [e for r in self._rows for e in r if not e.is_zero()]
        if not nonzero:
            raise ValueError("zero matrix has no degree span")
        return min(e.lo for e in nonzero), max(e.hi for e in nonzero)

    def map(self, fn) -> "LaurentMatrix":
        return LaurentMatrix([[fn(e) for e in r] for r in self._rows], self.backend)

    def __matmul__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        return lm_mul(self, other)

    def __add__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        _check_sizes(self, other)
        return LaurentMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other._rows)],
            same_backend(self.backend, other.backend),
        )

    def __sub__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        _check_sizes(self, other)
        return LaurentMatrix(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other._rows)],
            same_backend(self.backend, other.backend),
        )

    def shift(self, m: int) -> "LaurentMatrix":
        return self.map(lambda e: e.shift(m))

    def scale(self, c) -> "LaurentMatrix":
        return self.map(lambda e: e.scale(c))

    def apply(self, vector: list[LaurentPoly]) -> list[LaurentPoly]:
        """Matrix times a column of Laurent polynomials."""
        if len(vector) != self.size:
            raise DimensionMismatch("vector length does not match matrix size")
        out = []
        for row in self._rows:
            acc = LaurentPoly.zero(self.backend)
            for e, v in zip(row, vector):
                acc = acc + e * v
            out.append(acc)
        return out

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self._rows for e in r)

    def is_polynomial(self) -> bool:
        return all(e.is_polynomial() for r in self._rows for e in r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentMatrix) or other.size != self.size:
            return False
        return all(a == b for ra, rb in zip(self._rows, other._rows) for a, b in zip(ra, rb))

    def __hash__(self) -> int:
        return hash((self.size, self.backend.name))

    def __repr__(self) -> str:
        return f"LaurentMatrix({[list(r) for r in self._rows]!r})"


def _check_sizes(a: LaurentMatrix, b: LaurentMatrix) -> None:
    if a.size != b.size:
        raise DimensionMismatch(f"matrix sizes {a.size} and {b.size} differ")


def lm_mul(a: LaurentMatrix, b: LaurentMatrix) -> LaurentMatrix:
    _check_sizes(a, b)
    backend = same_backend(a.backend, b.backend)
    r = a.size
    rows = []
    for i in range(r):
        row = []
        for j in range(r):
            acc = LaurentPoly.zero(backend)
            for k in range(r):
                acc = acc + a[i, k] * b[k, j]
            row.append(acc)
        rows.append(row)
    return LaurentMatrix(rows, backend)


def _permutation_sign(perm: tuple[int, ...]) -> int:
    sign, seen = 1, [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length, k = 0, start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def lm_det(T: LaurentMatrix) -> LaurentPoly:
    """Leibniz determinant in canonical Laurent form."""
    b = T.backend
    total = LaurentPoly.zero(b)
    for perm in permutations(range(T.size)):
        term = LaurentPoly.constant(_permutation_sign(perm), b)
        for i, j in enumerate(perm):
            entry = T[i, j]
            if entry.is_zero():
                break
            term = term * entry
        else:
            total = total + term
    return total


def lm_minor(T: LaurentMatrix, row: int, col: int) -> LaurentPoly:
    r = T.size
    if r == 1:
        return LaurentPoly.constant(1, T.backend)
    sub = [
        [T[i, j] for j in range(r) if j != col] for i in range(r) if i != row
    ]
    return lm_det(LaurentMatrix(sub, T.backend))


def lm_adjugate(T: LaurentMatrix) -> LaurentMatrix:
    r = T.size
    return LaurentMatrix(
        [
            [lm_minor(T, j, i).scale((-1) ** (i + j)) for j in range(r)]
            for i in range(r)
        ],
        T.backend,
    )


def lm_unit_winding(T: LaurentMatrix) -> int:
    """Winding number k of a unit determinant c * zeta**k.

    Raises:
        NotUnitOnCStar: If the determinant is zero or has several monomials.
    """
    det = lm_det(T)
    if not det.is_monomial():
        raise NotUnitOnCStar(
            f"determinant has {len(det.terms)} monomials; T is not invertible on C*"
        )
    return det.lo


def lm_inverse(T: LaurentMatrix) -> LaurentMatrix:
    """adj(T) / (c * zeta**w) for a unit determinant."""
    det = lm_det(T)
    if not det.is_monomial():
        raise NotUnitOnCStar("cannot invert a transition that is not a unit on C*")
    (w, c), = det.terms.items()
    inv_c = T.backend.one / c
    return lm_adjugate(T).map(lambda e: e.shift(-w).scale(inv_c))


def lm_flip(T: LaurentMatrix) -> LaurentMatrix:
    return T.map(lp_flip)


def lm_eval(T: LaurentMatrix, z) -> np.ndarray:
    """Constant matrix T(z)."""
    b = T.backend
    out = b.zeros((T.size, T.size))
    for i in range(T.size):
        for j in range(T.size):
            out[i, j] = lp_eval(T[i, j], z)
    return out
