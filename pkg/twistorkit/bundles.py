"""Holomorphic vector bundles on CP^1 given by a transition matrix.

A point (zeta0, x0) of the U0 chart equals (zeta1, x1) of the U1 chart iff
zeta0 * zeta1 = 1 and x0 = T(zeta0) x1. A global section is a pair of
polynomial vectors (p, q) with p(zeta) = T(zeta) q(1/zeta).

Global sections are found by coefficient matching: the identity above is a
finite linear system in the coefficients of p and q, solved exactly.
Splitting types are read off from h0 of the twists E(m).
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

from twistorkit.errors import (
    BackendError,
    DegreeBoundUnstable,
    DimensionMismatch,
    InconsistentWinding,
    NotInvertibleOnChart,
    ScanWindowExhausted,
)
from twistorkit.laurent import (
    LaurentMatrix,
    LaurentPoly,
    lm_det,
    lm_flip,
    lm_inverse,
    lm_mul,
    lm_unit_winding,
    lp_eval,
    lp_flip,
)
from twistorkit.linalg import exact_kernel, exact_rank
from twistorkit.scalars import EXACT, Backend

logger = logging.getLogger(__name__)

DEGREE_BOUND_POLICIES = ("sharp", "generous")


@dataclass(frozen=True)
class BundleCP1:
    """Bundle of rank r with transition x0 = T(zeta0) x1."""

    T: LaurentMatrix
    winding: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "winding", lm_unit_winding(self.T))

    @property
    def rank(self) -> int:
        return self.T.size

    @property
    def backend(self) -> Backend:
        return self.T.backend


@dataclass(frozen=True)
class GlobalSection:
    """U0 representative p(zeta0) and U1 representative q(zeta1)."""

    p: tuple[LaurentPoly, ...]
    q: tuple[LaurentPoly, ...]

    def __post_init__(self):
        if len(self.p) != len(self.q):
            raise DimensionMismatch("p and q must have the same length")
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "q", tuple(self.q))

    @property
    def rank(self) -> int:
        return len(self.p)

    def __add__(self, other: "GlobalSection") -> "GlobalSection":
        return GlobalSection(
            tuple(a + b for a, b in zip(self.p, other.p)),
            tuple(a + b for a, b in zip(self.q, other.q)),
        )

    def scale(self, c) -> "GlobalSection":
        return GlobalSection(
            tuple(a.scale(c) for a in self.p), tuple(a.scale(c) for a in self.q)
        )

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.p + self.q)


@dataclass(frozen=True)
class SplittingType:
    """Degrees n1 >= n2 >= ... >= nr with E isomorphic to the sum of O(ni)."""

    degrees: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(sorted(self.degrees, reverse=True)))

    def __iter__(self):
        return iter(self.degrees)

    def __len__(self) -> int:
        return len(self.degrees)

    def shifted(self, m: int) -> "SplittingType":
        return SplittingType(tuple(n + m for n in self.degrees))


class SectionSpace(NamedTuple):
    dimension: int
    basis: list[GlobalSection]


def line_sum(degrees: list[int], backend: Backend = EXACT) -> BundleCP1:
    """Direct sum O(n1) + ... + O(nr), T = diag(zeta**ni)."""
    if not degrees:
        raise ValueError("line_sum needs at least one degree")
    return BundleCP1(LaurentMatrix.monomial_diagonal(list(degrees), backend))


def twist(E: BundleCP1, m: int) -> BundleCP1:
    """E tensored with O(m)."""
    return BundleCP1(E.T.shift(m))


def section_residual(E: BundleCP1, s: GlobalSection) -> list[LaurentPoly]:
    """p(zeta) - T(zeta) q(1/zeta), componentwise."""
    if s.rank != E.rank:
        raise DimensionMismatch(f"section of rank {s.rank} on a bundle of rank {E.rank}")
    image = E.T.apply([lp_flip(c) for c in s.q])
    return [a - b for a, b in zip(s.p, image)]


def is_section(E: BundleCP1, s: GlobalSection) -> bool:
    return all(c.is_polynomial() for c in s.p + s.q) and all(
        c.is_zero() for c in section_residual(E, s)
    )


def section_residual_at(E: BundleCP1, s: GlobalSection, z):
    """Max-abs entry of p(z) - T(z) q(1/z) at one point of C*."""
    b = E.backend
    z = b.convert(z)
    zinv = b.one / z
    T = E.T
    worst = 0.0
    for i in range(E.rank):
        acc = lp_eval(s.p[i], z)
        for j in range(E.rank):
            acc = acc - lp_eval(T[i, j], z) * lp_eval(s.q[j], zinv)
        worst = max(worst, b.magnitude(acc))
    return worst


def _require_exact(E: BundleCP1, what: str) -> None:
    if not E.backend.exact:
        raise BackendError(f"{what} needs the exact backend")


def _inverse_lo(T: LaurentMatrix) -> int:
    inv = lm_inverse(T)
    return inv.span()[0]


def default_degree_bound(E: BundleCP1, policy: str = "sharp") -> int:
    """Degree bound D for p and q.

    ``sharp`` is max(hi(T), -lo(T^-1), 0): p = T q(1/zeta) has no power above
    hi(T) and q(1/zeta) = T^-1 p none below lo(T^-1). ``generous`` is
    r * span(T) + |winding| + 2.
    """
    lo, hi = E.T.span()
    if policy == "sharp":
        return max(hi, -_inverse_lo(E.T), 0)
    if policy == "generous":
        return E.rank * (hi - lo) + abs(E.winding) + 2
    raise ValueError(f"unknown degree bound policy {policy!r}")


def _coefficient_system(T: LaurentMatrix, D: int):
    """Sparse rows of the linear system p(zeta) - T(zeta) q(1/zeta) = 0.

    Unknowns: p coefficients (power d, component c) at d * r + c, then q
    coefficients at r * (D + 1) + d * r + c.
    """
    r = T.size
    lo, hi = T.span()
    kmin, kmax = min(0, lo - D), max(D, hi)
    offset = r * (D + 1)
    one = T.backend.one
    rows: dict[int, dict[int, object]] = {}
    for k in range(kmin, kmax + 1):
        for i in range(r):
            row: dict[int, object] = {}
            if 0 <= k <= D:
                row[k * r + i] = one
            for j in range(r):
                for e, t in T[i, j].terms.items():
                    d = e - k
                    if 0 <= d <= D:
                        col = offset + d * r + j
                        row[col] = row[col] - t if col in row else -t
            if row:
                rows[(k - kmin) * r + i] = row
    shape = ((kmax - kmin + 1) * r, 2 * offset)
    return rows, shape


def _dimension(T: LaurentMatrix, D: int) -> int:
    rows, shape = _coefficient_system(T, D)
    return shape[1] - exact_rank(rows, shape)


def _basis_to_sections(vectors, r: int, D: int, backend: Backend) -> list[GlobalSection]:
    offset = r * (D + 1)
    sections = []
    for vec in vectors:
        p = [LaurentPoly({d: vec[d * r + c] for d in range(D + 1)}, backend) for c in range(r)]
        q = [
            LaurentPoly({d: vec[offset + d * r + c] for d in range(D + 1)}, backend)
            for c in range(r)
        ]
        sections.append(GlobalSection(tuple(p), tuple(q)))
    return sections


def section_space(
    E: BundleCP1,
    degree_bound: int | None = None,
    *,
    policy: str = "sharp",
    validate: bool = True,
) -> SectionSpace:
    """Global sections of E by exact coefficient matching.

    Args:
        E (BundleCP1): The bundle; its transition must use the exact backend.
        degree_bound (int | None): Degree bound D for p and q. Defaults to
            ``default_degree_bound(E, policy)``.
        policy (str): ``"sharp"`` or ``"generous"``.
        validate (bool): Recompute the dimension at D + 1 and require equality.

    Returns:
        SectionSpace: The dimension and a canonical basis.

    Raises:
        BackendError: On float transition data.
        DegreeBoundUnstable: If the dimensions at D and D + 1 differ.
    """
    _require_exact(E, "section_space")
    D = default_degree_bound(E, policy) if degree_bound is None else degree_bound
    rows, shape = _coefficient_system(E.T, D)
    kernel = exact_kernel(rows, shape)
    if validate:
        check = _dimension(E.T, D + 1)
        if check != len(kernel):
            raise DegreeBoundUnstable(
                f"h0 is {len(kernel)} at degree bound {D} but {check} at {D + 1}"
            )
    basis = _basis_to_sections(kernel, E.rank, D, E.backend)
    logger.debug("section_space: rank %d, D=%d, h0=%d", E.rank, D, len(basis))
    return SectionSpace(len(basis), basis)


def h0(E: BundleCP1, m: int = 0, *, policy: str = "sharp", validate: bool = False) -> int:
    """dim H0(E(m)) without building a basis, at the degree bound of ``policy``."""
    _require_exact(E, "h0")
    Em = twist(E, m) if m else E
    D = default_degree_bound(Em, policy)
    dim = _dimension(Em.T, D)
    if validate and _dimension(Em.T, D + 1) != dim:
        raise DegreeBoundUnstable(f"h0 unstable at degree bound {D}")
    return dim


def scan_window(E: BundleCP1) -> int:
    lo, hi = E.T.span()
    return E.rank * (hi - lo) + abs(E.winding) + 3


def splitting_type(E: BundleCP1, window: int | None = None) -> SplittingType:
    """Grothendieck splitting type from h0 of twists.

    c(m) = h0(E(m)) - h0(E(m-1)) counts the degrees n with n >= -m, so the
    number of degrees equal to -m is c(m) - c(m-1). The scan starts where h0
    vanishes at two consecutive twists and stops once c(m) = r twice.

    Raises:
        ScanWindowExhausted: If stabilisation is not reached for |m| <= window.
        InconsistentWinding: If the degrees do not sum to the winding number.
    """
    _require_exact(E, "splitting_type")
    r, w = E.rank, E.winding
    lo, hi = E.T.span()
    inv_lo = _inverse_lo(E.T)
    bound = scan_window(E) if window is None else window

    def h_at(m: int) -> int:
        return _dimension(E.T.shift(m), max(hi + m, m - inv_lo, 0))

    start = max(-bound, -hi - 2)
    h_prev = h_at(start)
    h_cur = h_at(start + 1)
    if h_prev or h_cur:
        raise ScanWindowExhausted(f"h0 does not vanish at the window start m={start}")

    counts = {start + 1: 0}
    m = start + 1
    while True:
        m += 1
        if m > bound:
            raise ScanWindowExhausted(
                f"twist scan did not stabilise within |m| <= {bound}"
            )
        h_prev, h_cur = h_cur, h_at(m)
        counts[m] = h_cur - h_prev
        logger.debug("splitting scan: m=%d h0=%d c=%d", m, h_cur, counts[m])
        if counts[m] == r and counts[m - 1] == r:
            break

    degrees: list[int] = []
    for k in range(start + 2, m + 1):
        degrees.extend([-k] * (counts[k] - counts[k - 1]))
    if len(degrees) != r or sum(degrees) != w:
        raise InconsistentWinding(
            f"recovered degrees {degrees} do not sum to winding {w} with rank {r}"
        )
    return SplittingType(tuple(degrees))


def h1(E: BundleCP1, window: int | None = None) -> int:
    """dim H1(E) = sum of max(-n - 1, 0) over the splitting degrees."""
    return sum(max(-n - 1, 0) for n in splitting_type(E, window))


def euler_characteristic(E: BundleCP1) -> int:
    """h0 - h1 = deg + rank on CP^1."""
    return E.winding + E.rank


def gauge_transform(E: BundleCP1, P0: LaurentMatrix, P1: LaurentMatrix) -> BundleCP1:
    """Isomorphic bundle with transition P0(zeta)^-1 T(zeta) P1(1/zeta).

    Raises:
        NotInvertibleOnChart: If P0 or P1 is not polynomial in its chart
        coordinate or its determinant is not a nonzero constant.
    """
    for name, P in (("P0", P0), ("P1", P1)):
        if P.size != E.rank:
            raise DimensionMismatch(f"{name} has size {P.size}, bundle rank {E.rank}")
        det = lm_det(P)
        if not P.is_polynomial() or not det.is_monomial() or det.lo != 0:
            raise NotInvertibleOnChart(
                f"{name} must be polynomial with nonzero constant determinant"
            )
    return BundleCP1(lm_mul(lm_mul(lm_inverse(P0), E.T), lm_flip(P1)))


def elementary_matrix(
    r: int, i: int, j: int, c, power: int, backend: Backend = EXACT
) -> LaurentMatrix:
    """I + c * zeta**power * e_ij (i != j), determinant 1."""
    if i == j:
        raise ValueError("elementary matrices need i != j")
    one = LaurentPoly.constant(1, backend)
    zero = LaurentPoly.zero(backend)
    rows = [[one if a == b else zero for b in range(r)] for a in range(r)]
    rows[i][j] = LaurentPoly.monomial(power, c, backend)
    return LaurentMatrix(rows, backend)


def random_unimodular_gauge(
    r: int, rng, steps: int = 2, max_power: int = 1, backend: Backend = EXACT
) -> tuple[LaurentMatrix, LaurentMatrix]:
    """Pair (P0, P1) of products of elementary matrices with unit determinant."""
    gauges = []
    for _ in range(2):
        P = LaurentMatrix.identity(r, backend)
        if r > 1:
            for _ in range(steps):
                i = rng.randint(0, r - 1)
                j = (i + rng.randint(1, r - 1)) % r
                c = rng.choice([-2, -1, 1, 2])
                P = lm_mul(P, elementary_matrix(r, i, j, c, rng.randint(0, max_power), backend))
        gauges.append(P)
    return gauges[0], gauges[1]


def cohomology_summary(
    E: BundleCP1, m: int = 0, window: int | None = None, policy: str = "sharp"
) -> dict:
    """h0, h1, splitting and winding of E(m) as plain data."""
    Em = twist(E, m) if m else E
    split = splitting_type(Em, window)
    return {
        "h0": h0(Em, policy=policy, validate=True),
        "h1": sum(max(-n - 1, 0) for n in split),
        "splitting": list(split.degrees),
        "winding": Em.winding,
    }
