"""Deformations of sections of bundle total spaces over CP^1.

Families depend polynomially on parameters t = (t_1, ..., t_l): a family is
stored as its coefficients {multi-index alpha: value}, meaning
sum over alpha of t^alpha * value. Derivatives in t are therefore exact.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm
from tqdm.contrib.concurrent import thread_map

from twistorkit.bundles import (
    BundleCP1,
    GlobalSection,
    SplittingType,
    cohomology_summary,
    h0,
    h1,
    is_section,
    line_sum,
    section_space,
    splitting_type,
)
from twistorkit.errors import DimensionMismatch, InvalidSection, NotRegular
from twistorkit.laurent import LaurentMatrix, LaurentPoly, lm_inverse, lp_derivative, lp_flip
from twistorkit.linalg import rank
from twistorkit.quaternionic import SectionAB
from twistorkit.scalars import EXACT, Backend, format_scalar

logger = logging.getLogger(__name__)

ORIENTATION = "x0 = T(zeta0) x1"


def _unit(k: int, size: int) -> tuple[int, ...]:
    return tuple(1 if i == k else 0 for i in range(size))


def _monomial_value(alpha: tuple[int, ...], t, backend: Backend):
    out = backend.one
    for tk, ak in zip(t, alpha):
        for _ in range(ak):
            out = out * tk
    return out


def _convert_point(t, params: int, backend: Backend) -> list:
    t = [backend.convert(v) for v in (t if isinstance(t, (list, tuple, np.ndarray)) else [t])]
    if len(t) != params:
        raise DimensionMismatch(f"expected {params} parameters, got {len(t)}")
    return t


@dataclass(frozen=True, eq=False)
class BundleFamily:
    """Transition matrices T_t = sum of t^alpha T_alpha."""

    rank: int
    params: int
    coefficients: dict[tuple[int, ...], LaurentMatrix]
    backend: Backend = EXACT

    def __post_init__(self):
        for alpha, T in self.coefficients.items():
            if len(alpha) != self.params or T.size != self.rank:
                raise DimensionMismatch(f"coefficient {alpha} does not fit the family")

    def transition_at(self, t) -> LaurentMatrix:
        t = _convert_point(t, self.params, self.backend)
        total = None
        for alpha, T in self.coefficients.items():
            term = T.scale(_monomial_value(alpha, t, self.backend))
            total = term if total is None else total + term
        return total

    def at(self, t) -> BundleCP1:
        """Bundle at parameter t; raises NotUnitOnCStar if T_t is not invertible on C*."""
        return BundleCP1(self.transition_at(t))


@dataclass(frozen=True, eq=False)
class SectionFamily:
    """Sections s_t = sum of t^alpha s_alpha of a fixed bundle."""

    bundle: BundleCP1
    params: int
    coefficients: dict[tuple[int, ...], GlobalSection]

    @property
    def backend(self) -> Backend:
        return self.bundle.backend

    def at(self, t) -> GlobalSection:
        bk = self.backend
        t = _convert_point(t, self.params, bk)
        total = None
        for alpha, s in self.coefficients.items():
            term = s.scale(_monomial_value(alpha, t, bk))
            total = term if total is None else total + term
        return total

    def derivative(self, t, k: int) -> GlobalSection:
        """d s_t / d t_k at t."""
        bk = self.backend
        t = _convert_point(t, self.params, bk)
        total = _zero_section(self.bundle.rank, bk)
        for alpha, s in self.coefficients.items():
            if alpha[k] == 0:
                continue
            lowered = tuple(a - 1 if i == k else a for i, a in enumerate(alpha))
            factor = bk.convert(alpha[k]) * _monomial_value(lowered, t, bk)
            total = total + s.scale(factor)
        return total


@dataclass
class DeformationReport:
    special: dict
    records: list[dict]
    twist: int
    semicontinuous: bool
    euler_constant: bool
    ks_matrix: list | None = field(default=None)

    def to_frame(self) -> pd.DataFrame:
        rows = [{"role": "special", **self.special}] + [
            {"role": "sample", **r} for r in self.records
        ]
        frame = pd.DataFrame(rows)
        frame["splitting"] = frame["splitting"].map(lambda d: "(" + ", ".join(map(str, d)) + ")")
        return frame

    def as_dict(self) -> dict:
        out = {
            "twist": self.twist,
            "special": self.special,
            "records": self.records,
            "semicontinuous": self.semicontinuous,
            "euler_constant": self.euler_constant,
        }
        if self.ks_matrix is not None:
            out["ks_matrix"] = self.ks_matrix
        return out


def _zero_section(r: int, backend: Backend) -> GlobalSection:
    zero = LaurentPoly.zero(backend)
    return GlobalSection((zero,) * r, (zero,) * r)


@dataclass(frozen=True, eq=False)
class NormalBundleData:
    """Normal bundle of a section with both transition directions.

    ``bundle`` stores the x0 = B(zeta0) x1 convention of every BundleCP1;
    ``forward`` is B^-1, the transition from the U0 frame to the U1 frame.
    """

    bundle: BundleCP1
    forward: LaurentMatrix
    correction: LaurentMatrix
    orientation: str = ORIENTATION


def linear_base_map(rank: int, backend: Backend = EXACT) -> dict[tuple[int, ...], LaurentPoly]:
    """zeta0 = g(zeta1, x1) for a vector bundle: 1/zeta1, with no fiber terms."""
    return {(0,) * rank: LaurentPoly.monomial(-1, 1, backend)}


def base_gradient_along(
    base_map: dict[tuple[int, ...], LaurentPoly], q: tuple[LaurentPoly, ...]
) -> list[LaurentPoly]:
    """d(zeta0)/d(x1_j) along x1 = q(zeta1), as Laurent polynomials in zeta1.

    ``base_map`` holds g(zeta1, x1) = sum over alpha of g_alpha(zeta1) x1^alpha.
    """
    r = len(q)
    backend = q[0].backend if q else EXACT
    grad = [LaurentPoly.zero(backend) for _ in range(r)]
    for alpha, coeff in base_map.items():
        if len(alpha) != r:
            raise DimensionMismatch(f"base map exponent {alpha} for a fiber of rank {r}")
        for j, a_j in enumerate(alpha):
            if a_j == 0:
                continue
            term = coeff.scale(a_j)
            for k, a_k in enumerate(alpha):
                e = a_k - 1 if k == j else a_k
                if e:
                    term = term * q[k] ** e
            grad[j] = grad[j] + term
    return grad


def normal_bundle_data(E: BundleCP1, s: GlobalSection) -> NormalBundleData:
    """Transition df/dx - (d section/d zeta0)(d zeta0/dx) of the normal bundle of s.

    The fiber map x1 -> T x1 is linear, so df/dx = T. The base gradient is
    taken from ``linear_base_map`` along q; it has no fiber terms, so the
    correction must vanish exactly.

    Raises:
        InvalidSection: If s is not a global section of E.
    """
    if not is_section(E, s):
        raise InvalidSection("section does not satisfy p = T q(1/zeta)")
    grad = [lp_flip(g) for g in base_gradient_along(linear_base_map(E.rank, E.backend), s.q)]
    dp = [lp_derivative(c) for c in s.p]
    correction = LaurentMatrix([[dp[i] * grad[j] for j in range(E.rank)] for i in range(E.rank)], E.backend)
    if not correction.is_zero():
        raise InvalidSection("normal-bundle correction term is nonzero for a linear total space")
    B = E.T - correction
    return NormalBundleData(BundleCP1(B), lm_inverse(B), correction)


def normal_bundle_of_section(E: BundleCP1, s: GlobalSection) -> BundleCP1:
    return normal_bundle_data(E, s).bundle


def moduli_dim(E: BundleCP1, s: GlobalSection) -> tuple[int, int, bool]:
    """(h0, h1, regular) of the normal bundle of s."""
    N = normal_bundle_of_section(E, s)
    d0, d1 = h0(N, validate=True), h1(N)
    return d0, d1, d1 == 0


def affine_family(E: BundleCP1, s: GlobalSection, directions: list[GlobalSection]) -> SectionFamily:
    """s + sum of t_k * directions[k]."""
    coeffs = {(0,) * len(directions): s}
    for k, d in enumerate(directions):
        coeffs[_unit(k, len(directions))] = d
    return SectionFamily(E, len(directions), coeffs)


def canonical_deformation(E: BundleCP1, s: GlobalSection) -> SectionFamily:
    """s_t = s + sum of t_rho beta_rho over the canonical basis of H0 of the normal bundle.

    Raises:
        NotRegular: If H1 of the normal bundle is nonzero.
    """
    N = normal_bundle_of_section(E, s)
    obstruction = h1(N)
    if obstruction:
        raise NotRegular(f"h1 of the normal bundle is {obstruction}")
    basis = section_space(N).basis
    family = affine_family(E, s, basis)

    zero = [E.backend.zero] * len(basis)
    if not _same_section(family.at(zero), s):
        raise InvalidSection("canonical family does not pass through s")
    for k, beta in enumerate(basis):
        if not _same_section(family.derivative(zero, k), beta):
            raise InvalidSection(f"derivative in t_{k} is not beta_{k}")
    logger.info("canonical deformation with %d parameters", len(basis))
    return family


def _same_section(a: GlobalSection, b: GlobalSection) -> bool:
    return a.p == b.p and a.q == b.q


def kodaira_spencer(F: SectionFamily, t, direction) -> GlobalSection:
    """Derivative of the family at t in the given parameter direction."""
    bk = F.backend
    direction = _convert_point(direction, F.params, bk)
    total = _zero_section(F.bundle.rank, bk)
    for k, c in enumerate(direction):
        if not bk.is_zero(c):
            total = total + F.derivative(t, k).scale(c)
    return total


def _coefficient_vector(s: GlobalSection) -> dict[tuple[int, int, int], object]:
    """Coefficients keyed (chart, power, component), chart 0 for p and 1 for q."""
    out = {}
    for chart, part in enumerate((s.p, s.q)):
        for c, poly in enumerate(part):
            for power, value in poly.terms.items():
                out[(chart, power, c)] = value
    return out


def section_coordinates(basis: list[GlobalSection], s: GlobalSection, backend: Backend = EXACT) -> list:
    """Coordinates of s in a canonical (row-reduced) section basis.

    Each basis vector has a pivot coefficient equal to 1 that vanishes in the
    others, so the coordinates are read off and the result is re-checked.

    Raises:
        InvalidSection: If s is not in the span of the basis.
    """
    target = _coefficient_vector(s)
    coords = []
    for beta in basis:
        vec = _coefficient_vector(beta)
        pivot = min(vec)
        coords.append(target.get(pivot, backend.zero))
    rebuilt = _zero_section(s.rank, backend)
    for c, beta in zip(coords, basis):
        rebuilt = rebuilt + beta.scale(c)
    if not _same_section(rebuilt, s):
        raise InvalidSection("section is not in the span of the canonical basis")
    return coords


def kodaira_spencer_matrix(F: SectionFamily, t, basis: list[GlobalSection] | None = None):
    """Matrix of the Kodaira-Spencer map at t in the canonical H0 basis, with its rank.

    Column k holds the coordinates of d s_t / d t_k.
    """
    bk = F.backend
    if basis is None:
        N = normal_bundle_of_section(F.bundle, F.at(t))
        basis = section_space(N).basis
    columns = [section_coordinates(basis, F.derivative(t, k), bk) for k in range(F.params)]
    if not basis:
        return bk.zeros((0, F.params)), 0
    matrix = bk.array(columns).T
    return matrix, rank(matrix, bk)


def kodaira_spencer_fd(F: SectionFamily, t, direction, step: float = 1e-5) -> dict:
    """Central-difference derivative of the family, evaluated in floating point.

    Returns:
        dict: Coefficient key (chart, power, component) to complex value.
    """
    bk = F.backend
    t = np.array([bk.to_complex(bk.convert(v)) for v in _convert_point(t, F.params, bk)])
    d = np.array([bk.to_complex(bk.convert(v)) for v in _convert_point(direction, F.params, bk)])

    def evaluate(point):
        out: dict[tuple[int, int, int], complex] = {}
        for alpha, s in F.coefficients.items():
            weight = complex(np.prod([point[k] ** a for k, a in enumerate(alpha)]))
            for key, value in _coefficient_vector(s).items():
                out[key] = out.get(key, 0j) + weight * bk.to_complex(value)
        return out

    hi, lo = evaluate(t + step * d), evaluate(t - step * d)
    return {k: (hi.get(k, 0j) - lo.get(k, 0j)) / (2 * step) for k in set(hi) | set(lo)}


def kodaira_spencer_fd_residual(F: SectionFamily, t, direction, step: float = 1e-5) -> float:
    """Max difference between the exact and finite-difference Kodaira-Spencer maps."""
    bk = F.backend
    exact = {k: bk.to_complex(v) for k, v in _coefficient_vector(kodaira_spencer(F, t, direction)).items()}
    approx = kodaira_spencer_fd(F, t, direction, step)
    keys = set(exact) | set(approx)
    return max((abs(exact.get(k, 0j) - approx.get(k, 0j)) for k in keys), default=0.0)


def factor_through_canonical(canonical: SectionFamily, s: GlobalSection,
                             generators: list[GlobalSection]) -> np.ndarray:
    """Linear map u -> t with s + sum u_k g_k = canonical(t).

    Column k holds the canonical coordinates of generator g_k.

    Raises:
        InvalidSection: If a generator is not a section of the normal bundle.
    """
    bk = canonical.backend
    basis = [canonical.coefficients[_unit(k, canonical.params)] for k in range(canonical.params)]
    if not _same_section(canonical.coefficients[(0,) * canonical.params], s):
        raise InvalidSection("canonical family is not based at s")
    columns = [section_coordinates(basis, g, bk) for g in generators]
    if not generators:
        return bk.zeros((canonical.params, 0))
    return bk.array(columns).T


def jump_family(backend: Backend = EXACT) -> BundleFamily:
    """T_t = [[zeta^-1, t], [0, zeta]]: splitting (1, -1) at t = 0, (0, 0) elsewhere."""
    zero = LaurentPoly.zero(backend)
    base = LaurentMatrix(
        [[LaurentPoly.monomial(-1, 1, backend), zero], [zero, LaurentPoly.monomial(1, 1, backend)]],
        backend,
    )
    off = LaurentMatrix([[zero, LaurentPoly.constant(1, backend)], [zero, zero]], backend)
    return BundleFamily(rank=2, params=1, coefficients={(0,): base, (1,): off}, backend=backend)


def _record(F: BundleFamily, t, m: int, window: int | None) -> dict:
    point = _convert_point(t, F.params, F.backend)
    summary = {"t": ", ".join(format_scalar(v, F.backend) for v in point)}
    summary.update(cohomology_summary(F.at(point), m, window))
    summary["euler"] = summary["h0"] - summary["h1"]
    return summary


def semicontinuity_scan(
    F: BundleFamily,
    t_special,
    t_samples: list,
    m: int = 0,
    window: int | None = None,
    workers: int = 1,
    progress: bool = False,
) -> DeformationReport:
    """Cohomology of E_t(m) at t_special and at each sample.

    The verdict holds when h^q at every sample is at most h^q at t_special
    for q = 0, 1. ``euler_constant`` checks h0 - h1 across all points.
    """
    def run(t):
        return _record(F, t, m, window)

    special = run(t_special)
    if workers > 1:
        records = thread_map(run, t_samples, max_workers=workers, disable=not progress, desc="scan")
    else:
        records = [run(t) for t in tqdm(t_samples, disable=not progress, desc="scan")]

    semicontinuous = all(r["h0"] <= special["h0"] and r["h1"] <= special["h1"] for r in records)
    euler_constant = all(r["euler"] == special["euler"] for r in records)
    logger.info("semicontinuity scan: %d samples, verdict %s", len(records), semicontinuous)
    return DeformationReport(
        special=special,
        records=list(records),
        twist=m,
        semicontinuous=semicontinuous,
        euler_constant=euler_constant,
    )


def splitting_stability_scan(E: BundleCP1 | None, sections: list[SectionAB],
                             progress: bool = False) -> dict:
    """Normal-bundle splitting of every section of the sum of 2n copies of O(1).

    Every splitting must be (1, ..., 1) and every correction term zero.
    """
    if not sections:
        raise ValueError("no sections to scan")
    if E is None:
        E = line_sum([1] * sections[0].dim, sections[0].backend)
    expected = SplittingType((1,) * E.rank)
    seen: dict[tuple[int, ...], int] = {}
    correction_zero = True
    for s in tqdm(sections, disable=not progress, desc="normal bundles"):
        data = normal_bundle_data(E, s.to_global_section())
        correction_zero = correction_zero and data.correction.is_zero()
        split = splitting_type(data.bundle)
        seen[split.degrees] = seen.get(split.degrees, 0) + 1
    stable = set(seen) == {expected.degrees} and correction_zero
    return {
        "count": len(sections),
        "expected": list(expected.degrees),
        "splittings": {",".join(map(str, k)): v for k, v in sorted(seen.items())},
        "correction_zero": correction_zero,
        "stable": stable,
    }
