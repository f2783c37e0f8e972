"""Forward twistor construction for flat hyperkaehler C^2n.

Matrices act on the complexified tangent frame
(dw^1, ..., dw^2n, dwbar^1, ..., dwbar^2n). For n > 1 the n = 1 blocks are
repeated on interleaved pairs: pair k uses holomorphic indices (2k, 2k+1) and
antiholomorphic indices (2n+2k, 2n+2k+1).

Two-forms are stored as matrices W with omega(X, Y) = X^T W Y; the form
g(S., .) of an endomorphism S is W = S^T g.
"""

import logging
from dataclasses import dataclass

import numpy as np

from twistorkit.errors import NotConstant
from twistorkit.linalg import det, exact_kernel, dense_to_sparse
from twistorkit.quaternionic import (
    QuaternionicData,
    SectionAB,
    check_quaternionic,
    is_real_section,
    tau_point,
)
from twistorkit.rng import SplitMix64
from twistorkit.scalars import EXACT, Backend

logger = logging.getLogger(__name__)

CHARTS = ("U0", "U1")
FLOAT_TOL = 1e-10
FIXED_ZETAS = [
    (0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (2, 0),
    (1, 1), (1, -1), (-2, 0), (0, 2), ("1/2", 0), (2, -1),
]


@dataclass(frozen=True, eq=False)
class FlatHK:
    n: int
    I: np.ndarray
    J: np.ndarray
    K: np.ndarray
    g: np.ndarray
    backend: Backend = EXACT


@dataclass(frozen=True, eq=False)
class TwistorPoint:
    chart: str
    zeta: object
    fiber: np.ndarray
    backend: Backend = EXACT

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")
        object.__setattr__(self, "zeta", self.backend.convert(self.zeta))
        object.__setattr__(self, "fiber", self.backend.array(self.fiber))


@dataclass(frozen=True, eq=False)
class OmegaFamily:
    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray


def _pair_index(n: int, k: int) -> list[int]:
    return [2 * k, 2 * k + 1, 2 * n + 2 * k, 2 * n + 2 * k + 1]


def _embed_pairs(block: np.ndarray, n: int, backend: Backend) -> np.ndarray:
    out = backend.zeros((4 * n, 4 * n))
    for k in range(n):
        idx = _pair_index(n, k)
        out[np.ix_(idx, idx)] = block
    return out


def _unit_blocks(backend: Backend) -> dict[str, np.ndarray]:
    i = backend.i
    z, o = backend.zero, backend.one
    half = backend.one / backend.convert(2)
    return {
        "I": backend.array([[i, z, z, z], [z, i, z, z], [z, z, -i, z], [z, z, z, -i]]),
        "J": backend.array([[z, z, z, o], [z, z, -o, z], [z, o, z, z], [-o, z, z, z]]),
        "K": backend.array([[z, z, z, i], [z, z, -i, z], [z, -i, z, z], [i, z, z, z]]),
        "g": backend.array(
            [[z, z, half, z], [z, z, z, half], [half, z, z, z], [z, half, z, z]]
        ),
    }


def standard_flat(n: int, backend: Backend = EXACT) -> FlatHK:
    """Flat hyperkaehler structure on C^2n, n copies of the n = 1 block."""
    if n < 1:
        raise ValueError("n must be positive")
    blocks = _unit_blocks(backend)
    return FlatHK(
        n=n,
        I=_embed_pairs(blocks["I"], n, backend),
        J=_embed_pairs(blocks["J"], n, backend),
        K=_embed_pairs(blocks["K"], n, backend),
        g=_embed_pairs(blocks["g"], n, backend),
        backend=backend,
    )


def structure_coefficients(chart: str, zeta, backend: Backend = EXACT) -> tuple:
    """(a, b, c) on the unit sphere for the complex structure aI + bJ + cK."""
    zeta = backend.convert(zeta)
    r2 = backend.abs2(zeta)
    d = backend.one + r2
    zbar = backend.conj(zeta)
    i = backend.i
    if chart == "U0":
        a, b, c = backend.one - r2, zeta + zbar, i * (zbar - zeta)
    elif chart == "U1":
        a, b, c = r2 - backend.one, zeta + zbar, i * (zeta - zbar)
    else:
        raise ValueError(f"unknown chart {chart!r}")
    return a / d, b / d, c / d


def structure_at(hk: FlatHK, chart: str, zeta) -> np.ndarray:
    a, b, c = structure_coefficients(chart, zeta, hk.backend)
    return hk.I * a + hk.J * b + hk.K * c


def omega_family(hk: FlatHK) -> OmegaFamily:
    return OmegaFamily(W1=hk.I.T @ hk.g, W2=hk.J.T @ hk.g, W3=hk.K.T @ hk.g)


def omega_at(hk: FlatHK, chart: str, zeta) -> np.ndarray:
    """Holomorphic symplectic form on the fiber over zeta, as an O(2)-valued pencil.

    U0: (W2 + iW3) - 2 zeta W1 - zeta^2 (W2 - iW3)
    U1: zeta^2 (W2 + iW3) - 2 zeta W1 - (W2 - iW3)
    """
    bk = hk.backend
    zeta = bk.convert(zeta)
    fam = omega_family(hk)
    plus = fam.W2 + fam.W3 * bk.i
    minus = fam.W2 - fam.W3 * bk.i
    two_zeta = zeta + zeta
    if chart == "U0":
        return plus - fam.W1 * two_zeta - minus * (zeta * zeta)
    if chart == "U1":
        return plus * (zeta * zeta) - fam.W1 * two_zeta - minus
    raise ValueError(f"unknown chart {chart!r}")


def fiber_jacobian(n: int, chart: str, zeta, backend: Backend = EXACT) -> np.ndarray:
    """Complexified Jacobian of the fiber map of phi.

    Rows are (w, wbar) components, columns (z, zbar) components.
    """
    zeta = backend.convert(zeta)
    zbar = backend.conj(zeta)
    i = backend.i
    o, z = backend.one, backend.zero
    d = backend.one + backend.abs2(zeta)
    if chart == "U0":
        block = [
            [o, z, z, i * zeta],
            [z, o, -i * zeta, z],
            [z, -i * zbar, o, z],
            [i * zbar, z, z, o],
        ]
    elif chart == "U1":
        block = [
            [zbar, z, z, i],
            [z, zbar, -i, z],
            [z, -i, zeta, z],
            [i, z, z, zeta],
        ]
    else:
        raise ValueError(f"unknown chart {chart!r}")
    inv_d = backend.one / d
    return _embed_pairs(backend.array(block) * inv_d, n, backend)


def _pairwise(fiber: np.ndarray, fn) -> np.ndarray:
    out = []
    for k in range(len(fiber) // 2):
        out.extend(fn(fiber[2 * k], fiber[2 * k + 1]))
    return out


def phi_forward(n: int, point: TwistorPoint) -> TwistorPoint:
    """Point of the sum of 2n copies of O(1) to the corresponding point of C^2n x CP^1.

    U0: w1 = (z1 + i zeta conj(z2)) / (1 + |zeta|^2),
        w2 = (z2 - i zeta conj(z1)) / (1 + |zeta|^2), per pair.
    """
    bk = point.backend
    if point.fiber.shape != (2 * n,):
        raise ValueError(f"fiber must have length {2 * n}")
    zeta, zbar, i = point.zeta, bk.conj(point.zeta), bk.i
    inv_d = bk.one / (bk.one + bk.abs2(zeta))
    c = bk.conj

    if point.chart == "U0":
        def step(z1, z2):
            return (z1 + i * zeta * c(z2)) * inv_d, (z2 - i * zeta * c(z1)) * inv_d
    else:
        def step(z1, z2):
            return (zbar * z1 + i * c(z2)) * inv_d, (zbar * z2 - i * c(z1)) * inv_d

    return TwistorPoint(point.chart, zeta, _pairwise(point.fiber, step), bk)


def phi_inverse(n: int, point: TwistorPoint) -> TwistorPoint:
    """Inverse of the real-linear fiber map of ``phi_forward``.

    U0: z1 = w1 - i zeta conj(w2), z2 = w2 + i zeta conj(w1);
    U1: z1 = zeta w1 - i conj(w2), z2 = zeta w2 + i conj(w1).
    """
    bk = point.backend
    if point.fiber.shape != (2 * n,):
        raise ValueError(f"fiber must have length {2 * n}")
    zeta, i, c = point.zeta, bk.i, bk.conj

    if point.chart == "U0":
        def step(w1, w2):
            return w1 - i * zeta * c(w2), w2 + i * zeta * c(w1)
    else:
        def step(w1, w2):
            return zeta * w1 - i * c(w2), zeta * w2 + i * c(w1)

    return TwistorPoint(point.chart, zeta, _pairwise(point.fiber, step), bk)


def intertwine_residual(hk: FlatHK, zeta, chart: str = "U0") -> float:
    """Max-abs entry of I(zeta) Jac(zeta) - Jac(zeta) diag(i, ..., -i, ...)."""
    bk = hk.backend
    jac = fiber_jacobian(hk.n, chart, zeta, bk)
    standard = bk.zeros((4 * hk.n, 4 * hk.n))
    for k in range(4 * hk.n):
        standard[k, k] = bk.i if k < 2 * hk.n else -bk.i
    return bk.max_abs(structure_at(hk, chart, zeta) @ jac - jac @ standard)


def quaternionic_from_tau(n: int, backend: Backend = EXACT) -> QuaternionicData:
    """Matrix A of the real structure tau: [[0, -i], [i, 0]] on each pair."""
    i, z = backend.i, backend.zero
    A = backend.zeros((2 * n, 2 * n))
    for k in range(n):
        A[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = backend.array([[z, -i], [i, z]])
    return check_quaternionic(A, backend)


def tau_apply(point: TwistorPoint) -> TwistorPoint:
    """Apply the real structure of the flat twistor space to a point.

    A U0 point with coordinate zeta0 lands in U1 with coordinate -conj(zeta0),
    the antipodal point; applying it twice is the identity.
    """
    n = len(point.fiber) // 2
    Q = quaternionic_from_tau(n, point.backend)
    chart, zeta, fiber = tau_point(Q, point.chart, point.zeta, point.fiber)
    return TwistorPoint(chart, zeta, fiber, point.backend)


def real_section_from_point(x, y, backend: Backend = EXACT) -> SectionAB:
    """Real section through (x, y): a = (x, y), b = (-i conj(y), i conj(x)), interleaved per pair."""
    x = backend.array(x)
    y = backend.array(y)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    i, c = backend.i, backend.conj
    a, b = [], []
    for xk, yk in zip(x, y):
        a.extend([xk, yk])
        b.extend([-i * c(yk), i * c(xk)])
    return SectionAB(a, b, backend)


def deterministic_zetas(count: int = 12, backend: Backend = EXACT, seed: int = 0) -> list:
    """Fixed sample points padded with seeded random ones."""
    pts = [backend.from_parts(re, im) for re, im in FIXED_ZETAS[:count]]
    rng = SplitMix64(seed)
    while len(pts) < count:
        pts.append(rng.scalar(backend, bound=3))
    return pts


def restrict_omega(hk: FlatHK, samples: list | None = None, tol: float = 1e-12) -> np.ndarray:
    """Constant skew matrix of omega on constant sections of T_F s(-1).

    In U0 the frame vectors dz0^a are pushed through the fiber Jacobian; in U1
    they are zeta1 * dz1^a and the value is divided by the O(2) factor zeta1^2.

    Raises:
        NotConstant: If the samples disagree.
    """
    bk = hk.backend
    m = 2 * hk.n
    samples = samples if samples is not None else [
        ("U0", z) for z in deterministic_zetas(4, bk)
    ] + [("U1", z) for z in deterministic_zetas(4, bk)[1:]]
    values = []
    for chart, zeta in samples:
        zeta = bk.convert(zeta)
        frame = fiber_jacobian(hk.n, chart, zeta, bk)[:, :m]
        if chart == "U1":
            if bk.is_zero(zeta):
                continue
            frame = frame * zeta
        value = frame.T @ omega_at(hk, chart, zeta) @ frame
        if chart == "U1":
            value = value * (bk.one / (zeta * zeta))
        values.append(value)
    reference = values[0]
    spread = max(bk.max_abs(v - reference) for v in values)
    if (bk.exact and spread > 0) or spread > tol:
        raise NotConstant(f"omega restricted to the fiber varies by {spread:.3e}")
    logger.debug("restrict_omega: %d samples, spread %.3e", len(values), spread)
    return reference


def hk_invariant_residuals(hk: FlatHK) -> dict[str, float]:
    bk = hk.backend
    eye = bk.eye(4 * hk.n)
    I, J, K, g = hk.I, hk.J, hk.K, hk.g
    fam = omega_family(hk)
    return {
        "I_squared": bk.max_abs(I @ I + eye),
        "J_squared": bk.max_abs(J @ J + eye),
        "K_squared": bk.max_abs(K @ K + eye),
        "IJ_minus_K": bk.max_abs(I @ J - K),
        "JI_plus_K": bk.max_abs(J @ I + K),
        "g_symmetric": bk.max_abs(g - g.T),
        "g_I_invariant": bk.max_abs(I.T @ g @ I - g),
        "g_J_invariant": bk.max_abs(J.T @ g @ J - g),
        "g_K_invariant": bk.max_abs(K.T @ g @ K - g),
        "omega_skew": max(bk.max_abs(W + W.T) for W in (fam.W1, fam.W2, fam.W3)),
    }


def _antiholomorphic_vectors(S: np.ndarray, backend: Backend) -> list[np.ndarray]:
    """Basis of the -i eigenspace of S."""
    shifted = S + backend.eye(S.shape[0]) * backend.i
    if backend.exact:
        return [backend.array(v) for v in exact_kernel(dense_to_sparse(shifted), shifted.shape)]
    _, sing, vh = np.linalg.svd(shifted)
    return [vh[k].conj() for k in range(len(sing)) if sing[k] < 1e-9]


def type_20_residual(hk: FlatHK, chart: str, zeta) -> float:
    """Max of |omega(v, .)| over (0,1)-vectors v of the structure at zeta."""
    S = structure_at(hk, chart, zeta)
    W = omega_at(hk, chart, zeta)
    vecs = _antiholomorphic_vectors(S, hk.backend)
    return max((hk.backend.max_abs(v @ W) for v in vecs), default=0.0)


def check_battery(n: int, backend: Backend = EXACT, samples: int = 12, seed: int = 7,
                  tol: float = FLOAT_TOL) -> dict:
    """Run the invariant battery of the flat model and collect max residuals."""
    hk = standard_flat(n, backend)
    zetas = deterministic_zetas(samples, backend, seed)
    rng = SplitMix64(seed)
    residuals = dict(hk_invariant_residuals(hk))

    def worst(values):
        return max(values, default=0.0)

    residuals["structure_squared"] = worst(
        backend.max_abs(structure_at(hk, ch, z) @ structure_at(hk, ch, z) + backend.eye(4 * n))
        for ch in CHARTS for z in zetas
    )
    residuals["sphere"] = worst(
        _sphere_defect(structure_coefficients(ch, z, backend), backend)
        for ch in CHARTS for z in zetas
    )
    residuals["type_20"] = worst(type_20_residual(hk, ch, z) for ch in CHARTS for z in zetas)
    residuals["chart_law"] = worst(
        backend.max_abs(omega_at(hk, "U0", z) - omega_at(hk, "U1", backend.one / z) * (z * z))
        for z in zetas if not backend.is_zero(z)
    )
    residuals["intertwine"] = worst(
        intertwine_residual(hk, z, ch) for ch in CHARTS for z in zetas
    )
    residuals["jacobian_det"] = worst(
        backend.magnitude(
            det(fiber_jacobian(n, "U0", z, backend), backend)
            - _power_inverse(backend.one + backend.abs2(z), 2 * n, backend)
        )
        for z in zetas
    )

    roundtrip, involution, real_fixed = [], [], []
    Q = quaternionic_from_tau(n, backend)
    for _ in range(samples):
        chart = rng.choice(CHARTS)
        pt = TwistorPoint(chart, rng.scalar(backend, 3), rng.vector(backend, 2 * n, 3), backend)
        back = phi_inverse(n, phi_forward(n, pt))
        roundtrip.append(backend.max_abs(back.fiber - pt.fiber))
        twice = tau_apply(tau_apply(pt))
        involution.append(
            backend.max_abs(twice.fiber - pt.fiber) + backend.magnitude(twice.zeta - pt.zeta)
        )
        s = real_section_from_point(rng.vector(backend, n, 3), rng.vector(backend, n, 3), backend)
        real_fixed.append(0.0 if is_real_section(Q, s, tol) else 1.0)
    residuals["phi_roundtrip"] = worst(roundtrip)
    residuals["tau_involution"] = worst(involution)
    residuals["real_sections"] = worst(real_fixed)

    try:
        restrict_omega(hk, tol=tol)
        residuals["omega_constancy"] = 0.0
    except NotConstant:
        residuals["omega_constancy"] = 1.0

    limit = 0.0 if backend.exact else tol
    failures = sorted(k for k, v in residuals.items() if v > limit)
    return {
        "n": n,
        "backend": backend.name,
        "samples": samples,
        "seed": seed,
        "residuals": residuals,
        "failures": failures,
        "passed": not failures,
    }


def _power_inverse(x, k: int, backend: Backend):
    out = backend.one
    for _ in range(k):
        out = out * x
    return backend.one / out


def _sphere_defect(abc: tuple, backend: Backend) -> float:
    a, b, c = abc
    return backend.magnitude(a * a + b * b + c * c - backend.one)
