"""Recover the hyperkaehler structure of the real-section space from twistor data.

A real section of the sum of 2n copies of O(1) is zeta -> a - zeta j(a), so the
real-section space is parameterized by a in C^2n and its tangent vectors by the
same a. Everything here works with that parameter directly.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from tqdm import tqdm
from tqdm.contrib.concurrent import thread_map

from twistorkit.errors import (
    BackendError,
    DimensionMismatch,
    NoAdmissiblePhase,
    NotReal,
    TwistorkitError,
    ZeroParameter,
)
from twistorkit.linalg import conj_transpose, positive_definite, rank, realify_columns
from twistorkit.quaternionic import QuaternionicData, apply_j
from twistorkit.rng import SplitMix64
from twistorkit.scalars import EXACT, FLOAT, Backend
from twistorkit.twistor_flat import quaternionic_from_tau, restrict_omega, standard_flat

logger = logging.getLogger(__name__)

STRUCTURES = ("I", "J", "K")
METRIC_IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TwistorData:
    """Quaternionic matrix A with the phase-normalized fiber form Omega."""

    n: int
    Q: QuaternionicData
    Omega: np.ndarray
    mu: object = None
    backend: Backend = EXACT

    def __post_init__(self):
        Omega = self.backend.array(self.Omega)
        if Omega.shape != (2 * self.n, 2 * self.n) or self.Q.dim != 2 * self.n:
            raise DimensionMismatch(
                f"Omega {Omega.shape} and A {self.Q.A.shape} do not match n={self.n}"
            )
        object.__setattr__(self, "Omega", Omega)
        if self.mu is None:
            object.__setattr__(self, "mu", self.backend.one)

    def compatibility_residual(self) -> float:
        """Max-abs entry of A^T conj(Omega) + Omega conj(A)."""
        bk = self.backend
        return bk.max_abs(self.Q.A.T @ bk.conj_array(self.Omega) + self.Omega @ self.Q.A_bar)

    def to_float(self) -> "TwistorData":
        if not self.backend.exact:
            return self
        conv = np.vectorize(EXACT.to_complex, otypes=[np.complex128])
        Q = QuaternionicData(conv(self.Q.A), FLOAT)
        return TwistorData(self.n, Q, conv(self.Omega), EXACT.to_complex(self.mu), FLOAT)


@dataclass(frozen=True, eq=False)
class TangentVec:
    """Tangent vector of the real-section space, stored as its a-parameter."""

    a: np.ndarray
    backend: Backend = field(default=EXACT)

    def __post_init__(self):
        object.__setattr__(self, "a", self.backend.array(self.a))


def _coords(D: TwistorData, v) -> np.ndarray:
    a = v.a if isinstance(v, TangentVec) else D.backend.array(v)
    if a.shape != (2 * D.n,):
        raise DimensionMismatch(f"tangent vector must have length {2 * D.n}, got {a.shape}")
    return a


def normalize_symplectic_phase(Omega_raw, Q: QuaternionicData, tol: float = 1e-12):
    """Find the unit phase mu making H(a, b) = -a^T (mu Omega_raw) conj(A) conj(b) Hermitian positive-definite.

    The candidate is mu = conj(t)/|t| with t = trace(-Omega_raw conj(A)); the
    Hermitian and definiteness tests run on conj(t) times that matrix so no
    square root is taken before the phase is known to exist.

    Args:
        Omega_raw: Skew matrix from ``restrict_omega``.
        Q (QuaternionicData): The real structure.
        tol (float): Tolerance of the float backend.

    Returns:
        tuple: ``(mu, Omega)`` with ``Omega = mu * Omega_raw``.

    Raises:
        NoAdmissiblePhase: If no unit phase works.
        BackendError: If the phase exists but |t| is irrational (exact backend).
    """
    bk = Q.backend
    Omega_raw = bk.array(Omega_raw)
    G = -(Omega_raw @ Q.A_bar)
    t = G[0, 0]
    for k in range(1, G.shape[0]):
        t = t + G[k, k]
    if bk.is_zero(t, tol):
        raise NoAdmissiblePhase("trace of the Hermitian candidate vanishes")
    scaled = G * bk.conj(t)
    herm_defect = bk.max_abs(scaled - conj_transpose(scaled, bk))
    if herm_defect > (0.0 if bk.exact else tol * bk.magnitude(t)):
        raise NoAdmissiblePhase(f"no unit phase makes the form Hermitian (defect {herm_defect:.3e})")
    if not positive_definite(scaled, bk, tol):
        raise NoAdmissiblePhase("Hermitian form is not definite for any unit phase")
    modulus = bk.sqrt_abs2(t)
    if modulus is None:
        raise BackendError("admissible phase is not a Gaussian rational; use the float backend")
    mu = bk.conj(t) / modulus
    logger.info("normalized symplectic phase mu=%s", mu)
    return mu, Omega_raw * mu


def flat_twistor_data(n: int, backend: Backend = EXACT) -> TwistorData:
    """Twistor data of flat C^2n: A from the real structure, Omega from the fiber form."""
    hk = standard_flat(n, backend)
    Q = quaternionic_from_tau(n, backend)
    mu, Omega = normalize_symplectic_phase(restrict_omega(hk), Q)
    return TwistorData(n, Q, Omega, mu, backend)


def omega(D: TwistorData, u, v):
    return u @ D.Omega @ v


def tangent_cs(D: TwistorData, alpha, beta, a) -> TangentVec:
    """Complex structure I_{alpha, beta} on tangent vectors.

    b = [i(|alpha|^2 - |beta|^2) a - 2i conj(alpha) beta j(a)] / (|alpha|^2 + |beta|^2)

    Raises:
        ZeroParameter: If alpha = beta = 0.
    """
    bk = D.backend
    alpha, beta = bk.convert(alpha), bk.convert(beta)
    a = _coords(D, a)
    if bk.is_zero(alpha) and bk.is_zero(beta):
        raise ZeroParameter("(alpha, beta) = (0, 0) does not define a complex structure")
    if bk.is_zero(beta):
        return TangentVec(a * bk.i, bk)
    na, nb = bk.abs2(alpha), bk.abs2(beta)
    ja = apply_j(D.Q, a)
    two_i = bk.i + bk.i
    b = (a * (bk.i * (na - nb)) - ja * (two_i * bk.conj(alpha) * beta)) * (bk.one / (na + nb))
    return TangentVec(b, bk)


def apply_structure(D: TwistorData, which: str, a) -> TangentVec:
    """I a = i a, J a = j(a), K a = I(J a) = i j(a)."""
    bk = D.backend
    a = _coords(D, a)
    if which == "I":
        return TangentVec(a * bk.i, bk)
    if which == "J":
        return TangentVec(apply_j(D.Q, a), bk)
    if which == "K":
        return TangentVec(apply_j(D.Q, a) * bk.i, bk)
    raise ValueError(f"unknown structure {which!r}")


def metric(D: TwistorData, a, b, tol: float = METRIC_IMAG_TOL):
    """g(a, b) = -omega(a, j(b)) - omega(b, j(a)).

    Raises:
        NotReal: If the value has an imaginary part (Omega not normalized).
    """
    bk = D.backend
    a, b = _coords(D, a), _coords(D, b)
    value = -omega(D, a, apply_j(D.Q, b)) - omega(D, b, apply_j(D.Q, a))
    im = bk.magnitude(bk.imag(value))
    if (bk.exact and im > 0) or im > tol:
        raise NotReal(f"metric has imaginary part {im:.3e}")
    return bk.real(value)


def psi(D: TwistorData, zeta, a, b):
    """psi_zeta(a, b) = omega(a - zeta j(a), b - zeta j(b))."""
    bk = D.backend
    zeta = bk.convert(zeta)
    a, b = _coords(D, a), _coords(D, b)
    u = a - apply_j(D.Q, a) * zeta
    v = b - apply_j(D.Q, b) * zeta
    return omega(D, u, v)


def kahler(D: TwistorData, which: str, a, b, tol: float = METRIC_IMAG_TOL):
    """omega_S(a, b) = g(S a, b)."""
    return metric(D, apply_structure(D, which, a), b, tol)


def kahler_from_psi(D: TwistorData, which: str, a, b):
    bk = D.backend
    half = bk.one / bk.convert(2)
    p1 = psi(D, bk.one, a, b)
    m1 = psi(D, -bk.one, a, b)
    if which == "I":
        return -(bk.i * half) * (m1 - p1)
    if which == "J":
        return -(p1 + m1) * half
    if which == "K":
        p0 = psi(D, bk.zero, a, b)
        return -bk.i * ((p1 + m1) * half - (p0 + p0))
    raise ValueError(f"unknown structure {which!r}")


def involution(D: TwistorData, a, b) -> tuple[np.ndarray, np.ndarray]:
    """(a, b) -> (j(b), -j(a)); its fixed set is the real sections."""
    a, b = _coords(D, a), _coords(D, b)
    return apply_j(D.Q, b), -apply_j(D.Q, a)


def evaluate_real_section(D: TwistorData, chart: str, zeta, a) -> np.ndarray:
    """Value of the real section with parameter a over zeta."""
    bk = D.backend
    zeta = bk.convert(zeta)
    a = _coords(D, a)
    ja = apply_j(D.Q, a)
    if chart == "U0":
        return a - ja * zeta
    if chart == "U1":
        return a * zeta - ja
    raise ValueError(f"unknown chart {chart!r}")


def _real_frame(D: TwistorData) -> list[np.ndarray]:
    bk = D.backend
    eye = bk.eye(2 * D.n)
    return [eye[:, k] * unit for unit in (bk.one, bk.i) for k in range(2 * D.n)]


def real_injectivity_rank(D: TwistorData, zeta, chart: str = "U0") -> int:
    """Real rank of a -> value of its real section over zeta; 4n means injective."""
    images = [evaluate_real_section(D, chart, zeta, e) for e in _real_frame(D)]
    return rank(realify_columns(images, D.backend), D.backend)


def metric_gram(D: TwistorData, tol: float = METRIC_IMAG_TOL) -> np.ndarray:
    """Gram matrix of g on the real frame (e_1, ..., e_2n, i e_1, ..., i e_2n)."""
    frame = _real_frame(D)
    return D.backend.array([[metric(D, u, v, tol) for v in frame] for u in frame])


FormField = Callable[[np.ndarray, np.ndarray, np.ndarray], complex]


def exterior_derivative_fd(form: FormField, base, X, Y, Z, step: float = 1e-5) -> complex:
    """Central-difference d(omega)(X, Y, Z) for a 2-form field on the real-section space.

    ``form(point, u, v)`` evaluates the field at ``point``; X, Y and Z are
    constant vector fields, so the bracket terms vanish.
    """
    base = np.asarray(base, dtype=np.complex128)
    X, Y, Z = (np.asarray(v, dtype=np.complex128) for v in (X, Y, Z))

    def derivative(direction, u, v):
        hi = form(base + step * direction, u, v)
        lo = form(base - step * direction, u, v)
        return (hi - lo) / (2 * step)

    return derivative(X, Y, Z) - derivative(Y, X, Z) + derivative(Z, X, Y)


def kahler_field(D: TwistorData | Callable[[np.ndarray], TwistorData], which: str) -> FormField:
    """omega_S as a field on the real-section space (float evaluation).

    ``D`` is either fixed twistor data or a map from the parameter of the real
    section through a point to the twistor data there. Fixed data gives a
    translation-invariant form.
    """
    fixed = D.to_float() if isinstance(D, TwistorData) else None

    def field_at(point, u, v):
        data = fixed if fixed is not None else D(np.asarray(point)).to_float()
        return complex(kahler(data, which, u, v))

    return field_at


@dataclass(frozen=True)
class _Sample:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    alpha: object
    beta: object
    lam: object
    zeta: object


def _draw_samples(D: TwistorData, count: int, seed: int) -> list[_Sample]:
    rng = SplitMix64(seed)
    bk = D.backend
    dim = 2 * D.n
    return [
        _Sample(
            a=rng.vector(bk, dim, 3),
            b=rng.vector(bk, dim, 3),
            c=rng.vector(bk, dim, 3),
            alpha=rng.nonzero_scalar(bk, 3),
            beta=rng.scalar(bk, 3),
            lam=rng.nonzero_scalar(bk, 3),
            zeta=rng.scalar(bk, 3),
        )
        for _ in range(count)
    ]


def _sample_residuals(D: TwistorData, s: _Sample, tol: float, fd_step: float) -> tuple[dict, set]:
    bk = D.backend
    res: dict[str, float] = {}
    errors: set[str] = set()

    def put(name, value):
        res[name] = max(res.get(name, 0.0), value)

    def diff(u, v):
        return bk.max_abs(_coords(D, u) - _coords(D, v))

    S = {w: (lambda v, w=w: apply_structure(D, w, v)) for w in STRUCTURES}
    for w in STRUCTURES:
        put(f"{w}_squared", bk.max_abs(S[w](S[w](s.a)).a + s.a))
    put("IJ_equals_K", diff(S["I"](S["J"](s.a)), S["K"](s.a)))
    put("JI_equals_minus_K", bk.max_abs(S["J"](S["I"](s.a)).a + S["K"](s.a).a))

    pencil = tangent_cs(D, s.alpha, s.beta, tangent_cs(D, s.alpha, s.beta, s.a))
    put("pencil_squared", bk.max_abs(pencil.a + s.a))
    put(
        "scale_invariance",
        diff(tangent_cs(D, s.lam * s.alpha, s.lam * s.beta, s.a), tangent_cs(D, s.alpha, s.beta, s.a)),
    )
    b = tangent_cs(D, bk.one, s.zeta, s.a).a
    put(
        "fiber_structure",
        bk.max_abs(evaluate_real_section(D, "U0", s.zeta, b)
                   - evaluate_real_section(D, "U0", s.zeta, s.a) * bk.i),
    )
    put("injectivity", 0.0 if real_injectivity_rank(D, s.zeta) == 4 * D.n else 1.0)
    x, y = involution(D, *involution(D, s.a, s.b))
    put("involution", max(diff(x, s.a), diff(y, s.b)))
    fixed = involution(D, s.a, -apply_j(D.Q, s.a))
    put("involution_fixed", max(diff(fixed[0], s.a), diff(fixed[1], -apply_j(D.Q, s.a))))

    try:
        gab = metric(D, s.a, s.b, tol)
        put("metric_symmetry", bk.magnitude(gab - metric(D, s.b, s.a, tol)))
        gaa = metric(D, s.a, s.a, tol)
        positive = bk.is_positive_real(gaa, tol) or bk.max_abs(s.a) == 0.0
        put("metric_positive", 0.0 if positive else 1.0)
        for w in STRUCTURES:
            put(f"metric_compat_{w}", bk.magnitude(metric(D, S[w](s.a), S[w](s.b), tol) - gab))
            put(f"kahler_{w}", bk.magnitude(kahler(D, w, s.a, s.b, tol) - kahler_from_psi(D, w, s.a, s.b)))
            put(
                f"closed_{w}",
                abs(exterior_derivative_fd(
                    kahler_field(D, w), s.c, *(np.array([bk.to_complex(v) for v in u])
                                              for u in (s.a, s.b, s.c)), step=fd_step)),
            )
    except TwistorkitError as e:
        logger.debug("sample failed with %s: %s", e.name, e)
        errors.add(e.name)
    return res, errors


def verify_suite(
    D: TwistorData,
    samples: int = 100,
    seed: int = 7,
    tol: float = 1e-10,
    fd_step: float = 1e-5,
    fd_tolerance: float = 1e-6,
    workers: int = 1,
    progress: bool = False,
) -> dict:
    """Check the hyperkaehler identities of the recovered structure on random samples.

    Errors raised inside a sample (for instance NotReal from an unnormalized
    Omega) are reported as failures rather than propagated.

    Returns:
        dict: ``checks`` (max residual per check), ``failures`` (failing check
        and error names), ``passed``, plus the sampling parameters.
    """
    bk = D.backend
    drawn = _draw_samples(D, samples, seed)

    def run(sample):
        return _sample_residuals(D, sample, tol, fd_step)

    if workers > 1:
        results = thread_map(run, drawn, max_workers=workers, disable=not progress, desc="verify")
    else:
        results = [run(s) for s in tqdm(drawn, disable=not progress, desc="verify")]

    checks: dict[str, float] = {"hermitian_compatibility": D.compatibility_residual()}
    G = -(D.Omega @ D.Q.A_bar)
    checks["positive_definite"] = 0.0 if positive_definite(G, bk, tol) else 1.0
    errors: set[str] = set()
    for res, errs in results:
        errors |= errs
        for name, value in res.items():
            checks[name] = max(checks.get(name, 0.0), value)

    limit = 0.0 if bk.exact else tol
    failures = {
        name for name, value in checks.items()
        if value > (fd_tolerance if name.startswith("closed_") else limit)
    }
    failures |= errors
    return {
        "n": D.n,
        "backend": bk.name,
        "samples": samples,
        "seed": seed,
        "checks": dict(sorted(checks.items())),
        "failures": sorted(failures),
        "passed": not failures,
    }
