"""Linear algebra kernels for both scalar backends.

Exact computations go through ``sympy``'s ``DomainMatrix``: systems whose
entries are all real rationals are solved over QQ, the rest over QQ_I.
Float computations use ``numpy.linalg``.
"""

from typing import Mapping

import numpy as np
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from twistorkit.errors import DimensionMismatch, SingularP
from twistorkit.scalars import EXACT, Backend

SparseRows = Mapping[int, Mapping[int, object]]


def _domain_matrix(rows: SparseRows, shape: tuple[int, int]) -> DomainMatrix:
    real = all(not bool(v.y) for row in rows.values() for v in row.values())
    if real:
        dod = {
            i: {j: v.x for j, v in row.items() if bool(v)}
            for i, row in rows.items()
        }
        domain = QQ
    else:
        dod = {i: {j: v for j, v in row.items() if bool(v)} for i, row in rows.items()}
        domain = QQ_I
    dod = {i: row for i, row in dod.items() if row}
    return DomainMatrix.from_dod(dod, shape, domain)


def _to_gaussian(value, domain):
    return QQ_I(value, 0) if domain == QQ else value


def dense_to_sparse(matrix: np.ndarray) -> dict[int, dict[int, object]]:
    rows: dict[int, dict[int, object]] = {}
    for i, row in enumerate(matrix):
        nz = {j: v for j, v in enumerate(row) if bool(v)}
        if nz:
            rows[i] = nz
    return rows


def exact_rank(rows: SparseRows, shape: tuple[int, int]) -> int:
    """Rank of a sparse Gaussian-rational system."""
    if not rows or shape[1] == 0:
        return 0
    return _domain_matrix(rows, shape).rank()


def exact_kernel(rows: SparseRows, shape: tuple[int, int]) -> list[list[object]]:
    """Canonical kernel basis of a sparse Gaussian-rational system.

    Args:
        rows (SparseRows): Nonzero entries as ``{row: {col: value}}``.
        shape (tuple[int, int]): Number of equations and unknowns.

    Returns:
        list[list]: Basis vectors in reduced row echelon form with respect to
        the column order of the system, so the result does not depend on the
        elimination path.
    """
    nrows, ncols = shape
    if ncols == 0:
        return []
    if not rows:
        return [
            [QQ_I(1, 0) if i == j else QQ_I(0, 0) for j in range(ncols)]
            for i in range(ncols)
        ]
    dm = _domain_matrix(rows, shape)
    reduced, pivots = dm.rref()
    null = reduced.nullspace_from_rref(pivots)
    if null.shape[0] == 0:
        return []
    canonical, _ = null.rref()
    domain = canonical.domain
    return [
        [_to_gaussian(v, domain) for v in row]
        for row in canonical.to_list()
        if any(bool(v) for v in row)
    ]


def det(matrix: np.ndarray, backend: Backend):
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    if backend.exact:
        if n == 0:
            return backend.one
        dm = DomainMatrix([list(r) for r in matrix], (n, n), QQ_I)
        return dm.det()
    return complex(np.linalg.det(matrix.astype(np.complex128)))


def inv(matrix: np.ndarray, backend: Backend, tol: float = 1e-12) -> np.ndarray:
    """Inverse of a constant square matrix.

    Raises:
        SingularP: If the matrix is singular (exactly, or to within ``tol``
        relative conditioning on the float backend).
    """
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    if backend.exact:
        if not bool(det(matrix, backend)):
            raise SingularP("matrix is singular")
        dm = DomainMatrix([list(r) for r in matrix], (n, n), QQ_I)
        return backend.array(dm.inv().to_list())
    m = matrix.astype(np.complex128)
    if np.linalg.cond(m) * tol > 1.0:
        raise SingularP("matrix is numerically singular")
    return np.linalg.inv(m)


def rank(matrix: np.ndarray, backend: Backend, tol: float = 1e-10) -> int:
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0
    if backend.exact:
        return exact_rank(dense_to_sparse(matrix), matrix.shape)
    return int(np.linalg.matrix_rank(matrix.astype(np.complex128), tol=tol))


def realify_columns(columns: list[np.ndarray], backend: Backend) -> np.ndarray:
    """Stack complex column vectors as a real matrix [Re; Im] (entries kept as scalars)."""
    cols = []
    for col in columns:
        re = [backend.real(v) for v in col]
        im = [backend.imag(v) for v in col]
        cols.append(re + im)
    return backend.array(cols).T


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[-1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def conj_transpose(matrix: np.ndarray, backend: Backend) -> np.ndarray:
    return backend.conj_array(matrix).T


def max_abs_diff(a: np.ndarray, b: np.ndarray, backend: Backend) -> float:
    return backend.max_abs(np.asarray(a) - np.asarray(b))


def is_zero_matrix(matrix: np.ndarray, backend: Backend, tol: float = 0.0) -> bool:
    if backend.exact:
        return all(not bool(v) for v in np.asarray(matrix).ravel())
    return backend.max_abs(matrix) <= tol


def positive_definite(herm: np.ndarray, backend: Backend, tol: float = 1e-12) -> bool:
    """Positive-definiteness of a Hermitian matrix.

    Exact matrices use Sylvester's criterion on the leading principal minors,
    float matrices the smallest eigenvalue.
    """
    n = herm.shape[0]
    if backend.exact:
        for k in range(1, n + 1):
            minor = det(herm[:k, :k], backend)
            if not backend.is_positive_real(minor):
                return False
        return True
    eig = np.linalg.eigvalsh(np.asarray(herm, dtype=np.complex128))
    return bool(eig.min() > tol)


def block_diag(blocks: list[np.ndarray], backend: Backend = EXACT) -> np.ndarray:
    size = sum(b.shape[0] for b in blocks)
    out = backend.zeros((size, size))
    k = 0
    for b in blocks:
        m = b.shape[0]
        out[k : k + m, k : k + m] = b
        k += m
    return out
