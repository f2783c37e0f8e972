import numpy as np
import pytest

from twistorkit.errors import DimensionMismatch, SingularP
from twistorkit.linalg import (
    block_diag,
    dense_to_sparse,
    det,
    exact_kernel,
    exact_rank,
    inv,
    is_zero_matrix,
    matmul,
    positive_definite,
    rank,
)
from twistorkit.scalars import EXACT, FLOAT


def test_kernel_is_in_reduced_echelon_form(gaussian):
    """Tests the exact kernel basis of a small system."""
    # x0 + x2 = 0, x1 - i x2 = 0
    M = EXACT.array([[1, 0, 1], [0, 1, gaussian(0, -1)]])
    kernel = exact_kernel(dense_to_sparse(M), M.shape)
    assert kernel == [[EXACT.one, gaussian(0, -1), gaussian(-1, 0)]]
    (v,) = kernel
    residual = M @ EXACT.array(v)
    assert is_zero_matrix(residual, EXACT)


def test_kernel_does_not_depend_on_row_order():
    """Tests that row order does not change the kernel basis."""
    M = EXACT.array([[1, 2, 0, 1], [0, 0, 1, 3]])
    swapped = M[::-1]
    assert exact_kernel(dense_to_sparse(M), M.shape) == exact_kernel(
        dense_to_sparse(swapped), swapped.shape
    )


def test_empty_system_gives_standard_basis():
    """Tests the kernel of a system with no rows."""
    kernel = exact_kernel({}, (0, 3))
    assert kernel == [list(row) for row in EXACT.eye(3)]


def test_rank_over_rationals_and_gaussian_rationals(gaussian):
    """Tests rank over Q, Q(i) and floats."""
    real = EXACT.array([[1, 2], [2, 4]])
    assert exact_rank(dense_to_sparse(real), real.shape) == 1
    cplx = EXACT.array([[1, gaussian(0, 1)], [gaussian(0, 1), -1]])
    assert rank(cplx, EXACT) == 1
    assert rank(FLOAT.array([[1, 0], [0, 1e-3]]), FLOAT) == 2


def test_det_and_inverse(gaussian):
    """Tests det and inverse of an exact matrix."""
    M = EXACT.array([[2, gaussian(0, 1)], [0, "1/2"]])
    assert det(M, EXACT) == EXACT.one
    assert is_zero_matrix(M @ inv(M, EXACT) - EXACT.eye(2), EXACT)


def test_singular_inverse_raises():
    """Tests that singular matrices raise SingularP."""
    with pytest.raises(SingularP):
        inv(EXACT.array([[1, 2], [2, 4]]), EXACT)
    with pytest.raises(SingularP):
        inv(FLOAT.array([[1, 1], [1, 1]]), FLOAT)


def test_positive_definite(gaussian):
    """Tests the Hermitian positive definiteness check."""
    assert positive_definite(EXACT.array([[2, gaussian(0, 1)], [gaussian(0, -1), 1]]), EXACT)
    assert not positive_definite(EXACT.array([[1, 0], [0, -1]]), EXACT)
    assert positive_definite(FLOAT.array([[1, 0], [0, 2]]), FLOAT)


def test_block_diag_and_matmul_shapes():
    """Tests block_diag and the matmul shape check."""
    B = block_diag([EXACT.eye(2), EXACT.array([[3]])])
    assert B.shape == (3, 3)
    assert B[2, 2] == EXACT.convert(3)
    with pytest.raises(DimensionMismatch):
        matmul(np.zeros((2, 3)), np.zeros((2, 3)))
