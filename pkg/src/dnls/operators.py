"""Dense matrix form of the linear lattice operator and its invertible shift.

The linear part of the equation acts on row-major flattened fields as a
T*K x T*K complex matrix with at most five nonzero entries per row (time
wraparound can merge or cancel entries for T <= 2, and K = 2 merges the two
space neighbours).  Subtracting a shift s strictly larger than the sup-induced
operator norm makes the matrix invertible; everything downstream (certificate
constants, fixed-point residuals, Jacobians) works with that shifted matrix,
its LU factorization, and its explicitly computed inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import SingularShift
from .lattice import LatticeParams

__all__ = ["linear_matrix", "operator_norm_sup", "ShiftedOperator", "build_shifted"]


def linear_matrix(params: LatticeParams) -> np.ndarray:
    """Dense matrix of the linear operator on row-major flattened fields.

    Entries accumulate, so wrapped neighbours that land on the same column
    (T <= 2 in time, K = 2 in space) merge automatically; in particular the
    time part cancels to zero for T in {1, 2}.
    """
    T, K = params.T, params.K
    dim = T * K
    mat = np.zeros((dim, dim), dtype=complex)
    ib = 1j * params.beta
    eps = params.epsilon
    for t in range(T):
        for k in range(K):
            row = t * K + k
            mat[row, ((t + 1) % T) * K + k] += ib
            mat[row, ((t - 1) % T) * K + k] -= ib
            mat[row, t * K + (k + 1) % K] += eps
            mat[row, t * K + (k - 1) % K] += eps
            mat[row, row] += -2.0 * eps
    return mat


def operator_norm_sup(matrix: np.ndarray) -> float:
    """Operator norm induced by the entrywise sup norm: max row sum of moduli.

    For the sup norm on complex vectors the induced norm of a matrix is the
    maximum over rows of the sum of entry moduli (the max-row-sum formula,
    attained by aligning the input phases against one row).
    """
    mat = np.asarray(matrix)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    return float(np.abs(mat).sum(axis=1).max())


@dataclass
class ShiftedOperator:
    """The shifted linear operator, factorized, with its certificate norms.

    Treated as immutable after ``build_shifted`` returns.  ``shift`` exceeds
    ``norm_linear`` strictly, which keeps ``shifted`` invertible;
    ``norm_shifted_inv`` comes from the explicitly formed inverse, not from a
    bound, because the certificate constants need the actual value.
    """

    params: LatticeParams
    dim: int
    matrix: np.ndarray
    shift: float
    shifted: np.ndarray
    lu: tuple
    inverse: np.ndarray
    norm_linear: float
    norm_shifted: float
    norm_shifted_inv: float

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the inverse of the shifted matrix to one vector or a stack
        of column vectors, via the stored LU factorization."""
        return scipy.linalg.lu_solve(self.lu, rhs)

    @cached_property
    def inverse_realified(self) -> np.ndarray:
        """Realified inverse, interleaved (Re, Im) layout, for Jacobians."""
        from .solver import realified_matrix

        return realified_matrix(self.inverse)


def build_shifted(params: LatticeParams, shift_factor: float = 1.5) -> ShiftedOperator:
    """Assemble the linear matrix and its shifted, factorized form.

    The shift is ``shift_factor * norm_linear`` (or ``shift_factor`` itself in
    the degenerate case of a zero linear norm), so any factor > 1 places the
    shift strictly beyond the operator norm and the spectrum.
    """
    if not shift_factor > 1.0:
        raise ValueError(f"shift_factor must exceed 1, got {shift_factor}")
    mat = linear_matrix(params)
    norm_linear = operator_norm_sup(mat)
    shift = shift_factor * norm_linear if norm_linear > 0.0 else float(shift_factor)
    shifted = mat - shift * np.eye(params.dim)
    try:
        lu = scipy.linalg.lu_factor(shifted)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - shift > norm prevents this
        raise SingularShift(f"factorization of the shifted operator failed: {exc}") from exc
    diag = np.abs(np.diag(lu[0]))
    if diag.min() <= 1e3 * np.finfo(float).eps * max(diag.max(), 1.0):  # pragma: no cover
        raise SingularShift("shifted operator is numerically singular despite shift > norm")
    inverse = scipy.linalg.lu_solve(lu, np.eye(params.dim, dtype=complex))
    return ShiftedOperator(
        params=params,
        dim=params.dim,
        matrix=mat,
        shift=float(shift),
        shifted=shifted,
        lu=lu,
        inverse=inverse,
        norm_linear=norm_linear,
        norm_shifted=operator_norm_sup(shifted),
        norm_shifted_inv=operator_norm_sup(inverse),
    )
