"""Matrix form of the linear part, sup operator norms, and the shifted solve."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dnls import (
    LatticeField,
    LatticeParams,
    apply_linear,
    build_shifted,
    linear_matrix,
    operator_norm_sup,
    random_field,
    sup_norm,
)
from dnls.solver import realified_matrix

RNG = np.random.default_rng(42)


def _params(T=4, K=4, beta=1.0, epsilon=1.0, gamma=1.0):
    return LatticeParams(T=T, K=K, beta=beta, epsilon=epsilon, gamma=gamma)


# ---------------------------------------------------------------------------
# matrix assembly


def test_matrix_frozen_smallest_lattice():
    # T = 1, K = 2: time differences cancel, laplacian doubles up
    mat = linear_matrix(_params(T=1, K=2))
    assert_allclose(mat, np.array([[-2.0, 2.0], [2.0, -2.0]]))


def test_matrix_agrees_with_apply_linear_on_basis():
    params = _params(T=3, K=4)
    mat = linear_matrix(params)
    n = params.dim
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        col = apply_linear(LatticeField.from_flat(e, 3, 4), params).flatten()
        assert_allclose(mat[:, j], col, atol=1e-15)


def test_matrix_agrees_with_apply_linear_on_random_fields():
    params = _params(T=5, K=3, beta=0.7, epsilon=1.3)
    mat = linear_matrix(params)
    for _ in range(100):
        phi = random_field(5, 3, RNG, 2.0)
        via_matrix = mat @ phi.flatten()
        via_stencil = apply_linear(phi, params).flatten()
        scale = max(np.max(np.abs(via_matrix)), 1.0)
        assert np.max(np.abs(via_matrix - via_stencil)) <= 1e-13 * scale


def test_matrix_is_sparse_stencil():
    mat = linear_matrix(_params(T=5, K=5))
    nonzeros_per_row = np.count_nonzero(mat, axis=1)
    assert np.all(nonzeros_per_row <= 5)

    # with T <= 2 the time couplings vanish entirely
    mat_short = linear_matrix(_params(T=2, K=5))
    assert np.all(np.count_nonzero(mat_short, axis=1) <= 3)


def test_matrix_annihilates_constants():
    mat = linear_matrix(_params(T=4, K=3))
    assert np.max(np.abs(mat @ np.ones(12))) <= 1e-14


def test_matrix_is_hermitian():
    mat = linear_matrix(_params(T=5, K=4, beta=0.3, epsilon=2.0))
    assert_allclose(mat, mat.conj().T, atol=1e-15)


# ---------------------------------------------------------------------------
# sup operator norm


def test_operator_norm_identity():
    assert operator_norm_sup(np.eye(7)) == pytest.approx(1.0)


def test_operator_norm_is_max_abs_row_sum():
    mat = RNG.normal(size=(6, 6)) + 1j * RNG.normal(size=(6, 6))
    expected = np.max(np.sum(np.abs(mat), axis=1))
    assert operator_norm_sup(mat) == pytest.approx(expected)


def test_operator_norm_attained_by_aligned_phases():
    # the norm is attained at a unit vector whose phases align one row's terms
    mat = RNG.normal(size=(5, 5)) + 1j * RNG.normal(size=(5, 5))
    row = int(np.argmax(np.sum(np.abs(mat), axis=1)))
    witness = np.exp(-1j * np.angle(mat[row]))
    attained = np.max(np.abs(mat @ witness))
    assert abs(attained - operator_norm_sup(mat)) <= 1e-13 * attained


@pytest.mark.parametrize(
    "T,K,expected",
    [
        (4, 4, 6.0),   # 2*beta + 4*epsilon
        (8, 8, 6.0),
        (2, 4, 4.0),   # time couplings cancel, leaving 4*epsilon
        (1, 2, 4.0),
    ],
)
def test_linear_norm_frozen_values(T, K, expected):
    # closed form: 2*beta + 4*epsilon once T >= 3; the time part cancels below
    params = _params(T=T, K=K)
    mat = linear_matrix(params)
    assert operator_norm_sup(mat) == pytest.approx(expected)


def test_linear_norm_never_exceeded_on_unit_fields():
    params = _params(T=3, K=5, beta=0.8, epsilon=1.1)
    bound = 2 * params.beta + 4 * params.epsilon
    rng = np.random.default_rng(100)
    worst = 0.0
    for _ in range(10_000):
        phi = random_field(3, 5, rng, 1.0)
        s = sup_norm(phi)
        if s == 0:
            continue
        out = sup_norm(apply_linear(phi, params)) / s
        worst = max(worst, out)
    assert worst <= bound * (1 + 1e-12)


# ---------------------------------------------------------------------------
# the shifted operator


def test_shifted_operator_frozen_values():
    op = build_shifted(_params(T=4, K=4), shift_factor=1.5)
    assert op.shift == pytest.approx(9.0)
    assert op.norm_linear == pytest.approx(6.0)
    assert op.norm_shifted == pytest.approx(15.0)
    # frozen from an independent inverse: max row sum of |(L - 9I)^-1| is 1/7
    assert op.norm_shifted_inv == pytest.approx(1.0 / 7.0, rel=1e-9)
    indep = operator_norm_sup(np.linalg.inv(op.shifted))
    assert op.norm_shifted_inv == pytest.approx(indep, rel=1e-12)


def test_shifted_solve_roundtrip():
    op = build_shifted(_params(T=5, K=3, beta=0.6, epsilon=0.9), shift_factor=2.0)
    for _ in range(20):
        b = RNG.normal(size=15) + 1j * RNG.normal(size=15)
        x = op.solve(b)
        back = op.shifted @ x
        assert np.max(np.abs(back - b)) <= 1e-10 * max(1.0, np.max(np.abs(b)))


def test_shifted_norms_are_consistent():
    op = build_shifted(_params(T=3, K=4), shift_factor=1.5)
    assert op.norm_shifted <= op.norm_linear + op.shift + 1e-12
    # ||A|| * ||A^-1|| >= 1 always
    assert op.norm_shifted * op.norm_shifted_inv >= 1.0 - 1e-12


def test_shifted_operator_bounded_below():
    # ||A phi|| >= ||phi|| / ||A^-1|| for every field
    op = build_shifted(_params(T=3, K=3, beta=0.5, epsilon=1.5), shift_factor=1.7)
    rng = np.random.default_rng(5)
    floor = 1.0 / op.norm_shifted_inv
    for _ in range(1000):
        psi = rng.normal(size=9) + 1j * rng.normal(size=9)
        lhs = np.max(np.abs(op.shifted @ psi))
        rhs = floor * np.max(np.abs(psi))
        assert lhs >= rhs * (1 - 1e-12)


def test_shifted_triangle_bound():
    # ||A phi|| <= (||L|| + s) ||phi||
    op = build_shifted(_params(T=4, K=5), shift_factor=1.5)
    rng = np.random.default_rng(6)
    cap = op.norm_linear + op.shift
    for _ in range(1000):
        phi = rng.normal(size=20) + 1j * rng.normal(size=20)
        assert np.max(np.abs(op.shifted @ phi)) <= cap * np.max(np.abs(phi)) * (1 + 1e-12)


@pytest.mark.parametrize("factor", [1.0, 0.5, 0.0, -2.0])
def test_shift_factor_must_exceed_one(factor):
    with pytest.raises(ValueError):
        build_shifted(_params(), shift_factor=factor)


def test_inverse_realified_matches_complex_inverse():
    op = build_shifted(_params(T=2, K=3), shift_factor=1.5)
    inv = np.linalg.inv(op.shifted)
    assert_allclose(op.inverse_realified, realified_matrix(inv), atol=1e-12)
