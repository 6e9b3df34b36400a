import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from reszono.errors import InvalidInputError
from reszono.linalg import (
    is_schur,
    null_space_basis,
    observability_matrix,
    observability_rank,
    pseudo_inverse,
    spectral_radius_upper,
    svd,
)

A_VI = np.array([[0.9455, -0.2426], [0.2486, 0.9455]])
C1 = np.array([[1.0, 0.4]])
C3 = np.array([[-0.8, 0.2], [0.0, 0.7]])


def test_svd_identity():
    r = svd(np.eye(2))
    assert np.allclose(r.singular_values, [1.0, 1.0])
    assert r.numeric_rank == 2


def test_svd_single_row_matches_gram_eigenvalue():
    # C1^T C1 has the single nonzero eigenvalue 1 + 0.4^2
    r = svd(C1)
    assert r.numeric_rank == 1
    assert r.singular_values[0] == pytest.approx(math.sqrt(1.16), abs=1e-12)
    assert np.allclose(r.reconstruct(), C1)


def test_svd_zero_matrix_has_rank_zero():
    r = svd(np.zeros((2, 3)))
    assert r.numeric_rank == 0
    assert np.all(r.singular_values == 0)


def test_svd_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        svd([[1.0, np.nan]])


def test_pinv_identity():
    assert np.allclose(pseudo_inverse(np.eye(3)), np.eye(3))


def test_pinv_full_row_rank_formula():
    expected = C1.T @ np.linalg.inv(C1 @ C1.T)
    got = pseudo_inverse(C1)
    assert np.allclose(got, expected, atol=1e-12)
    assert np.allclose(got.ravel(), [0.8621, 0.3448], atol=5e-5)


def test_pinv_square_matches_closed_form_inverse():
    (a, b), (c, d) = C3
    inv = np.array([[d, -b], [-c, a]]) / (a * d - b * c)
    assert np.allclose(pseudo_inverse(C3), inv, atol=1e-12)


@settings(max_examples=500, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(1, 4), st.integers(1, 4)), elements=st.integers(-5, 5)))
def test_pinv_moore_penrose_conditions(m):
    # integer entries keep the numeric rank unambiguous
    m = m.astype(float)
    p = pseudo_inverse(m)
    assert p.shape == m.T.shape
    assert np.allclose(m @ p @ m, m, atol=1e-9)
    assert np.allclose(p @ m @ p, p, atol=1e-9)
    assert np.allclose((m @ p).T, m @ p, atol=1e-9)
    assert np.allclose((p @ m).T, p @ m, atol=1e-9)


def test_null_space_single_row():
    v = null_space_basis(C1)
    assert v.shape == (2, 1)
    assert np.linalg.norm(C1 @ v) <= 1e-9
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert abs(v[0, 0] / v[1, 0]) == pytest.approx(0.4)


def test_null_space_identity_is_empty():
    assert null_space_basis(np.eye(2)).shape == (2, 0)


def test_null_space_zero_row_is_whole_space():
    v = null_space_basis(np.zeros((1, 2)))
    assert v.shape == (2, 2)
    assert np.allclose(v.T @ v, np.eye(2))


def test_spectral_radius_diagonal():
    assert spectral_radius_upper(np.diag([0.5, -0.2])) == pytest.approx(0.5, abs=1e-6)


def test_spectral_radius_rotating_target():
    # complex pair: |lambda|^2 = det A for a 2x2 with equal diagonal entries
    exact = math.sqrt(0.9455**2 + 0.2426 * 0.2486)
    rho = spectral_radius_upper(A_VI)
    assert rho >= exact - 1e-12
    assert rho == pytest.approx(exact, abs=1e-6)
    assert rho == pytest.approx(0.9768, abs=1e-4)
    assert is_schur(rho)


def test_spectral_radius_identity_is_not_schur():
    rho = spectral_radius_upper(np.eye(2))
    assert rho == pytest.approx(1.0)
    assert not is_schur(rho)


def test_spectral_radius_nilpotent_is_zero():
    assert spectral_radius_upper([[0.0, 1.0], [0.0, 0.0]]) == 0.0


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-2, 2, allow_nan=False)))
def test_spectral_radius_bounds_eigenvalues(m):
    assert spectral_radius_upper(m) >= np.max(np.abs(np.linalg.eigvals(m))) - 1e-9


def test_observability_rotating_target_sensor_one():
    o = observability_matrix(A_VI, C1)
    assert o.shape == (2, 2)
    assert abs(np.linalg.det(o)) > 1e-3
    assert observability_rank(A_VI, C1) == 2


def test_observability_unobservable_pair():
    assert observability_rank(np.eye(2), [[1.0, 0.0]]) == 1


def test_observability_full_output():
    assert observability_rank(A_VI, np.eye(2)) == 2
