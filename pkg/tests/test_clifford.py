import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeromodes.clifford import (
    ALPHA, I2, I4, SIGMA, alpha_apply, alpha_dot, anticommutator, is_hermitian,
    pauli_contract, sigma_apply, sigma_dot, spinor_norm,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_pauli_matrices_are_the_standard_ones():
    assert np.array_equal(sigma_dot([1, 0, 0]), [[0, 1], [1, 0]])
    assert np.array_equal(SIGMA[1], [[0, -1j], [1j, 0]])
    assert np.array_equal(SIGMA[2], [[1, 0], [0, -1]])


def test_zero_vector_gives_zero_matrix():
    assert np.array_equal(sigma_dot([0, 0, 0]), np.zeros((2, 2)))
    assert np.array_equal(alpha_dot([0, 0, 0]), np.zeros((4, 4)))


def test_alpha_has_pauli_off_diagonal_blocks():
    a3 = alpha_dot([0, 0, 1])
    assert np.array_equal(a3[:2, 2:], SIGMA[2])
    assert np.array_equal(a3[2:, :2], SIGMA[2])
    assert np.array_equal(a3[:2, :2], np.zeros((2, 2)))


@pytest.mark.parametrize("j", range(3))
@pytest.mark.parametrize("k", range(3))
def test_anticommutators_exact(j, k):
    d = 2.0 * (j == k)
    assert np.max(np.abs(anticommutator(SIGMA[j], SIGMA[k]) - d * I2)) <= 1e-15
    assert np.max(np.abs(anticommutator(ALPHA[j], ALPHA[k]) - d * I4)) <= 1e-15


def test_generators_hermitian():
    assert all(is_hermitian(m) for m in SIGMA)
    assert all(is_hermitian(m) for m in ALPHA)


def test_cyclic_products():
    s1, s2, s3 = SIGMA
    assert np.array_equal(s1 @ s2, 1j * s3)
    assert np.array_equal(s2 @ s3, 1j * s1)
    assert np.array_equal(s3 @ s1, 1j * s2)


def test_pauli_contract_special_cases():
    e1, e2 = np.eye(3)[:2]
    assert np.allclose(pauli_contract(e1, e1), I2, atol=0)
    assert np.allclose(pauli_contract(e1, e2), 1j * SIGMA[2], atol=0)


def test_pauli_contract_500_random_pairs(rng):
    a = rng.normal(size=(500, 3))
    b = rng.normal(size=(500, 3))
    direct = sigma_dot(a) @ sigma_dot(b)
    assert np.max(np.abs(direct - pauli_contract(a, b))) <= 1e-13


def test_unit_squares_and_unitarity(rng):
    w = rng.normal(size=(200, 3))
    w /= np.linalg.norm(w, axis=-1, keepdims=True)
    s = sigma_dot(w)
    a = alpha_dot(w)
    assert np.max(np.abs(s @ s - I2)) <= 1e-13
    assert np.max(np.abs(a @ a - I4)) <= 1e-13
    assert np.max(np.abs(np.conj(np.swapaxes(a, -1, -2)) @ a - I4)) <= 1e-13


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, st.floats(-10, 10), st.floats(-10, 10))
def test_real_linearity(u, v, p, q):
    for dot in (sigma_dot, alpha_dot):
        lhs = dot(p * u + q * v)
        rhs = p * dot(u) + q * dot(v)
        assert np.max(np.abs(lhs - rhs)) <= 1e-13 * (1 + np.abs(lhs).max())


@settings(max_examples=200, deadline=None)
@given(vec3, vec3)
def test_cross_product_lagrange_identity(a, b):
    lhs = np.sum(np.cross(a, b) ** 2)
    rhs = (a @ a) * (b @ b) - (a @ b) ** 2
    assert abs(lhs - rhs) <= 1e-13 * max(1.0, (a @ a) * (b @ b))


@settings(max_examples=200, deadline=None)
@given(vec3, st.lists(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False),
                      min_size=4, max_size=4))
def test_alpha_x_preserves_norm_up_to_x(x, f):
    f = np.array(f)
    lhs = spinor_norm(alpha_dot(x) @ f)
    assert np.isclose(lhs, np.linalg.norm(x) * np.linalg.norm(f), rtol=1e-12, atol=1e-9)


def test_fast_apply_matches_dense(rng):
    v = rng.normal(size=(50, 3))
    u2 = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
    u4 = rng.normal(size=(50, 4)) + 1j * rng.normal(size=(50, 4))
    assert np.allclose(sigma_apply(v, u2), np.einsum("nab,nb->na", sigma_dot(v), u2), atol=1e-14)
    assert np.allclose(alpha_apply(v, u4), np.einsum("nab,nb->na", alpha_dot(v), u4), atol=1e-14)


def test_triple_products_associative(rng):
    v = rng.normal(size=(3, 20, 3))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    for dot in (sigma_dot, alpha_dot):
        a, b, c = (dot(x) for x in v)
        assert np.max(np.abs((a @ b) @ c - a @ (b @ c))) <= 1e-14
