import numpy as np
import pytest

from elliptest.exceptions import InvalidInput, NotPositiveDefinite
from elliptest.matrix_ops import (
    as_sym_matrix,
    dvec,
    influence_batch,
    influence_mats,
    mat_inv_sqrt,
    mat_sqrt,
    solve_root_sylvester,
    sym_eig,
    vec,
)


def random_spd(p, rng):
    a = rng.standard_normal((p, p))
    return a @ a.T + p * np.eye(p)


def test_sym_eig_descending_and_reconstructs():
    rng = np.random.default_rng(0)
    s = random_spd(5, rng)
    eig = sym_eig(s)

    assert np.all(np.diff(eig.values) <= 0)
    np.testing.assert_allclose(eig.reconstruct(), s, atol=1e-10)
    np.testing.assert_allclose(eig.vectors.T @ eig.vectors, np.eye(5), atol=1e-12)


def test_sym_eig_is_deterministic():
    s = random_spd(4, np.random.default_rng(1))
    a, b = sym_eig(s), sym_eig(s.copy())
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.vectors, b.vectors)


def test_inverse_square_root_whitens():
    rng = np.random.default_rng(2)
    for p in (1, 2, 6):
        s = random_spd(p, rng)
        inv_half = mat_inv_sqrt(s)
        np.testing.assert_allclose(inv_half @ s @ inv_half, np.eye(p), atol=1e-8)
        half = mat_sqrt(s)
        np.testing.assert_allclose(half @ half, s, atol=1e-10)


def test_singular_matrix_is_rejected():
    with pytest.raises(NotPositiveDefinite):
        mat_inv_sqrt([[1.0, 1.0], [1.0, 1.0]])


def test_non_square_input_is_rejected():
    with pytest.raises(InvalidInput):
        as_sym_matrix(np.ones((2, 3)))


def test_vec_stacks_columns():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert vec(m).tolist() == [1.0, 3.0, 2.0, 4.0]
    assert np.array_equal(dvec(vec(m), 2), m)


def test_root_sylvester_solves_kronecker_system():
    rng = np.random.default_rng(3)
    s = random_spd(3, rng)
    rhs = rng.standard_normal((3, 3))
    rhs = rhs + rhs.T
    x = solve_root_sylvester(sym_eig(s), rhs)

    half = mat_sqrt(s)
    system = np.kron(half, s) + np.kron(s, half)
    np.testing.assert_allclose(system @ vec(x), vec(rhs), atol=1e-10)


def test_influence_at_center_with_identity():
    m = influence_mats(np.zeros(2), np.zeros(2), np.eye(2))
    np.testing.assert_allclose(m.psi_sigma, -np.eye(2))
    np.testing.assert_allclose(m.psi_sigma_inv_half, np.eye(2) / 2)
    np.testing.assert_allclose(m.psi_mu, np.zeros(2))


# The influence of Sigma^{-1/2} is its derivative along psi_Sigma
def test_inverse_root_influence_matches_finite_difference():
    rng = np.random.default_rng(4)
    s = random_spd(3, rng)
    mu = rng.standard_normal(3)
    x = rng.standard_normal(3)
    m = influence_mats(x, mu, s)

    eps = 1e-6
    direction = m.psi_sigma
    numeric = (mat_inv_sqrt(s + eps * direction) - mat_inv_sqrt(s - eps * direction)) / (2 * eps)
    np.testing.assert_allclose(m.psi_sigma_inv_half, numeric, atol=1e-6)


def test_influence_batch_matches_single_point():
    rng = np.random.default_rng(5)
    s = random_spd(2, rng)
    X = rng.standard_normal((4, 2))
    mu = X.mean(axis=0)
    psi_sigma, psi_inv_half = influence_batch(X, mu, s)
    for i in range(4):
        single = influence_mats(X[i], mu, s)
        np.testing.assert_allclose(psi_sigma[i], single.psi_sigma, atol=1e-14)
        np.testing.assert_allclose(psi_inv_half[i], single.psi_sigma_inv_half, atol=1e-14)


def test_inverse_root_influence_is_linear_in_covariance_influence():
    rng = np.random.default_rng(6)
    s = random_spd(3, rng)
    eig = sym_eig(s)
    first = influence_mats(rng.standard_normal(3), np.zeros(3), s)
    second = influence_mats(rng.standard_normal(3), np.zeros(3), s)

    doubled = -solve_root_sylvester(eig, 2 * first.psi_sigma)
    np.testing.assert_allclose(doubled, 2 * first.psi_sigma_inv_half, atol=1e-12)
    mixed = -solve_root_sylvester(eig, 0.3 * first.psi_sigma - 1.7 * second.psi_sigma)
    expected = 0.3 * first.psi_sigma_inv_half - 1.7 * second.psi_sigma_inv_half
    np.testing.assert_allclose(mixed, expected, atol=1e-12)
