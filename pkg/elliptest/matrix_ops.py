"""
Small dense symmetric-matrix algebra.

Eigendecomposition, matrix square roots and the Kronecker-system solve behind
the influence function of the inverse square root of a covariance matrix.
Matrices are plain 2d numpy arrays; vectors are 1d arrays.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import InvalidInput, NotPositiveDefinite

# Relative eigenvalue floor below which a matrix counts as singular.
PD_RELATIVE_TOL = 1e-10

SymMatrix = np.ndarray


@dataclass(frozen=True)
class EigenDecomp:
    """
    Spectral decomposition S = Q diag(values) Q^T.

    Attributes
    ----------
    values : np.ndarray
        Eigenvalues in descending order.
    vectors : np.ndarray
        Orthogonal matrix whose columns are the matching eigenvectors.
    """
    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class InfluenceMats:
    """Influence functions of the mean, the covariance and its inverse square root at one point."""
    psi_mu: np.ndarray
    psi_sigma: np.ndarray
    psi_sigma_inv_half: np.ndarray


def as_sym_matrix(a) -> SymMatrix:
    """
    Validate a square matrix and return its symmetrized, read-only copy.

    Raises
    ------
    InvalidInput
        If ``a`` is not a finite square matrix of dimension at least one.
    """
    m = np.array(a, dtype=float, copy=True)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    m = 0.5 * (m + m.T)
    m.setflags(write=False)
    return m


def sym_eig(S) -> EigenDecomp:
    """
    Eigendecomposition of a symmetric matrix.

    Eigenvalues are returned in descending order and every eigenvector is
    sign-normalized so that its largest-magnitude entry is positive, which
    makes the output a deterministic function of the input.

    Parameters
    ----------
    S : array_like
        Symmetric matrix with finite entries.

    Returns
    -------
    EigenDecomp
    """
    m = as_sym_matrix(S)
    values, vectors = np.linalg.eigh(m)
    order = np.argsort(values, kind='stable')[::-1]
    values = values[order]
    vectors = vectors[:, order]
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    vectors = vectors * signs
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenDecomp(values=values, vectors=vectors)


def check_positive_definite(eig: EigenDecomp, min_eig_tol: Optional[float] = None) -> None:
    """Raise NotPositiveDefinite unless every eigenvalue exceeds the tolerance."""
    top = float(eig.values[0])
    tol = PD_RELATIVE_TOL * top if min_eig_tol is None else float(min_eig_tol)
    if top <= 0 or np.any(eig.values <= tol):
        raise NotPositiveDefinite(
            f"smallest eigenvalue {float(eig.values[-1]):.3e} is not above tolerance {tol:.3e}"
        )


def spectral_power(eig: EigenDecomp, exponent: float) -> SymMatrix:
    """Return Q diag(values**exponent) Q^T, symmetrized."""
    out = (eig.vectors * eig.values ** exponent) @ eig.vectors.T
    out = 0.5 * (out + out.T)
    out.setflags(write=False)
    return out


def mat_inv_sqrt(S, min_eig_tol: Optional[float] = None) -> SymMatrix:
    """
    Inverse symmetric square root S^{-1/2}.

    Parameters
    ----------
    S : array_like
        Symmetric positive definite matrix.
    min_eig_tol : float, optional
        Absolute eigenvalue floor. Defaults to 1e-10 times the largest eigenvalue.

    Raises
    ------
    NotPositiveDefinite
        If an eigenvalue is at or below the floor.
    """
    eig = sym_eig(S)
    check_positive_definite(eig, min_eig_tol)
    return spectral_power(eig, -0.5)


def mat_sqrt(S, min_eig_tol: Optional[float] = None) -> SymMatrix:
    """Symmetric square root S^{1/2}; same contract as ``mat_inv_sqrt``."""
    eig = sym_eig(S)
    check_positive_definite(eig, min_eig_tol)
    return spectral_power(eig, 0.5)


def vec(m: np.ndarray) -> np.ndarray:
    """Stack the columns of a matrix into one vector."""
    return np.asarray(m).reshape(-1, order='F')


def dvec(v: np.ndarray, p: int) -> np.ndarray:
    """Inverse of ``vec`` for a p x p matrix."""
    return np.asarray(v).reshape((p, p), order='F')


def solve_root_sylvester(eig: EigenDecomp, rhs: np.ndarray) -> np.ndarray:
    """
    Solve (S^{1/2} kron S + S kron S^{1/2}) vec(X) = vec(rhs) for X.

    The system is equivalent to S X S^{1/2} + S^{1/2} X S = rhs and is diagonal
    in the eigenbasis of S, where entry (i, j) is divided by
    l_i l_j^{1/2} + l_i^{1/2} l_j. ``rhs`` may carry leading batch axes.
    """
    q = eig.vectors
    root = np.sqrt(eig.values)
    denom = np.outer(eig.values, root) + np.outer(root, eig.values)
    rotated = q.T @ rhs @ q
    return q @ (rotated / denom) @ q.T


def influence_batch(X: np.ndarray, mu: np.ndarray, sigma: SymMatrix, eig: Optional[EigenDecomp] = None):
    """
    Covariance and inverse-square-root influence matrices for every row of X.

    Returns
    -------
    psi_sigma : np.ndarray
        Array of shape (n, p, p) holding (x_i - mu)(x_i - mu)^T - sigma.
    psi_sigma_inv_half : np.ndarray
        Array of shape (n, p, p), the negated Kronecker-system solution.
    """
    if eig is None:
        eig = sym_eig(sigma)
    check_positive_definite(eig)
    centered = np.atleast_2d(np.asarray(X, dtype=float)) - np.asarray(mu, dtype=float)
    psi_sigma = centered[:, :, None] * centered[:, None, :] - np.asarray(sigma)
    psi_inv_half = -solve_root_sylvester(eig, psi_sigma)
    psi_inv_half = 0.5 * (psi_inv_half + np.swapaxes(psi_inv_half, -1, -2))
    return psi_sigma, psi_inv_half


def influence_mats(x, mu, Sigma, Sigma_half=None) -> InfluenceMats:
    """
    Influence quantities of the mean, covariance and inverse square root at x.

    Parameters
    ----------
    x, mu : array_like
        Point and mean, p-vectors.
    Sigma : array_like
        Positive definite covariance matrix.
    Sigma_half : array_like, optional
        Square root of Sigma. Accepted for symmetry with the moment bundle;
        the solve works in the eigenbasis of Sigma and does not need it.

    Raises
    ------
    NotPositiveDefinite
        If Sigma is not positive definite.

    Examples
    --------
    >>> import numpy as np
    >>> m = influence_mats(np.zeros(2), np.zeros(2), np.eye(2))
    >>> np.allclose(m.psi_sigma_inv_half, np.eye(2) / 2)
    True
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = as_sym_matrix(Sigma)
    if x.shape != mu.shape or sigma.shape != (len(mu), len(mu)):
        raise InvalidInput("x, mu and Sigma dimensions disagree")
    psi_sigma, psi_inv_half = influence_batch(x[None, :], mu, sigma)
    return InfluenceMats(psi_mu=x - mu, psi_sigma=psi_sigma[0], psi_sigma_inv_half=psi_inv_half[0])
