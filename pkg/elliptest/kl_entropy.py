"""
Weighted Kozachenko-Leonenko entropy estimation.

The estimator averages, over every point, a weighted combination of log
nearest-neighbor distances at ranks 1..k:

    H = n^{-1} sum_i sum_j w_j log[(n - 1) rho_{(j),i}^d V_d / exp(psi(j))]

together with the tuning rules used by the test: the neighbor depth k and
the weights (uniform, or minimum-norm under the moment-cancelling constraint
class). All entropies are in nats.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from .exceptions import InvalidInput, WeightInfeasible
from .knn_core import as_points, knn_distances

logger = logging.getLogger(__name__)

# Exponents that perform well in practice; other dimensions use tau_rule().
SUGGESTED_TAU = {1: 1 / 4, 2: 2 / 5, 5: 4 / 19, 10: 2 / 17}
TAU_FLOOR = 1 / 20
PINV_RCOND = 1e-12
SUM_TOL = 1e-10
MOMENT_TOL = 1e-8

WeightRule = Literal['auto', 'uniform', 'optimal']


@dataclass(frozen=True)
class WeightVector:
    """
    Per-rank weights w_1..w_k for the entropy estimator.

    Attributes
    ----------
    k : int
        Neighbor depth.
    d : int
        Dimension the moment constraints refer to.
    w : np.ndarray
        The k weights.
    support : tuple of int
        1-based ranks where the weights may be nonzero.
    residuals : tuple of float
        Sum-to-one residual followed by one residual per moment constraint
        l = 1..floor(d/4).
    kind : str
        'uniform', 'optimal' or 'custom'.
    """
    k: int
    d: int
    w: np.ndarray
    support: Tuple[int, ...]
    residuals: Tuple[float, ...]
    kind: str = 'custom'

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'k': self.k,
            'd': self.d,
            'w': [float(v) for v in self.w],
            'support': list(self.support),
            'residuals': [float(r) for r in self.residuals],
        }


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropy estimate with its per-point terms xi (mean(xi) == h_hat)."""
    h_hat: float
    xi: np.ndarray = field(repr=False)
    k_used: int
    weights_used: WeightVector


def digamma(z: float) -> float:
    """
    Digamma function psi(z) = Gamma'(z) / Gamma(z) for z > 0.

    Raises
    ------
    InvalidInput
        If z is not a finite positive number.
    """
    z = float(z)
    if not math.isfinite(z) or z <= 0:
        raise InvalidInput(f"digamma is only defined here for z > 0, got {z}")
    return float(special.digamma(z))


def log_unit_ball_volume(d: int) -> float:
    """log of V_d = pi^{d/2} / Gamma(1 + d/2)."""
    if d < 1:
        raise InvalidInput(f"dimension must be positive, got {d}")
    return 0.5 * d * math.log(math.pi) - float(special.gammaln(1 + 0.5 * d))


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional Euclidean unit ball."""
    return math.exp(log_unit_ball_volume(d))


def tau_rule(d: int) -> float:
    """Exponent tau(d) in k = ceil(d n^tau)."""
    if d in SUGGESTED_TAU:
        return SUGGESTED_TAU[d]
    if d < 1:
        raise InvalidInput(f"dimension must be positive, got {d}")
    tau = min(4 / (4 + 3 * d), 1 - (d / 4) / (1 + d // 4))
    return max(tau, TAU_FLOOR)


def choose_k(d: int, n: int) -> int:
    """
    Neighbor depth ceil(d n^tau(d)), clamped to [1, n - 2].

    Examples
    --------
    >>> choose_k(2, 500)
    25
    >>> choose_k(1, 500)
    5
    """
    if n < 4:
        raise InvalidInput(f"choose_k needs n >= 4, got {n}")
    k = math.ceil(d * n ** tau_rule(d))
    return int(min(max(k, 1), n - 2))


def _gamma_ratio(ranks: np.ndarray, shift: float) -> np.ndarray:
    # Gamma(j + shift) / Gamma(j) through log-gamma to stay finite at large j
    return np.exp(special.gammaln(ranks + shift) - special.gammaln(ranks))


def constraint_matrix(ranks: Sequence[int], d: int) -> np.ndarray:
    """Rows: all-ones, then Gamma(j + 2l/d)/Gamma(j) for l = 1..floor(d/4)."""
    ranks = np.asarray(ranks, dtype=float)
    rows = [np.ones_like(ranks)]
    rows.extend(_gamma_ratio(ranks, 2 * l / d) for l in range(1, d // 4 + 1))
    return np.vstack(rows)


def weight_residuals(w: np.ndarray, d: int) -> Tuple[float, ...]:
    """Sum-to-one residual followed by the moment-constraint residuals."""
    w = np.asarray(w, dtype=float)
    lhs = constraint_matrix(np.arange(1, len(w) + 1), d) @ w
    lhs[0] -= 1.0
    return tuple(float(v) for v in lhs)


def weight_support(k: int, d: int) -> Tuple[int, ...]:
    """
    Ranks {floor(jk/d) : j = 1..d} where constrained weights may be nonzero.

    Rank 0 appears when k < d; it is clamped to 1 and duplicates are dropped.
    """
    return tuple(sorted({min(max(j * k // d, 1), k) for j in range(1, d + 1)}))


def uniform_weights(k: int, d: int = 1) -> WeightVector:
    """All weights 1/k; moment residuals for dimension d are reported, not enforced."""
    if k < 1:
        raise InvalidInput(f"k must be positive, got {k}")
    w = np.full(k, 1.0 / k)
    return WeightVector(k=k, d=d, w=w, support=tuple(range(1, k + 1)),
                        residuals=weight_residuals(w, d), kind='uniform')


def l2_optimal_weights(k: int, d: int) -> WeightVector:
    """
    Minimum-Euclidean-norm weights satisfying the constraint class for (k, d).

    The constraints are: weights sum to one, sum_j w_j Gamma(j + 2l/d)/Gamma(j) = 0
    for l = 1..floor(d/4), and w_j = 0 off ``weight_support(k, d)``. The
    least-norm solution of that linear system is taken through a
    pseudo-inverse with relative singular-value cutoff 1e-12.

    Raises
    ------
    WeightInfeasible
        If the system restricted to the support cannot be satisfied.
    """
    if k < 1 or d < 1:
        raise InvalidInput(f"need k >= 1 and d >= 1, got k={k}, d={d}")
    support = weight_support(k, d)
    a = constraint_matrix(support, d)
    b = np.zeros(a.shape[0])
    b[0] = 1.0
    w_support = np.linalg.pinv(a, rcond=PINV_RCOND) @ b
    misfit = a @ w_support - b
    if abs(misfit[0]) > SUM_TOL or np.any(np.abs(misfit[1:]) > MOMENT_TOL):
        raise WeightInfeasible(
            f"no weights on support {list(support)} satisfy the {a.shape[0]} constraints "
            f"for k={k}, d={d} (max residual {np.max(np.abs(misfit)):.2e})"
        )
    w = np.zeros(k)
    w[np.asarray(support) - 1] = w_support
    return WeightVector(k=k, d=d, w=w, support=support,
                        residuals=weight_residuals(w, d), kind='optimal')


def custom_weights(values: Sequence[float], d: int = 1) -> WeightVector:
    """Wrap user-supplied weights; they must sum to one."""
    w = np.asarray(values, dtype=float)
    if w.ndim != 1 or len(w) < 1 or not np.all(np.isfinite(w)):
        raise InvalidInput("weights must be a non-empty finite vector")
    residuals = weight_residuals(w, d)
    if abs(residuals[0]) > SUM_TOL:
        raise InvalidInput(f"weights must sum to one (off by {residuals[0]:.2e})")
    return WeightVector(k=len(w), d=d, w=w, support=tuple(int(j) + 1 for j in np.flatnonzero(w)),
                        residuals=residuals, kind='custom')


def resolve_weights(rule: Union[WeightRule, Sequence[float], WeightVector], k: int, d: int) -> WeightVector:
    """
    Turn a weight rule into a WeightVector.

    'auto' picks the optimal weights when d > 3 and uniform weights otherwise;
    an infeasible optimal system falls back to uniform weights with a warning.
    """
    if isinstance(rule, WeightVector):
        return rule
    if not isinstance(rule, str):
        return custom_weights(rule, d)
    if rule == 'uniform' or (rule == 'auto' and d <= 3):
        return uniform_weights(k, d)
    if rule in ('auto', 'optimal'):
        try:
            return l2_optimal_weights(k, d)
        except WeightInfeasible as exc:
            logger.warning("%s; falling back to uniform weights", exc)
            return uniform_weights(k, d)
    raise InvalidInput(f"unknown weight rule {rule!r}")


def entropy_estimate(points, k: int, weights: WeightVector, backend: str = 'auto') -> EntropyEstimate:
    """
    Weighted Kozachenko-Leonenko entropy estimate.

    Parameters
    ----------
    points : array_like
        An n x d sample (a 1d array is a univariate sample).
    k : int
        Neighbor depth; must equal ``weights.k``.
    weights : WeightVector
        Per-rank weights.
    backend : str
        kNN backend, see ``knn_distances``.

    Returns
    -------
    EntropyEstimate

    Raises
    ------
    DuplicatePoints
        Propagated from the neighbor search.
    """
    pts = as_points(points)
    n, d = pts.shape
    if weights.k != k:
        raise InvalidInput(f"weights are for k={weights.k}, estimator called with k={k}")
    nn = knn_distances(pts, k, backend=backend)
    ranks = np.arange(1, k + 1, dtype=float)
    offset = math.log(n - 1) + log_unit_ball_volume(d) - special.digamma(ranks)
    terms = d * np.log(nn.rho) + offset
    xi = terms @ weights.w
    return EntropyEstimate(h_hat=float(np.mean(xi)), xi=xi, k_used=k, weights_used=weights)


def estimate_entropy(points, k: Optional[int] = None,
                     weights: Union[WeightRule, Sequence[float], WeightVector] = 'auto') -> EntropyEstimate:
    """Entropy estimate with the default tunings for whatever is not given."""
    pts = as_points(points)
    n, d = pts.shape
    if k is None:
        k = choose_k(d, n)
    w = resolve_weights(weights, k, d)
    logger.debug("estimate_entropy: n=%d d=%d k=%d weights=%s", n, d, k, w.kind)
    return entropy_estimate(pts, k, w)
