"""
KL-divergence test of ellipticity.

After normalizing Y = Sigma^{-1/2}(X - mu), an elliptical law has its length
U = ||Y|| independent of its direction V = Y / U, and V uniform on the sphere.
The statistic

    T = -H(Y) + (p - 1) E log U + H(U) - log c_p

estimates the KL divergence between the joint law of (U, V) and the product
of the law of U with the uniform law on the sphere, so T is near zero under
the null and positive otherwise.

Two modes are supported. With known (mu, Sigma) the statistic is computed
directly. Otherwise the sample is split in two halves: moments estimated on
one half normalize the other, and the two role-reversed statistics are
averaged. In both modes the statistic is debiased by resampling directions
and compared against a conservative (inflated) variance estimate.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from multiprocess import Pool
from scipy import special, stats

from .config import (
    DEBIAS_STREAM,
    JITTER_STREAM,
    PAIR_STREAM,
    SPLIT_STREAM,
    TestConfig,
    derive_seed,
    resolve_workers,
    stream,
)
from .density_1d import Kde1d, kde_fit, score_ratio
from .exceptions import DegenerateDirection, ElliptestError, InvalidInput, InvalidK
from .generators import sample_sphere_rows
from .kl_entropy import WeightVector, choose_k, entropy_estimate, resolve_weights
from .matrix_ops import (
    EigenDecomp,
    SymMatrix,
    as_sym_matrix,
    check_positive_definite,
    influence_batch,
    spectral_power,
    sym_eig,
)

logger = logging.getLogger(__name__)

MIN_SPLIT_N = 8


@dataclass(frozen=True)
class MomentEstimates:
    """
    Location and scatter used to normalize a sample.

    ``source`` is 'known' for user-supplied moments and 'estimated' for
    moments computed from rows of a sample (``indices``, when recorded).
    """
    mu: np.ndarray
    sigma: SymMatrix
    sigma_half: SymMatrix = field(repr=False)
    sigma_inv_half: SymMatrix = field(repr=False)
    eig: EigenDecomp = field(repr=False)
    source: str = 'known'
    indices: Optional[Tuple[int, ...]] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.mu)


def _from_scatter(mu: np.ndarray, sigma, source: str, indices=None) -> MomentEstimates:
    sigma = as_sym_matrix(sigma)
    if sigma.shape[0] != len(mu):
        raise InvalidInput(f"mean has {len(mu)} entries but covariance is {sigma.shape[0]}x{sigma.shape[1]}")
    eig = sym_eig(sigma)
    check_positive_definite(eig)
    mu = np.array(mu, dtype=float)
    mu.setflags(write=False)
    return MomentEstimates(
        mu=mu,
        sigma=sigma,
        sigma_half=spectral_power(eig, 0.5),
        sigma_inv_half=spectral_power(eig, -0.5),
        eig=eig,
        source=source,
        indices=indices,
    )


def known_moments(mu, Sigma) -> MomentEstimates:
    """
    Wrap a user-supplied mean and covariance.

    Raises
    ------
    InvalidInput
        If the shapes disagree or values are not finite.
    NotPositiveDefinite
        If Sigma is singular.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.ndim != 1 or not np.all(np.isfinite(mu)):
        raise InvalidInput("mu must be a finite vector")
    return _from_scatter(mu, Sigma, 'known')


def estimate_moments(X, indices: Optional[Tuple[int, ...]] = None) -> MomentEstimates:
    """Sample mean and covariance with divisor n (not n - 1)."""
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    centered = X - mu
    sigma = centered.T @ centered / len(X)
    return _from_scatter(mu, sigma, 'estimated', indices)


@dataclass(frozen=True)
class NormalizedSample:
    """Normalized rows y, their lengths u and directions v = y / u."""
    y: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.u)

    @property
    def p(self) -> int:
        return self.y.shape[1]


def normalize(X, moments: MomentEstimates) -> NormalizedSample:
    """
    Y_i = Sigma^{-1/2}(X_i - mu), U_i = ||Y_i||, V_i = Y_i / U_i.

    Raises
    ------
    DegenerateDirection
        If a row sits exactly at mu.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != moments.dim:
        raise InvalidInput(f"expected an n x {moments.dim} matrix, got shape {X.shape}")
    y = (X - moments.mu) @ moments.sigma_inv_half
    u = np.linalg.norm(y, axis=1)
    at_center = np.flatnonzero(u == 0)
    if at_center.size:
        raise DegenerateDirection(
            f"rows {[int(i) for i in at_center[:10]]} coincide with the center; their direction is undefined"
        )
    return NormalizedSample(y=y, u=u, v=y / u[:, None])


def log_cp(p: int) -> float:
    """
    log c_p for c_p = Gamma(p/2) / (2 pi^{p/2}), the uniform density on the unit sphere.

    >>> round(log_cp(2), 12) == round(-math.log(2 * math.pi), 12)
    True
    """
    if p < 1:
        raise InvalidInput(f"p must be positive, got {p}")
    return float(special.gammaln(0.5 * p)) - math.log(2.0) - 0.5 * p * math.log(math.pi)


def joint_entropy_uv(h_y: float, e_log_u: float, p: int) -> float:
    """Entropy of (U, V) from the entropy of Y: H(U, V) = H(Y) - (p - 1) E log U."""
    return h_y - (p - 1) * e_log_u


@dataclass(frozen=True)
class Tunings:
    """Neighbor depths and weights in effect for one entropy pair."""
    k_p: int
    k_1: int
    weights_p: WeightVector
    weights_1: WeightVector


def resolve_tunings(cfg: TestConfig, n: int, p: int) -> Tunings:
    """
    Apply the config overrides, falling back to ``choose_k`` for sample size n.

    Raises
    ------
    InvalidK
        If a neighbor depth leaves fewer than two spare observations.
    """
    def one(k, rule, d):
        if not isinstance(rule, str):
            k = len(rule)
        elif k is None:
            k = choose_k(d, n)
        if n < k + 2:
            raise InvalidK(f"k={k} needs at least {k + 2} observations, got n={n}")
        return k, resolve_weights(rule, k, d)

    k_p, w_p = one(cfg.k_p, cfg.weights_p, p)
    k_1, w_1 = one(cfg.k_1, cfg.weights_1, 1)
    return Tunings(k_p=k_p, k_1=k_1, weights_p=w_p, weights_1=w_1)


@dataclass(frozen=True)
class StatisticComponents:
    """The statistic together with every piece it was assembled from."""
    t: float
    h_y: float
    h_u: float
    e_log_u: float
    xi_y: np.ndarray = field(repr=False)
    xi_u: np.ndarray = field(repr=False)
    log_u: np.ndarray = field(repr=False)
    tunings: Tunings = field(repr=False)


def statistic_known(ns: NormalizedSample, cfg: TestConfig) -> StatisticComponents:
    """
    T = -H(Y) + (p - 1) E log U + H(U) - log c_p on an already normalized sample.

    H(Y) uses k_p with the p-dimensional weights, H(U) uses k_1 with the
    univariate weights; both default to the tuning rules for n = ns.n.
    """
    tun = resolve_tunings(cfg, ns.n, ns.p)
    logger.debug("statistic: n=%d p=%d k_p=%d k_1=%d weights_p=%s",
                 ns.n, ns.p, tun.k_p, tun.k_1, tun.weights_p.kind)
    ent_y = entropy_estimate(ns.y, tun.k_p, tun.weights_p)
    ent_u = entropy_estimate(ns.u, tun.k_1, tun.weights_1)
    log_u = np.log(ns.u)
    e_log_u = float(np.mean(log_u))
    t = -ent_y.h_hat + (ns.p - 1) * e_log_u + ent_u.h_hat - log_cp(ns.p)
    return StatisticComponents(t=float(t), h_y=ent_y.h_hat, h_u=ent_u.h_hat, e_log_u=e_log_u,
                               xi_y=ent_y.xi, xi_u=ent_u.xi, log_u=log_u, tunings=tun)


def variance_known(xi_y, xi_u, u, h_y: float, h_u: float, e_log_u: float, p: int) -> float:
    """
    Inflated standard deviation sqrt(2 (V1 + V2)) of sqrt(n) T in known mode.

    V1 is the empirical variance of the Y-entropy terms and V2 that of the
    length terms (p - 1)(log U_i - E log U) + xi_{u,i} - H(U).
    """
    xi_y, xi_u = np.asarray(xi_y, dtype=float), np.asarray(xi_u, dtype=float)
    log_u = np.log(np.asarray(u, dtype=float))
    v1 = np.mean((xi_y - h_y) ** 2)
    v2 = np.mean(((p - 1) * (log_u - e_log_u) + xi_u - h_u) ** 2)
    return float(math.sqrt(2.0 * (v1 + v2)))


def plugin_variance_known(xi_y, xi_u, u, h_y: float, h_u: float, e_log_u: float, p: int,
                          c_exponent: float = 0.5) -> float:
    """Plug-in standard deviation: mean of the squared influence terms plus n^{-c}."""
    xi_y, xi_u = np.asarray(xi_y, dtype=float), np.asarray(xi_u, dtype=float)
    log_u = np.log(np.asarray(u, dtype=float))
    n = len(xi_y)
    psi = -xi_y + xi_u + (p - 1) * log_u + h_y - (p - 1) * e_log_u - h_u
    return float(math.sqrt(np.mean(psi ** 2) + n ** -c_exponent))


@dataclass(frozen=True)
class SplitStatistic:
    """
    Split-sample statistic.

    ``first`` holds the pieces of T1 (moments from the first half, entropies
    on the second); ``second`` those of T2 with the roles reversed.
    """
    t: float
    t1: float
    t2: float
    first: StatisticComponents = field(repr=False)
    second: StatisticComponents = field(repr=False)
    permutation: Optional[Tuple[int, ...]] = field(default=None, repr=False)

    @property
    def h_y(self) -> float:
        return 0.5 * (self.first.h_y + self.second.h_y)

    @property
    def h_u(self) -> float:
        return 0.5 * (self.first.h_u + self.second.h_u)

    @property
    def e_log_u(self) -> float:
        return 0.5 * (self.first.e_log_u + self.second.e_log_u)


def split_statistic(first, second, cfg: TestConfig) -> SplitStatistic:
    """
    Average of the two role-reversed split statistics for given halves.

    Tunings inside each half follow the half's own sample size.
    """
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    half1 = statistic_known(normalize(second, estimate_moments(first)), cfg)
    half2 = statistic_known(normalize(first, estimate_moments(second)), cfg)
    return SplitStatistic(t=0.5 * (half1.t + half2.t), t1=half1.t, t2=half2.t, first=half1, second=half2)


def split_permutation(n: int, seed: int) -> np.ndarray:
    """Seeded shuffle assigning rows to halves: the first floor(n/2) go to the first half."""
    return stream(seed, SPLIT_STREAM).permutation(n)


def statistic_unknown(X, cfg: TestConfig) -> SplitStatistic:
    """
    Split-sample statistic when mu and Sigma are unknown.

    Raises
    ------
    InvalidInput
        If n < 8.
    NotPositiveDefinite
        If either half's sample covariance is singular.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < MIN_SPLIT_N:
        raise InvalidInput(f"the split-sample statistic needs n >= {MIN_SPLIT_N}, got {n}")
    perm = split_permutation(n, cfg.seed)
    n1 = n // 2
    res = split_statistic(X[perm[:n1]], X[perm[n1:]], cfg)
    return SplitStatistic(t=res.t, t1=res.t1, t2=res.t2, first=res.first, second=res.second,
                          permutation=tuple(int(i) for i in perm))


@dataclass(frozen=True)
class FullSampleComponents:
    """
    Whole-sample plug-ins for the unknown-mode variance.

    ``m`` stacks M_i = psi_{Sigma^{-1/2}}(X_i) Sigma^{1/2}; ``a1``, ``a2``,
    ``b1``, ``b2`` are the direction and length-score averages.
    """
    moments: MomentEstimates = field(repr=False)
    sample: NormalizedSample = field(repr=False)
    stat: StatisticComponents = field(repr=False)
    kde: Kde1d = field(repr=False)
    score: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    a1: np.ndarray = field(repr=False)
    a2: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)
    b2: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def p(self) -> int:
        return self.sample.p


def full_sample_components(X, cfg: TestConfig) -> FullSampleComponents:
    X = np.asarray(X, dtype=float)
    moments = estimate_moments(X)
    ns = normalize(X, moments)
    stat = statistic_known(ns, cfg)
    kde = kde_fit(ns.u, cfg.bandwidth)
    logger.debug("variance plug-ins: n=%d bandwidth=%.4g", ns.n, kde.h)
    score = score_ratio(kde, ns.u)

    _, psi_inv_half = influence_batch(X, moments.mu, moments.sigma, moments.eig)
    m = psi_inv_half @ moments.sigma_half

    n = ns.n
    v, u = ns.v, ns.u
    a1 = v.T @ v / n
    a2 = np.mean(v / u[:, None], axis=0)
    b1 = (v * (score * u)[:, None]).T @ v / n
    b2 = np.mean(v * score[:, None], axis=0)
    return FullSampleComponents(moments=moments, sample=ns, stat=stat, kde=kde, score=score,
                                m=m, a1=a1, a2=a2, b1=b1, b2=b2)


def _trace_with(a: np.ndarray, m: np.ndarray) -> np.ndarray:
    # tr(a M_i) for every i
    return np.einsum('jk,ikj->i', a, m)


def variance_unknown(comp: FullSampleComponents) -> float:
    """
    Inflated standard deviation sqrt(2 (V1 + V2)) in unknown mode.

    Both terms add the first-order effect of estimating mu and Sigma to the
    entropy terms; every summand is centered with whole-sample means.
    """
    ns, st = comp.sample, comp.stat
    p = comp.p
    tr_m = np.trace(comp.m, axis1=1, axis2=2)
    v1 = np.mean((-st.xi_y + st.h_y - tr_m) ** 2)
    length = (
        (p - 1) * (_trace_with(comp.a1, comp.m) - ns.y @ comp.a2 + st.log_u - st.e_log_u)
        + st.xi_u - st.h_u
        - _trace_with(comp.b1, comp.m)
        + ns.y @ comp.b2
    )
    v2 = np.mean(length ** 2)
    return float(math.sqrt(2.0 * (v1 + v2)))


def plugin_variance_unknown(comp: FullSampleComponents, c_exponent: float = 0.5,
                            include_floor: bool = True) -> float:
    """
    Plug-in standard deviation sqrt(mean((psi1 + psi2)^2) + n^{-c}).

    psi1 collects the moment-estimation terms and psi2 the entropy terms;
    ``include_floor=False`` drops the n^{-c} term.
    """
    ns, st = comp.sample, comp.stat
    p, n = comp.p, comp.n
    psi1 = (_trace_with((p - 1) * comp.a1 - np.eye(p) - comp.b1, comp.m)
            - ns.y @ ((p - 1) * comp.a2 - comp.b2))
    psi2 = (p - 1) * st.log_u - st.xi_y + st.xi_u + st.h_y - (p - 1) * st.e_log_u - st.h_u
    total = np.mean((psi1 + psi2) ** 2)
    if include_floor:
        total += n ** -c_exponent
    return float(math.sqrt(total))


def resample(moments: MomentEstimates, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Rows mu + Sigma^{1/2} U_i V*_i with fresh uniform directions V*."""
    v = sample_sphere_rows(len(u), moments.dim, rng)
    return moments.mu + (np.asarray(u)[:, None] * v) @ moments.sigma_half


@dataclass(frozen=True)
class DebiasResult:
    t_bar_b: float
    t_debiased: float
    t_star: Tuple[float, ...] = field(default=(), repr=False)


def _replicate(args) -> float:
    b, mode, moments, u, cfg = args
    x_star = resample(moments, u, stream(cfg.seed, DEBIAS_STREAM, b))
    if mode == 'known':
        return statistic_known(normalize(x_star, moments), cfg).t
    return statistic_unknown(x_star, cfg.replace(seed=derive_seed(cfg.seed, DEBIAS_STREAM, b))).t


def debias(t_raw: float, moments: MomentEstimates, u: np.ndarray, cfg: TestConfig,
           mode: str = 'known', workers: int = 1, pool=None) -> DebiasResult:
    """
    Subtract the resampling estimate of the statistic's bias.

    Each of the B replicates keeps the observed lengths ``u``, draws new
    uniform directions and recomputes the statistic: with the same moments in
    known mode, through the whole split pipeline (its own shuffle and moment
    estimates) in unknown mode. Replicate b draws from its own stream, and
    results are reduced in index order, so the outcome does not depend on
    ``workers``. An open ``pool`` is used as is and left open.
    """
    if cfg.B == 0:
        return DebiasResult(t_bar_b=0.0, t_debiased=float(t_raw))
    jobs = [(b, mode, moments, u, cfg) for b in range(cfg.B)]
    if pool is not None:
        logger.debug("debias: %d replicates on a shared pool", cfg.B)
        return _debias_result(t_raw, pool.map(_replicate, jobs))
    n_workers = min(resolve_workers(workers), cfg.B)
    logger.debug("debias: %d replicates on %d worker(s)", cfg.B, n_workers)
    if n_workers > 1:
        with Pool(n_workers) as pool:
            t_star = pool.map(_replicate, jobs)
    else:
        t_star = [_replicate(job) for job in jobs]
    return _debias_result(t_raw, t_star)


def _debias_result(t_raw: float, t_star) -> DebiasResult:
    t_bar = float(np.mean(t_star))
    return DebiasResult(t_bar_b=t_bar, t_debiased=float(t_raw) - t_bar,
                        t_star=tuple(float(t) for t in t_star))


def z_quantile(alpha: float) -> float:
    return float(stats.norm.ppf(1.0 - alpha))


def decision_margin(sigma_hat: float, n: int, alpha: float) -> float:
    """n^{-1/2} z_alpha sigma_hat, the amount the debiased statistic must exceed."""
    return z_quantile(alpha) * sigma_hat / math.sqrt(n)


def p_value(t: float, sigma_hat: float, n: int) -> float:
    """
    One-sided p-value 1 - Phi(sqrt(n) t / sigma_hat).

    A zero sigma_hat gives 0, 1/2 or 1 according to the sign of t.
    """
    if sigma_hat > 0:
        return float(stats.norm.sf(math.sqrt(n) * t / sigma_hat))
    if t > 0:
        return 0.0
    return 0.5 if t == 0 else 1.0


def decide(t: float, sigma_hat: float, n: int, alpha: float) -> Tuple[float, bool, float]:
    """p-value, rejection flag and lower confidence bound for a debiased statistic."""
    lower = t - decision_margin(sigma_hat, n, alpha)
    return p_value(t, sigma_hat, n), bool(lower > 0), float(lower)


@dataclass(frozen=True)
class TestResult:
    """
    Outcome of one test run.

    ``lower_bound`` is the one-sided (1 - alpha) lower confidence limit of the
    divergence; the test rejects exactly when it is positive. ``t1``, ``t2``
    and ``split_permutation`` are only set in unknown mode.
    """
    __test__ = False  # not a pytest test class

    t_raw: float
    t_bar_b: float
    t_debiased: float
    sigma_hat: float
    p_value: float
    reject: bool
    lower_bound: float
    h_y: float
    h_u: float
    e_log_u: float
    k_p: int
    k_1: int
    n: int
    p: int
    mode: str
    alpha: float
    variance_mode: str
    B: int
    t1: Optional[float] = None
    t2: Optional[float] = None
    split_permutation: Optional[Tuple[int, ...]] = field(default=None, repr=False)

    def to_dict(self, include_split: bool = False) -> Dict[str, Any]:
        out = {
            'mode': self.mode,
            'n': self.n,
            'p': self.p,
            't_raw': self.t_raw,
            't_bar_b': self.t_bar_b,
            't_debiased': self.t_debiased,
            'sigma_hat': self.sigma_hat,
            'p_value': self.p_value,
            'reject': self.reject,
            'lower_bound': self.lower_bound,
            'alpha': self.alpha,
            'h_y': self.h_y,
            'h_u': self.h_u,
            'e_log_u': self.e_log_u,
            'k_p': self.k_p,
            'k_1': self.k_1,
            'variance_mode': self.variance_mode,
            'B': self.B,
            't1': self.t1,
            't2': self.t2,
        }
        if include_split:
            out['split_permutation'] = list(self.split_permutation) if self.split_permutation else None
        return out


def as_data_matrix(X, min_rows: int = 4) -> np.ndarray:
    """Validate an n x p sample of finite numbers."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidInput(f"expected an n x p matrix, got shape {X.shape}")
    if len(X) < min_rows:
        raise InvalidInput(f"need at least {min_rows} observations, got {len(X)}")
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        row, col = bad[0]
        raise InvalidInput(f"non-finite value at row {row + 1}, column {col + 1}")
    return X


def apply_jitter(X: np.ndarray, jitter: Optional[float], seed: int) -> np.ndarray:
    """Add seeded Uniform(-jitter, jitter) noise; no-op when jitter is None."""
    if not jitter:
        return X
    return X + stream(seed, JITTER_STREAM).uniform(-jitter, jitter, size=X.shape)


def run_test(X, mu=None, Sigma=None, cfg: Optional[TestConfig] = None, workers: int = 1,
             pool=None) -> TestResult:
    """
    Test the rows of X for an elliptical distribution.

    Parameters
    ----------
    X : array_like
        n x p sample.
    mu, Sigma : array_like, optional
        Known mean and covariance. Give both for the known-moments test;
        omit both for the split-sample test.
    cfg : TestConfig, optional
        Tunings; defaults to ``TestConfig()``.
    workers : int
        Worker processes for the debias replicates.
    pool : multiprocess pool, optional
        An open pool to run the replicates on instead; ``workers`` is then ignored.

    Returns
    -------
    TestResult

    Raises
    ------
    ElliptestError
        Any domain error, re-raised with the mode and sample shape prefixed.
    """
    cfg = cfg or TestConfig()
    if (mu is None) != (Sigma is None):
        raise InvalidInput("give both mu and Sigma for the known-moments test, or neither")
    mode = 'unknown' if mu is None else 'known'
    X = as_data_matrix(X, MIN_SPLIT_N if mode == 'unknown' else 4)
    n, p = X.shape
    try:
        return _run(apply_jitter(X, cfg.jitter, cfg.seed), mu, Sigma, cfg, mode, workers, pool)
    except ElliptestError as exc:
        raise type(exc)(*_with_context(exc, f"{mode}-moments test on {n}x{p} data")) from exc


def _with_context(exc: ElliptestError, context: str):
    indices = getattr(exc, 'indices', None)
    message = f"{context}: {exc}"
    return (indices, message) if indices is not None else (message,)


def _run(X: np.ndarray, mu, Sigma, cfg: TestConfig, mode: str, workers: int, pool) -> TestResult:
    n, p = X.shape
    if mode == 'known':
        moments = known_moments(mu, Sigma)
        ns = normalize(X, moments)
        stat = statistic_known(ns, cfg)
        variance_args = (stat.xi_y, stat.xi_u, ns.u, stat.h_y, stat.h_u, stat.e_log_u, p)
        if cfg.variance_mode == 'plugin':
            sigma_hat = plugin_variance_known(*variance_args, c_exponent=cfg.c_exponent)
        else:
            sigma_hat = variance_known(*variance_args)
        t_raw, t1, t2, perm = stat.t, None, None, None
        h_y, h_u, e_log_u = stat.h_y, stat.h_u, stat.e_log_u
        tun = stat.tunings
        lengths = ns.u
    else:
        split = statistic_unknown(X, cfg)
        comp = full_sample_components(X, cfg)
        if cfg.variance_mode == 'plugin':
            sigma_hat = plugin_variance_unknown(comp, cfg.c_exponent)
        else:
            sigma_hat = variance_unknown(comp)
        moments = comp.moments
        t_raw, t1, t2, perm = split.t, split.t1, split.t2, split.permutation
        h_y, h_u, e_log_u = split.h_y, split.h_u, split.e_log_u
        tun = split.first.tunings
        lengths = comp.sample.u

    deb = debias(t_raw, moments, lengths, cfg, mode=mode, workers=workers, pool=pool)
    pval, reject, lower = decide(deb.t_debiased, sigma_hat, n, cfg.alpha)
    logger.info("%s-moments test: n=%d p=%d T=%.5f T'=%.5f sigma=%.5f p-value=%.4g",
                mode, n, p, t_raw, deb.t_debiased, sigma_hat, pval)
    return TestResult(
        t_raw=float(t_raw), t_bar_b=deb.t_bar_b, t_debiased=deb.t_debiased, sigma_hat=sigma_hat,
        p_value=pval, reject=reject, lower_bound=lower, h_y=float(h_y), h_u=float(h_u),
        e_log_u=float(e_log_u), k_p=tun.k_p, k_1=tun.k_1, n=n, p=p, mode=mode, alpha=cfg.alpha,
        variance_mode=cfg.variance_mode, B=cfg.B, t1=t1, t2=t2, split_permutation=perm,
    )


@dataclass(frozen=True)
class PairwiseResult:
    """
    Bonferroni-corrected tests over every pair of columns.

    ``p_values`` and ``reject`` are p x p with entries only above the
    diagonal (NaN / False elsewhere). ``errors`` maps a failed pair to its
    message.
    """
    p: int
    alpha: float
    alpha_prime: float
    p_values: np.ndarray = field(repr=False)
    reject: np.ndarray = field(repr=False)
    results: Dict[Tuple[int, int], TestResult] = field(default_factory=dict, repr=False)
    errors: Dict[Tuple[int, int], str] = field(default_factory=dict)

    @property
    def n_pairs(self) -> int:
        return self.p * (self.p - 1) // 2

    def rejected_pairs(self) -> List[Tuple[int, int]]:
        """Rejected column pairs, 1-based."""
        return [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(self.reject))]

    def to_dict(self) -> Dict[str, Any]:
        p_values = [[None if np.isnan(v) else float(v) for v in row] for row in self.p_values]
        return {
            'p': self.p,
            'n_pairs': self.n_pairs,
            'alpha': self.alpha,
            'alpha_prime': self.alpha_prime,
            'p_values': p_values,
            'reject': [[bool(v) for v in row] for row in self.reject],
            'rejected_pairs': [list(pair) for pair in self.rejected_pairs()],
            'errors': [
                {'pair': [i + 1, j + 1], 'message': msg} for (i, j), msg in sorted(self.errors.items())
            ],
        }


def pairwise_test(X, cfg: Optional[TestConfig] = None, alpha: Optional[float] = None,
                  workers: int = 1) -> PairwiseResult:
    """
    Unknown-moments test on every column pair at level alpha / (p (p - 1) / 2).

    A pair that fails (for instance on duplicate points) is recorded in
    ``errors`` and left undecided; the other pairs still run. With more than
    one worker, a single pool serves the debias replicates of every pair.
    """
    cfg = cfg or TestConfig()
    X = as_data_matrix(X, MIN_SPLIT_N)
    p = X.shape[1]
    if p < 2:
        raise InvalidInput(f"pairwise testing needs at least 2 columns, got {p}")
    alpha = cfg.alpha if alpha is None else float(alpha)
    n_pairs = p * (p - 1) // 2
    alpha_prime = alpha / n_pairs

    p_values = np.full((p, p), np.nan)
    reject = np.zeros((p, p), dtype=bool)
    results, errors = {}, {}
    n_workers = min(resolve_workers(workers), cfg.B)
    pool = Pool(n_workers) if n_workers > 1 else None
    try:
        for i in range(p):
            for j in range(i + 1, p):
                pair_cfg = cfg.replace(alpha=alpha_prime, seed=derive_seed(cfg.seed, PAIR_STREAM, i, j))
                try:
                    res = run_test(X[:, [i, j]], cfg=pair_cfg, pool=pool)
                except ElliptestError as exc:
                    logger.warning("pair (%d, %d) failed: %s", i + 1, j + 1, exc)
                    errors[(i, j)] = str(exc)
                    continue
                results[(i, j)] = res
                p_values[i, j] = res.p_value
                reject[i, j] = res.reject
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    logger.info("pairwise: %d pairs at alpha'=%.4g, %d rejected, %d failed",
                n_pairs, alpha_prime, int(reject.sum()), len(errors))
    return PairwiseResult(p=p, alpha=alpha, alpha_prime=alpha_prime, p_values=p_values,
                          reject=reject, results=results, errors=errors)
