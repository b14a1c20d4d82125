import math

import numpy as np
import pytest
from scipy import special

from elliptest.exceptions import InvalidInput, WeightInfeasible
from elliptest.kl_entropy import (
    choose_k,
    constraint_matrix,
    custom_weights,
    digamma,
    entropy_estimate,
    estimate_entropy,
    l2_optimal_weights,
    log_unit_ball_volume,
    resolve_weights,
    tau_rule,
    uniform_weights,
    weight_support,
)

EULER_GAMMA = 0.5772156649015329

GAUSS_1D = 0.5 * math.log(2 * math.pi * math.e)
GAUSS_2D = math.log(2 * math.pi * math.e)


def test_digamma_values():
    assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-12)
    assert digamma(0.5) == pytest.approx(-EULER_GAMMA - 2 * math.log(2), abs=1e-12)
    assert digamma(10.0) == pytest.approx(sum(1 / j for j in range(1, 10)) - EULER_GAMMA, abs=1e-12)
    with pytest.raises(InvalidInput):
        digamma(0.0)


def test_unit_ball_volume():
    assert math.exp(log_unit_ball_volume(1)) == pytest.approx(2.0)
    assert math.exp(log_unit_ball_volume(2)) == pytest.approx(math.pi)
    assert math.exp(log_unit_ball_volume(3)) == pytest.approx(4 / 3 * math.pi)


def test_tuning_rule():
    assert tau_rule(2) == pytest.approx(2 / 5)
    assert tau_rule(10) == pytest.approx(2 / 17)
    assert tau_rule(40) >= 1 / 20
    assert choose_k(2, 500) == 25
    assert choose_k(1, 500) == 5
    assert choose_k(5, 4) == 2
    assert choose_k(10, 12) == 10
    with pytest.raises(InvalidInput):
        choose_k(1, 3)


def test_weight_support_clamps_rank_zero():
    assert weight_support(20, 4) == (5, 10, 15, 20)
    assert weight_support(2, 4) == (1, 2)


def test_uniform_weights():
    w = uniform_weights(4)
    assert w.kind == 'uniform'
    np.testing.assert_allclose(w.w, 0.25)
    assert abs(w.residuals[0]) < 1e-15


def test_optimal_weights_satisfy_constraints():
    for d in range(4, 13):
        for k in range(d, 61):
            w = l2_optimal_weights(k, d)
            assert max(abs(r) for r in w.residuals) <= 1e-8
            off_support = np.setdiff1d(np.arange(1, k + 1), w.support)
            assert np.all(w.w[off_support - 1] == 0)


# least-norm oracle on the support
def test_optimal_weights_have_minimum_norm():
    for d, k in [(4, 8), (6, 30), (9, 45), (12, 60)]:
        w = l2_optimal_weights(k, d)
        support = np.array(weight_support(k, d))
        a = constraint_matrix(support, d)
        b = np.zeros(a.shape[0])
        b[0] = 1.0
        oracle, *_ = np.linalg.lstsq(a, b, rcond=None)
        np.testing.assert_allclose(w.w[support - 1], oracle, atol=1e-8)


def test_optimal_weights_infeasible_when_support_too_small():
    # one rank cannot satisfy the sum and one moment constraint
    with pytest.raises(WeightInfeasible):
        l2_optimal_weights(1, 4)


def test_resolve_weights_rules():
    assert resolve_weights('auto', 10, 2).kind == 'uniform'
    assert resolve_weights('auto', 10, 5).kind == 'optimal'
    assert resolve_weights('optimal', 1, 4).kind == 'uniform'
    custom = resolve_weights((0.5, 0.5), 2, 1)
    assert custom.kind == 'custom' and custom.k == 2
    with pytest.raises(InvalidInput):
        custom_weights([0.5, 0.6])


def test_entropy_terms_average_to_estimate():
    rng = np.random.default_rng(20)
    pts = rng.standard_normal((300, 2))
    est = entropy_estimate(pts, 5, uniform_weights(5, 2))
    assert est.h_hat == pytest.approx(float(np.mean(est.xi)), abs=1e-12)
    assert est.xi.shape == (300,)


def test_entropy_matches_direct_formula():
    pts = np.array([0.0, 1.0, 3.0, 4.5])
    est = entropy_estimate(pts, 1, uniform_weights(1))
    rho = np.array([1.0, 1.0, 1.5, 1.5])
    expected = np.mean(np.log(3 * rho * 2.0) - special.digamma(1))
    assert est.h_hat == pytest.approx(expected, abs=1e-12)


def test_entropy_is_translation_invariant():
    rng = np.random.default_rng(23)
    # dyadic grid so the shift is exact in floating point
    pts = np.round(rng.standard_normal((400, 2)) * 2 ** 20) / 2 ** 20
    shifted = pts + np.array([3.0, -5.0])
    est = entropy_estimate(pts, 6, uniform_weights(6, 2))
    moved = entropy_estimate(shifted, 6, uniform_weights(6, 2))
    assert moved.h_hat == est.h_hat
    assert np.array_equal(moved.xi, est.xi)


def test_entropy_scales_with_log_determinant():
    rng = np.random.default_rng(21)
    pts = rng.standard_normal((500, 2))
    base = estimate_entropy(pts).h_hat
    scaled = estimate_entropy(3.0 * pts).h_hat
    assert scaled - base == pytest.approx(2 * math.log(3.0), abs=1e-10)


@pytest.mark.parametrize('sampler, truth, tol', [
    (lambda rng: rng.standard_normal(5000), GAUSS_1D, 0.05),
    (lambda rng: rng.uniform(size=5000), 0.0, 0.05),
    (lambda rng: rng.standard_exponential(5000), 1.0, 0.05),
    (lambda rng: rng.standard_normal((5000, 2)), GAUSS_2D, 0.08),
])
def test_entropy_oracles(sampler, truth, tol):
    rng = np.random.default_rng(22)
    hits = sum(abs(estimate_entropy(sampler(rng)).h_hat - truth) <= tol for _ in range(5))
    assert hits >= 4


@pytest.mark.slow
@pytest.mark.parametrize('sampler, truth, tol', [
    (lambda rng: rng.standard_normal(5000), GAUSS_1D, 0.05),
    (lambda rng: rng.uniform(size=5000), 0.0, 0.05),
    (lambda rng: rng.standard_exponential(5000), 1.0, 0.05),
    (lambda rng: rng.standard_normal((5000, 2)), GAUSS_2D, 0.08),
])
def test_entropy_oracles_fifty_seeds(sampler, truth, tol):
    hits = 0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        hits += abs(estimate_entropy(sampler(rng)).h_hat - truth) <= tol
    assert hits >= 45


@pytest.mark.slow
def test_entropy_error_shrinks_with_n():
    medians = []
    for n in (500, 2000, 8000):
        errors = [abs(estimate_entropy(np.random.default_rng(2000 + seed).standard_normal(n)).h_hat - GAUSS_1D)
                  for seed in range(50)]
        medians.append(np.median(errors))
    assert medians[0] > medians[1] > medians[2]


# entropy of (log-length, direction) for a standard bivariate normal
@pytest.mark.slow
def test_radial_and_angular_entropy_of_bivariate_normal():
    truth = GAUSS_2D - (math.log(2) - EULER_GAMMA) / 2
    errors = []
    for seed in range(50):
        y = np.random.default_rng(3000 + seed).standard_normal((5000, 2))
        mean_log_length = np.mean(np.log(np.linalg.norm(y, axis=1)))
        errors.append(estimate_entropy(y).h_hat - mean_log_length - truth)
    assert abs(np.median(errors)) <= 0.08
