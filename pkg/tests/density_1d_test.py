import numpy as np
import pytest
from scipy import integrate, stats

from elliptest.density_1d import default_bandwidth, kde_deriv, kde_eval, kde_fit, score_ratio
from elliptest.exceptions import InvalidInput


@pytest.fixture
def model():
    rng = np.random.default_rng(30)
    return kde_fit(rng.gamma(4.0, 0.5, size=400))


def test_default_bandwidth():
    assert default_bandwidth(32) == pytest.approx(0.5)
    assert kde_fit(np.arange(32.0)).h == pytest.approx(0.5)


def test_eval_matches_direct_sum(model):
    u = 1.7
    direct = np.mean(stats.norm.pdf((u - model.samples) / model.h)) / model.h
    assert kde_eval(model, u) == pytest.approx(direct, rel=1e-12)
    assert isinstance(kde_eval(model, u), float)


def test_derivative_matches_direct_sum(model):
    u = np.array([0.4, 1.7, 3.2])
    z = (u[:, None] - model.samples) / model.h
    direct = np.sum(-z * stats.norm.pdf(z), axis=1) / (model.n * model.h ** 2)
    np.testing.assert_allclose(kde_deriv(model, u), direct, rtol=1e-12)
    assert isinstance(kde_deriv(model, 1.7), float)


def test_density_integrates_to_one(model):
    grid = np.linspace(-5, 15, 20001)
    assert integrate.trapezoid(kde_eval(model, grid), grid) == pytest.approx(1.0, abs=1e-6)


# central differences of the density against the analytic derivative
def test_derivative_gradient_check(model):
    rng = np.random.default_rng(31)
    u = rng.uniform(model.samples.min(), model.samples.max(), size=100)
    eps = 1e-5
    numeric = (kde_eval(model, u + eps) - kde_eval(model, u - eps)) / (2 * eps)
    np.testing.assert_allclose(kde_deriv(model, u), numeric, rtol=1e-6, atol=1e-8)


def test_chunked_evaluation_matches_single_pass(model):
    u = np.linspace(0, 6, 1500)
    values = kde_eval(model, u)
    for i in (0, 700, 1499):
        assert values[i] == pytest.approx(kde_eval(model, float(u[i])), rel=1e-12)


def test_score_ratio_is_clipped(model):
    u = np.linspace(0.1, 8.0, 50)
    raw = kde_deriv(model, u) / kde_eval(model, u)
    np.testing.assert_allclose(score_ratio(model, u, cap=np.inf), raw, rtol=1e-12)
    clipped = score_ratio(model, u, cap=0.1)
    assert np.all(np.abs(clipped) <= 0.1)
    assert np.all(np.abs(score_ratio(model, np.array([1e3]))) <= 10 / model.h)


def test_invalid_inputs():
    with pytest.raises(InvalidInput):
        kde_fit([1.0])
    with pytest.raises(InvalidInput):
        kde_fit([1.0, np.inf])
    with pytest.raises(InvalidInput):
        kde_fit([1.0, 2.0], h=0.0)
