import numpy as np
import pytest

from glmvi.glm_model import (GlmModel, Observation, Observations, draw_signal_on_sphere,
                             sample_observations, stochastic_field_sample)
from glmvi.links import EXPERIMENT_LINKS, Link, eval_link, link_derivative
from glmvi.saa_estimator import (empirical_field, logistic_ml_estimate, logistic_nll,
                                 logistic_nll_gradient, solve_saa)
from glmvi.vi_core import pair_ratios, unit_ball, weak_solution_residual


def _logistic_data(n, K, rng):
    model = GlmModel.for_experiment(Link.LOGISTIC, n)
    x = draw_signal_on_sphere(n, rng)
    return sample_observations(model, x, K, rng), x


def test_single_observation_field(rng):
    model = GlmModel.for_experiment(Link.HINGE, 4)
    obs = sample_observations(model, draw_signal_on_sphere(4, rng), 1, rng)
    G = empirical_field(obs, Link.HINGE).as_field
    z = 0.5 * draw_signal_on_sphere(4, rng)
    np.testing.assert_allclose(G(z), stochastic_field_sample(model, obs[0], z))


def test_linear_field_is_affine(rng):
    model = GlmModel(5, Link.LINEAR)
    obs = sample_observations(model, draw_signal_on_sphere(5, rng), 30, rng)
    eta = obs.eta2d
    A = eta.T @ eta / 30
    b = eta.T @ obs.y1d / 30
    G = empirical_field(obs, Link.LINEAR).as_field
    z = rng.standard_normal((7, 5))
    np.testing.assert_allclose(G(z), z @ A.T - b, atol=1e-12)


def test_vector_label_field(rng):
    model = GlmModel(3, Link.ARCTAN, sigma=0.2, m=2)
    obs = sample_observations(model, draw_signal_on_sphere(3, rng), 6, rng)
    G = empirical_field(obs, Link.ARCTAN).as_field
    z = 0.4 * draw_signal_on_sphere(3, rng)
    manual = np.mean([stochastic_field_sample(model, obs[k], z) for k in range(6)], axis=0)
    np.testing.assert_allclose(G(z), manual, atol=1e-14)


def test_empty_observations_rejected():
    with pytest.raises(ValueError):
        empirical_field([], Link.LINEAR)


def test_nll_gradient_zero_at_exact_mean_labels(rng):
    n, K = 4, 50
    z = 0.6 * draw_signal_on_sphere(n, rng)
    eta = rng.standard_normal((K, n))
    obs = Observations(eta, eval_link(Link.LOGISTIC, eta @ z))
    np.testing.assert_allclose(logistic_nll_gradient(obs, z), 0.0, atol=1e-15)


def test_nll_gradient_finite_differences(rng):
    obs, _ = _logistic_data(6, 200, rng)
    for _ in range(10):
        z = rng.standard_normal(6)
        fd = np.array([(logistic_nll(obs, z + 1e-6 * e) - logistic_nll(obs, z - 1e-6 * e)) / 2e-6
                       for e in np.eye(6)])
        assert np.max(np.abs(fd - logistic_nll_gradient(obs, z))) <= 1e-6


def test_nll_rejects_bad_labels(rng):
    obs = Observations(rng.standard_normal((3, 2)), np.array([0.0, 2.0, 1.0]))
    with pytest.raises(ValueError):
        logistic_nll_gradient(obs, np.zeros(2))


def test_nll_is_overflow_safe():
    obs = Observations(np.array([[1000.0], [-1000.0]]), np.array([0.0, 1.0]))
    assert np.isfinite(logistic_nll(obs, np.ones(1)))
    assert np.all(np.isfinite(logistic_nll_gradient(obs, np.ones(1))))


def test_logistic_field_equals_nll_gradient(rng):
    obs, _ = _logistic_data(8, 300, rng)
    G = empirical_field(obs, Link.LOGISTIC).as_field
    for z in rng.standard_normal((20, 8)):
        assert np.max(np.abs(G(z) - logistic_nll_gradient(obs, z))) <= 1e-10


def test_hinge_field_differs_from_least_squares_gradient(rng):
    # for non-canonical links the likelihood gradient weights residuals by f'
    model = GlmModel.for_experiment(Link.HINGE, 4)
    obs = sample_observations(model, draw_signal_on_sphere(4, rng), 100, rng)
    z = 0.5 * draw_signal_on_sphere(4, rng)
    u = obs.eta2d @ z
    psi_half = obs.eta2d.T @ (link_derivative(Link.HINGE, u) * (eval_link(Link.HINGE, u) - obs.y1d)) / 100
    phi = empirical_field(obs, Link.HINGE).as_field(z)
    assert np.linalg.norm(psi_half - phi) > 1e-3


@pytest.mark.parametrize("link", EXPERIMENT_LINKS)
def test_empirical_field_monotone(link, rng):
    model = GlmModel.for_experiment(link, 6)
    obs = sample_observations(model, draw_signal_on_sphere(6, rng), 40, rng)
    G = empirical_field(obs, link).as_field
    z1 = 3 * rng.standard_normal((2000, 6))
    z2 = 3 * rng.standard_normal((2000, 6))
    assert np.all(pair_ratios(G, z1, z2) >= -1e-10)


def test_noiseless_linear_recovery(rng):
    n, K, tol = 10, 200, 1e-10
    model = GlmModel(n, Link.LINEAR, sigma=0.0)
    x = draw_signal_on_sphere(n, rng)
    obs = sample_observations(model, x, K, rng)
    res = solve_saa(obs, Link.LINEAR, unit_ball(n), tol=tol, rng=rng)
    assert res.converged
    assert np.linalg.norm(res.estimate - x) <= 10 * tol / res.kappa
    lstsq = np.linalg.lstsq(obs.eta2d, obs.y1d, rcond=None)[0]
    assert np.linalg.norm(res.estimate - lstsq) <= 10 * tol / res.kappa


def test_noisy_linear_interior_matches_normal_equations(rng):
    n, K, tol = 5, 400, 1e-10
    model = GlmModel(n, Link.LINEAR, sigma=0.5)
    x = 0.5 * draw_signal_on_sphere(n, rng)
    obs = sample_observations(model, x, K, rng)
    lstsq = np.linalg.lstsq(obs.eta2d, obs.y1d, rcond=None)[0]
    assert np.linalg.norm(lstsq) < 1
    res = solve_saa(obs, Link.LINEAR, unit_ball(n), tol=tol, rng=rng)
    assert np.linalg.norm(res.estimate - lstsq) <= 10 * tol / res.kappa


@pytest.mark.parametrize("n,K", [(5, 100), (20, 500)])
def test_logistic_saa_equals_ml(n, K, rng):
    obs, _ = _logistic_data(n, K, rng)
    ball = unit_ball(n)
    saa = solve_saa(obs, Link.LOGISTIC, ball, tol=1e-10, rng=rng)
    ml = logistic_ml_estimate(obs, ball)
    assert saa.converged
    assert np.linalg.norm(saa.estimate - ml) <= 1e-6


def test_degenerate_zero_regressor():
    obs = Observations.from_list([Observation(np.zeros((3, 1)), np.array([1.3]))])
    res = solve_saa(obs, Link.LINEAR, unit_ball(3), rng=0)
    assert "degenerate" in res.flags
    np.testing.assert_array_equal(res.estimate, np.zeros(3))


def test_non_convergence_is_flagged(rng):
    obs, _ = _logistic_data(5, 100, rng)
    res = solve_saa(obs, Link.LOGISTIC, unit_ball(5), max_iters=3, rng=rng)
    assert not res.converged and "max_iters" in res.flags


@pytest.mark.parametrize("link", EXPERIMENT_LINKS)
def test_residual_certificate(link, rng):
    n, tol = 6, 1e-8
    model = GlmModel.for_experiment(link, n)
    obs = sample_observations(model, draw_signal_on_sphere(n, rng), 300, rng)
    ball = unit_ball(n)
    res = solve_saa(obs, link, ball, tol=tol, rng=rng)
    G = empirical_field(obs, link).as_field
    probes = ball.sample(500, rng)
    scale = np.max(np.linalg.norm(G(probes), axis=1))
    assert weak_solution_residual(G, ball, res.estimate, probes) <= tol * (1 + scale)
