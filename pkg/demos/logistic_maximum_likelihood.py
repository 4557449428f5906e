"""
Logistic regression: the VI estimate is the ML estimate
=======================================================

For the logistic link the empirical field is exactly the gradient of the
average negative log-likelihood, so solving the VI and minimising the
likelihood over the ball give the same point.
"""

import numpy as np

from glmvi import GlmModel, Link, unit_ball
from glmvi.glm_model import draw_signal_on_sphere, sample_observations
from glmvi.saa_estimator import empirical_field, logistic_ml_estimate, logistic_nll_gradient, solve_saa

rng = np.random.default_rng(3)
n, K = 10, 1000
model = GlmModel.for_experiment(Link.LOGISTIC, n)
x = draw_signal_on_sphere(n, rng)
obs = sample_observations(model, x, K, rng)

z = rng.standard_normal(n)
G = empirical_field(obs, Link.LOGISTIC).as_field
print("field minus gradient:", np.max(np.abs(G(z) - logistic_nll_gradient(obs, z))))

ball = unit_ball(n)
vi = solve_saa(obs, Link.LOGISTIC, ball, tol=1e-10, rng=rng)
ml = logistic_ml_estimate(obs, ball)
print("distance between the estimates:", np.linalg.norm(vi.estimate - ml))
print("recovery error:", np.linalg.norm(ml - x))
