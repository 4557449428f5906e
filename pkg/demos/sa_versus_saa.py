"""
Recovering a GLM signal with SA and SAA
=======================================

Draw a signal on the unit sphere, generate K observations through the
ramp link with Gaussian label noise and compare the two estimators.
"""

import numpy as np

from glmvi import GlmModel, Link, modulus_profile, unit_ball
from glmvi.glm_model import draw_signal_on_sphere, estimate_M, sample_observations
from glmvi.sa_estimator import SaConfig, error_bound, run_sa, tune_kappa
from glmvi.saa_estimator import solve_saa

rng = np.random.default_rng(7)
n = 20
model = GlmModel.for_experiment(Link.RAMP, n)
x = draw_signal_on_sphere(n, rng)

for K in (400, 2000, 8000):
    obs = sample_observations(model, x, K, rng)

    # SA needs a step parameter; pick it on labels regenerated from a fake signal
    kappa = tune_kappa(model, obs, rng=rng)
    sa = run_sa(model, x, SaConfig(kappa), observations=obs)

    saa = solve_saa(obs, Link.RAMP, unit_ball(n), rng=rng)
    print(f"K={K:5d}  SA error {np.linalg.norm(sa.estimate - x):.3f} (kappa {kappa:.3f})"
          f"  SAA error {np.linalg.norm(saa.estimate - x):.3f} ({saa.iterations} iterations)")

# the worst-case mean squared error guarantee for SA with the analytic modulus
M = estimate_M(model, rng=rng)
kappa = modulus_profile(Link.RAMP, 1.0)
print("bound on E||x_hat - x||^2 at K=8000:", error_bound(M, kappa, 8000))
