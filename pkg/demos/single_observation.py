"""
Estimation from one noisy observation
=====================================

A fixed Gaussian regressor matrix eta (n x K), an arctan link and one noisy
vector y = arctan(eta^T x) + lambda xi. The VI estimate comes with a
per-realisation bound ||x_hat - x|| <= ||eta (y - arctan(eta^T x))|| / kappa.
"""

import numpy as np

from glmvi import Link, unit_ball
from glmvi.single_obs import SingleObsModel, arctan_modulus_lower_bound, gaussian_ensemble, observe, solve_single_obs

rng = np.random.default_rng(11)
n = 20
ball = unit_ball(n)

for K in (400, 2000):
    eta = gaussian_ensemble(n, K, rng)
    x = ball.sample(1, rng)[0]
    print(f"K={K}: analytic modulus lower bound {arctan_modulus_lower_bound(eta, ball):.1f}")
    for lam in (0.1, 1.0):
        model = SingleObsModel(eta, Link.ARCTAN, lam)
        res = solve_single_obs(model, observe(model, x, rng), ball, rng=rng, x_true=x)
        print(f"  lambda={lam}: error {np.linalg.norm(res.estimate - x):.4f}  bound {res.bound:.4f}")
