"""Sample Average Approximation: weak solution of the VI with the empirical field."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from glmvi.glm_model import Observations, as_observations
from glmvi.links import Link, eval_link
from glmvi.vi_core import Ball, VectorField, estimate_lipschitz, estimate_modulus, solve_strongly_monotone_vi

MODULUS_FLOOR = 1e-6


@dataclass
class EmpiricalField:
    """``z -> (1/K) sum_k [eta_k f(eta_k^T z) - eta_k y_k]``."""

    observations: Observations
    link: Link
    as_field: VectorField


def empirical_field(observations, link) -> EmpiricalField:
    obs = as_observations(observations)
    if len(obs) == 0:
        raise ValueError("empty observation list")
    link = Link.parse(link)
    K = len(obs)
    if obs.m == 1:
        eta = obs.eta2d
        shift = eta.T @ obs.y1d / K

        def G(z):
            return eval_link(link, z @ eta.T) @ eta / K - shift
    else:
        eta = obs.eta
        shift = np.einsum("knm,km->n", eta, obs.y) / K

        def G(z):
            u = np.einsum("knm,...n->...km", eta, z)
            return np.einsum("knm,...km->...n", eta, eval_link(link, u)) / K - shift

    return EmpiricalField(obs, link, VectorField(obs.n, G, name=f"empirical({link.value})"))


def _check_labels(obs: Observations):
    # fractional labels in [0, 1] are allowed (soft labels); the formulas are unchanged
    if obs.m != 1:
        raise ValueError("the logistic likelihood needs scalar labels")
    if not np.all((obs.y >= 0) & (obs.y <= 1)):
        raise ValueError("labels must lie in [0, 1]")


def logistic_nll(observations, z) -> float:
    """``(1/K) sum_k [log(1 + exp(eta_k^T z)) - y_k eta_k^T z]``."""
    obs = as_observations(observations)
    _check_labels(obs)
    u = obs.eta2d @ np.asarray(z, dtype=float)
    return float(np.mean(np.logaddexp(0.0, u) - obs.y1d * u))


def logistic_nll_gradient(observations, z) -> np.ndarray:
    obs = as_observations(observations)
    _check_labels(obs)
    eta = obs.eta2d
    u = eta @ np.asarray(z, dtype=float)
    return eta.T @ (eval_link(Link.LOGISTIC, u) - obs.y1d) / len(obs)


def logistic_ml_estimate(observations, region: Ball, tol: float = 1e-11,
                         max_iters: int = 100_000) -> np.ndarray:
    """Maximum likelihood over the ball by projected gradient descent on the NLL.

    Independent of the VI route: the step is ``1/L`` with ``L`` the analytic
    curvature bound ``lambda_max(eta^T eta) / (4K)`` of the objective.
    """
    obs = as_observations(observations)
    _check_labels(obs)
    eta = obs.eta2d
    L = 0.25 * float(np.linalg.eigvalsh(eta.T @ eta)[-1]) / len(obs)
    if L == 0:
        return region.center.copy()
    z = region.center.copy()
    for _ in range(max_iters):
        z_new = region.project(z - logistic_nll_gradient(obs, z) / L)
        done = np.linalg.norm(z_new - z) * L <= tol
        z = z_new
        if done:
            break
    return z


@dataclass
class SaaResult:
    estimate: np.ndarray
    converged: bool
    kappa: float
    lipschitz: float
    iterations: int
    residual: float
    flags: list = field(default_factory=list)


def solve_saa(observations, link, region: Ball, kappa_hint: float | None = None,
              tol: float = 1e-8, max_iters: int = 200_000, rng=None,
              modulus_pairs: int = 500) -> SaaResult:
    """SAA estimate: weak solution of ``VI(G_omega, X)``.

    ``kappa_hint`` defaults to the sampled modulus of the empirical field.
    When that falls below 1e-6 the field is treated as merely monotone and
    the solver switches to diminishing steps; the result is then flagged
    ``"degenerate"``.
    """
    rng = np.random.default_rng(rng)
    emp = empirical_field(observations, link)
    G = emp.as_field
    flags = []
    if kappa_hint is None:
        kappa_hint = estimate_modulus(G, region, modulus_pairs, rng).modulus_lower
    L = estimate_lipschitz(G, region, rng=rng)
    degenerate = kappa_hint < MODULUS_FLOOR
    if degenerate:
        flags.append("degenerate")
    res = solve_strongly_monotone_vi(G, region, max(kappa_hint, MODULUS_FLOOR), L, tol,
                                     max_iters, diminishing=degenerate)
    flags += res.flags
    return SaaResult(res.point, res.converged, float(kappa_hint), L, res.iterations,
                     res.residual, flags)
