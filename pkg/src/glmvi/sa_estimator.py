"""Stochastic Approximation: projected stochastic recurrence with steps 1/(kappa (k+1))."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from glmvi.glm_model import (GlmModel, Observations, as_observations, draw_labels,
                             draw_signal_on_sphere, sample_observations)
from glmvi.links import eval_link, modulus_profile
from glmvi.vi_core import Ball, unit_ball


@dataclass
class SaConfig:
    kappa: float
    K: int | None = None
    z0: np.ndarray | None = None
    record_trajectory: bool = False

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.K is not None and self.K < 0:
            raise ValueError("K must be nonnegative")


@dataclass
class SaRun:
    estimate: np.ndarray
    steps_taken: int
    kappa: float
    trajectory: np.ndarray | None = None
    seed: object = None


def step_size(kappa: float, k):
    """``gamma_k = 1 / (kappa (k + 1))`` for ``k = 1, 2, ...``."""
    return 1.0 / (kappa * (np.asarray(k) + 1.0))


def error_bound(M: float, kappa: float, k) -> float:
    """Mean squared error bound ``4 M^2 / (kappa^2 (k + 1))`` after ``k`` steps."""
    if M < 0 or kappa <= 0 or np.any(np.asarray(k) < 0):
        raise ValueError("need M >= 0, kappa > 0, k >= 0")
    return 4.0 * M**2 / (kappa**2 * (np.asarray(k, dtype=float) + 1.0))


def sa_step(z_prev, gamma: float, g_sample, region: Ball) -> np.ndarray:
    if not region.contains(z_prev):
        raise ValueError("previous iterate lies outside the set")
    return region.project(np.asarray(z_prev, dtype=float) - gamma * np.asarray(g_sample, dtype=float))


def sa_batch(link, eta: np.ndarray, y: np.ndarray, kappas, z0=None, radius: float = 1.0,
             record_trajectory: bool = False, center=None):
    """Run independent SA recurrences side by side on one ball.

    Parameters
    ----------
    eta : array, shape (B, K, n, m) or (K, n, m)
        Regressors per run; a 3-D array is shared by all runs.
    y : array, shape (B, K, m) or (K, m)
    kappas : array, shape (B,)
        Step-size parameter of each run.
    z0 : array, shape (n,) or (B, n), optional
        Starting points (default: the ball's center).
    radius, center
        The ball (default center: origin).

    Returns
    -------
    final iterates of shape (B, n), and the (K+1, B, n) trajectory if requested.
    """
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    B = kappas.shape[0]
    if eta.ndim == 3:
        eta = np.broadcast_to(eta, (B,) + eta.shape)
        y = np.broadcast_to(y, (B,) + y.shape)
    _, K, n, m = eta.shape
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    z = np.array(np.broadcast_to(c if z0 is None else z0, (B, n)), dtype=float)
    traj = np.empty((K + 1, B, n)) if record_trajectory else None
    if traj is not None:
        traj[0] = z
    scalar = m == 1
    if scalar:
        eta = eta[..., 0]
        y = y[..., 0]
    for k in range(1, K + 1):
        gamma = (1.0 / (kappas * (k + 1)))[:, None]
        e = eta[:, k - 1]
        if scalar:
            u = np.einsum("bn,bn->b", e, z)
            g = e * (eval_link(link, u) - y[:, k - 1])[:, None]
        else:
            u = np.einsum("bnm,bn->bm", e, z)
            g = np.einsum("bnm,bm->bn", e, eval_link(link, u) - y[:, k - 1])
        d = z - gamma * g - c
        norm = np.sqrt(np.einsum("bn,bn->b", d, d))
        over = norm > radius
        if over.any():
            d[over] *= (radius / norm[over])[:, None]
        z = c + d
        if traj is not None:
            traj[k] = z
    return (z, traj) if record_trajectory else z


def run_sa(model: GlmModel, x_true, config: SaConfig, rng=None, observations=None,
           region: Ball | None = None) -> SaRun:
    """SA estimate after ``config.K`` steps.

    Synthetic mode draws fresh observations from ``model`` under ``x_true``;
    data mode (``observations`` given) consumes the provided sequence.
    """
    region = region if region is not None else unit_ball(model.n)
    z0 = region.center.copy() if config.z0 is None else np.asarray(config.z0, dtype=float)
    if not region.contains(z0):
        raise ValueError("z0 lies outside the set")
    if observations is None:
        if config.K is None:
            raise ValueError("synthetic mode needs config.K")
        rng = np.random.default_rng(rng)
        obs = sample_observations(model, x_true, config.K, rng)
    else:
        obs = as_observations(observations)
        if config.K is not None:
            obs = obs[: config.K]
    K = len(obs)
    if K == 0:
        return SaRun(z0, 0, config.kappa, z0[None] if config.record_trajectory else None)
    out = sa_batch(model.link, obs.eta, obs.y, [config.kappa], z0, region.radius,
                   config.record_trajectory, region.center)
    if config.record_trajectory:
        z, traj = out
        return SaRun(z[0], K, config.kappa, traj[:, 0])
    return SaRun(out[0], K, config.kappa)


def default_kappa_grid(link, R: float = 1.0, points: int = 9) -> np.ndarray:
    """Log-spaced grid over ``[kappa_hint / 8, 8 kappa_hint]``."""
    hint = modulus_profile(link, R)
    return np.geomspace(hint / 8, hint * 8, points)


def tune_kappa(model: GlmModel, observations, kappa_grid: Sequence[float] | None = None,
               rng=None, training_signals: int = 1) -> float:
    """Pick the SA step parameter on artificial labels.

    A training signal is drawn on the unit sphere, labels are regenerated
    from the real regressors as if it were the true signal, and SA is run for
    every grid value. The value with the smallest recovery error wins (ties
    go to the smaller value). With ``training_signals > 1`` errors are
    averaged over independent training signals.
    """
    obs = as_observations(observations)
    if len(obs) == 0:
        raise ValueError("need observations")
    grid = np.sort(np.asarray(default_kappa_grid(model.link) if kappa_grid is None else kappa_grid,
                              dtype=float))
    if grid.size == 0:
        raise ValueError("empty kappa grid")
    if grid.size == 1:
        return float(grid[0])
    rng = np.random.default_rng(rng)
    errors = np.zeros(grid.size)
    for _ in range(training_signals):
        x_train = draw_signal_on_sphere(model.n, rng)
        y_train = draw_labels(model, obs.eta, x_train, rng)
        est = sa_batch(model.link, obs.eta, y_train, grid)
        errors += np.linalg.norm(est - x_train, axis=1)
    return float(grid[int(np.argmin(errors))])
