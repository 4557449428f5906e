"""Fixed-design estimation from one vector observation ``y = phi(eta^T x) + lambda xi``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from glmvi.links import Link, eval_link, link_derivative
from glmvi.vi_core import Ball, VectorField, estimate_lipschitz, estimate_modulus, solve_strongly_monotone_vi


@dataclass(frozen=True)
class SingleObsModel:
    """Deterministic ``n x K`` regressor matrix with a coordinatewise link."""

    eta: np.ndarray
    link: Link = Link.ARCTAN
    noise_sigma: float = 0.0

    def __post_init__(self):
        eta = np.atleast_2d(np.asarray(self.eta, dtype=float))
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "link", Link.parse(self.link))
        if self.noise_sigma < 0:
            raise ValueError("noise level must be nonnegative")

    @property
    def n(self) -> int:
        return self.eta.shape[0]

    @property
    def K(self) -> int:
        return self.eta.shape[1]

    def field(self) -> VectorField:
        """``F(z) = eta phi(eta^T z)``."""
        eta, link = self.eta, self.link
        return VectorField(self.n, lambda z: eval_link(link, z @ eta) @ eta.T, name="F")

    def observed_field(self, y) -> VectorField:
        """``G_y(z) = F(z) - eta y``."""
        eta, link = self.eta, self.link
        shift = eta @ np.asarray(y, dtype=float)
        return VectorField(self.n, lambda z: eval_link(link, z @ eta) @ eta.T - shift, name="G_y")

    def residual(self, x, y) -> np.ndarray:
        """``Delta(x, y) = eta [y - phi(eta^T x)]``."""
        return self.eta @ (np.asarray(y, dtype=float) - eval_link(self.link, np.asarray(x) @ self.eta))


@dataclass
class SingleObsResult:
    estimate: np.ndarray
    kappa: float
    converged: bool
    residual_norm: float = np.nan
    bound: float = np.nan
    iterations: int = 0
    flags: list = field(default_factory=list)


def gaussian_ensemble(n: int, K: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1 or K < 1:
        raise ValueError("n and K must be >= 1")
    return rng.standard_normal((n, K))


def observe(model: SingleObsModel, x, rng: np.random.Generator, xi=None) -> np.ndarray:
    """``y = phi(eta^T x) + lambda xi`` with ``xi ~ N(0, I_K)`` unless given."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite signal")
    if xi is None:
        xi = rng.standard_normal(model.K)
    return eval_link(model.link, x @ model.eta) + model.noise_sigma * np.asarray(xi)


def deterministic_error_bound(model: SingleObsModel, x, y, kappa: float) -> float:
    """Per-realization bound ``||Delta(x, y)|| / kappa`` on the estimation error."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return float(np.linalg.norm(model.residual(x, y))) / kappa


def arctan_modulus_lower_bound(eta: np.ndarray, region: Ball) -> float:
    """Conservative modulus of ``F`` on a ball for the arctan link.

    Over the ball every argument ``eta_k^T z`` has magnitude at most
    ``|eta_k^T c| + r ||eta_k||``, where arctan' is at least ``1/(1+u^2)``;
    the modulus is then at least that times ``lambda_min(eta eta^T)``.
    """
    reach = np.abs(region.center @ eta) + region.radius * np.linalg.norm(eta, axis=0)
    kappa_phi = float(np.min(link_derivative(Link.ARCTAN, reach)))
    return kappa_phi * float(np.linalg.eigvalsh(eta @ eta.T)[0])


def estimate_field_modulus(model: SingleObsModel, region: Ball, rng=None, num_pairs: int = 500) -> float:
    return estimate_modulus(model.field(), region, num_pairs, rng).modulus_lower


def solve_single_obs(model: SingleObsModel, y, region: Ball, tol: float = 1e-8,
                     max_iters: int = 200_000, rng=None, kappa: float | None = None,
                     x_true=None) -> SingleObsResult:
    """Weak solution of ``VI(G_y, X)``; reports the error bound when ``x_true`` is known."""
    rng = np.random.default_rng(rng)
    if kappa is None:
        kappa = estimate_field_modulus(model, region, rng)
    if kappa <= 0:
        raise ValueError("the field is not strongly monotone on the set")
    G = model.observed_field(y)
    L = estimate_lipschitz(G, region, rng=rng)
    res = solve_strongly_monotone_vi(G, region, kappa, L, tol, max_iters)
    out = SingleObsResult(res.point, kappa, res.converged, iterations=res.iterations, flags=res.flags)
    if x_true is not None:
        out.residual_norm = float(np.linalg.norm(model.residual(x_true, y)))
        out.bound = out.residual_norm / kappa
    return out
