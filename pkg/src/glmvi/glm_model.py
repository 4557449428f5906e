"""Observation model: Gaussian regressors, a link, and a label law with mean f(eta^T x)."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from glmvi.links import Link, eval_link, radial_field
from glmvi.vi_core import Ball, VectorField, unit_ball


class LabelLaw(str, enum.Enum):
    BERNOULLI = "bernoulli"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class GlmModel:
    """Regressors ``eta`` (n x m, iid N(0,1)) and labels with ``E{y|eta} = f(eta^T x)``.

    ``sigma`` is the per-coordinate standard deviation of Gaussian labels
    and is ignored for Bernoulli labels.
    """

    n: int
    link: Link
    label_law: LabelLaw = LabelLaw.GAUSSIAN
    sigma: float = 1.0
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "link", Link.parse(self.link))
        object.__setattr__(self, "label_law", LabelLaw(self.label_law))
        if self.n < 1 or self.m < 1:
            raise ValueError("dimensions must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.label_law is LabelLaw.BERNOULLI:
            lo, hi = self.link.label_range
            if lo < 0 or hi > 1:
                raise ValueError(f"Bernoulli labels need a link with range in [0, 1]; "
                                 f"{self.link.value} does not qualify")

    @classmethod
    def for_experiment(cls, link, n: int, sigma: float = 1.0) -> "GlmModel":
        """Logistic gets Bernoulli labels, the other cases Gaussian ones."""
        link = Link.parse(link)
        if link is Link.LOGISTIC:
            return cls(n, link, LabelLaw.BERNOULLI)
        return cls(n, link, LabelLaw.GAUSSIAN, sigma)

    def population_field(self) -> VectorField:
        """``F(z) = E{eta f(eta^T z)}`` in closed radial form (m = 1 only)."""
        if self.m != 1:
            raise NotImplementedError("radial form is available for scalar labels only")
        return radial_field(self.link, self.n)


@dataclass
class Observation:
    eta: np.ndarray  # (n, m)
    y: np.ndarray  # (m,)


@dataclass
class Observations:
    """A stack of ``K`` observations: ``eta`` is (K, n, m) and ``y`` is (K, m)."""

    eta: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.eta.ndim == 2:  # (K, n) shorthand for m = 1
            self.eta = self.eta[:, :, None]
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.eta.ndim != 3 or self.y.shape != (self.eta.shape[0], self.eta.shape[2]):
            raise ValueError(f"inconsistent shapes eta={self.eta.shape} y={self.y.shape}")
        if not (np.all(np.isfinite(self.eta)) and np.all(np.isfinite(self.y))):
            raise ValueError("observations must be finite")

    @classmethod
    def from_list(cls, obs: Sequence[Observation]) -> "Observations":
        if len(obs) == 0:
            raise ValueError("empty observation list")
        eta = np.stack([np.asarray(o.eta, dtype=float).reshape(np.shape(o.eta)[0], -1) for o in obs])
        y = np.stack([np.atleast_1d(np.asarray(o.y, dtype=float)) for o in obs])
        return cls(eta, y)

    def __len__(self):
        return self.eta.shape[0]

    def __getitem__(self, k) -> Observation | "Observations":
        if isinstance(k, slice):
            return Observations(self.eta[k], self.y[k])
        return Observation(self.eta[k], self.y[k])

    @property
    def n(self) -> int:
        return self.eta.shape[1]

    @property
    def m(self) -> int:
        return self.eta.shape[2]

    @property
    def eta2d(self) -> np.ndarray:
        """Regressors as a (K, n) matrix; only valid for m = 1."""
        if self.m != 1:
            raise ValueError("eta2d requires scalar labels")
        return self.eta[:, :, 0]

    @property
    def y1d(self) -> np.ndarray:
        if self.m != 1:
            raise ValueError("y1d requires scalar labels")
        return self.y[:, 0]


def as_observations(obs) -> Observations:
    if isinstance(obs, Observations):
        return obs
    if isinstance(obs, Observation):
        return Observations.from_list([obs])
    return Observations.from_list(list(obs))


def default_signal_set(n: int) -> Ball:
    return unit_ball(n)


def draw_signal_on_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    while True:
        g = rng.standard_normal(n)
        norm = np.linalg.norm(g)
        if norm > 0:
            return g / norm


def draw_labels(model: GlmModel, eta: np.ndarray, x, rng: np.random.Generator) -> np.ndarray:
    """Labels for regressors ``eta`` of shape (K, n, m) under signal ``x``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite signal")
    mean = eval_link(model.link, np.einsum("knm,n->km", eta, x))
    if model.label_law is LabelLaw.BERNOULLI:
        return (rng.random(mean.shape) < mean).astype(float)
    if model.sigma == 0:
        return mean
    return mean + model.sigma * rng.standard_normal(mean.shape)


def sample_observations(model: GlmModel, x, K: int, rng: np.random.Generator) -> Observations:
    eta = rng.standard_normal((K, model.n, model.m))
    return Observations(eta, draw_labels(model, eta, x, rng))


def sample_observation(model: GlmModel, x, rng: np.random.Generator) -> Observation:
    return sample_observations(model, x, 1, rng)[0]


def field_samples(link, obs: Observations, z) -> np.ndarray:
    """``G_(eta_k, y_k)(z) = eta_k f(eta_k^T z) - eta_k y_k`` for every k; shape (K, n)."""
    u = np.einsum("knm,n->km", obs.eta, z)
    return np.einsum("knm,km->kn", obs.eta, eval_link(link, u) - obs.y)


def stochastic_field_sample(model: GlmModel, obs: Observation, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (model.n,):
        raise ValueError(f"z must have shape ({model.n},)")
    eta = np.asarray(obs.eta, dtype=float).reshape(model.n, -1)
    y = np.atleast_1d(np.asarray(obs.y, dtype=float))
    return eta @ (eval_link(model.link, eta.T @ z) - y)


def expected_field(model: GlmModel, z, num_samples: int, rng: np.random.Generator,
                   return_stderr: bool = False):
    """Monte Carlo estimate of ``F(z) = E{eta f(eta^T z)}``."""
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    z = np.asarray(z, dtype=float)
    eta = rng.standard_normal((num_samples, model.n, model.m))
    vals = np.einsum("knm,km->kn", eta, eval_link(model.link, np.einsum("knm,n->km", eta, z)))
    mean = vals.mean(axis=0)
    if return_stderr:
        return mean, vals.std(axis=0, ddof=1) / np.sqrt(num_samples)
    return mean


def second_moment(model: GlmModel, x, num_samples: int, rng: np.random.Generator):
    """Monte Carlo ``E{||eta y||^2}`` under signal ``x`` with its standard error."""
    obs = sample_observations(model, x, num_samples, rng)
    vals = np.einsum("knm,km->kn", obs.eta, obs.y)
    sq = np.einsum("kn,kn->k", vals, vals)
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(num_samples))


def estimate_M(model: GlmModel, signal_set: Ball | None = None, num_signals: int = 8,
               samples_per_signal: int = 20_000, rng=None, inflation: float = 1.2,
               stderr_margin: float = 0.0) -> float:
    """Moment constant ``M`` with ``E{||eta y||^2} <= M^2`` over the signal set.

    Signals are drawn on the boundary sphere of ``signal_set``; for the
    implemented laws the second moment grows with ``||x||``, so the sphere is
    the worst case. Returns ``inflation * sqrt(max(mean + stderr_margin * se))``.
    """
    if num_signals < 1 or samples_per_signal < 1:
        raise ValueError("counts must be >= 1")
    rng = np.random.default_rng(rng)
    signal_set = signal_set if signal_set is not None else default_signal_set(model.n)
    worst = 0.0
    for _ in range(num_signals):
        x = signal_set.center + signal_set.radius * draw_signal_on_sphere(model.n, rng)
        mean, se = second_moment(model, x, samples_per_signal, rng)
        worst = max(worst, mean + stderr_margin * se)
    return inflation * float(np.sqrt(worst))
