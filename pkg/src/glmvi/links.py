"""Scalar link functions and the radial profile of their Gaussian-regressor fields.

For ``eta ~ N(0, I_n)`` the population field ``F(z) = E{eta f(eta^T z)}`` of
any link is radial: ``F(z) = h(||z||) z / ||z||`` with
``h(t) = E_{zeta ~ N(0,1)}{zeta f(t zeta)}``.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np

from glmvi.vi_core import VectorField


class Link(str, enum.Enum):
    LOGISTIC = "logistic"
    LINEAR = "linear"
    HINGE = "hinge"
    RAMP = "ramp"
    ARCTAN = "arctan"

    @classmethod
    def parse(cls, value) -> "Link":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"a": "logistic", "b": "linear", "c": "hinge", "d": "ramp"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown link {value!r}") from None

    @property
    def kinks(self) -> tuple:
        return {Link.HINGE: (0.0,), Link.RAMP: (0.0, 1.0)}.get(self, ())

    @property
    def label_range(self) -> tuple:
        return {
            Link.LOGISTIC: (0.0, 1.0),
            Link.RAMP: (0.0, 1.0),
            Link.HINGE: (0.0, np.inf),
            Link.ARCTAN: (-np.pi / 2, np.pi / 2),
        }.get(self, (-np.inf, np.inf))

    def __call__(self, s):
        return eval_link(self, s)


# Experiment cases A-D, in that order.
EXPERIMENT_LINKS = (Link.LOGISTIC, Link.LINEAR, Link.HINGE, Link.RAMP)


def _logistic(s):
    # branch on sign so exp never overflows
    e = np.exp(-np.abs(s))
    return np.where(s >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def eval_link(kind, s):
    kind = Link.parse(kind)
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite link argument")
    if kind is Link.LOGISTIC:
        out = _logistic(s)
    elif kind is Link.LINEAR:
        out = s.copy()
    elif kind is Link.HINGE:
        out = np.maximum(s, 0.0)
    elif kind is Link.RAMP:
        out = np.clip(s, 0.0, 1.0)
    else:
        out = np.arctan(s)
    return out if out.ndim else float(out)


def link_derivative(kind, s):
    """Derivative of the link (right derivative at kinks)."""
    kind = Link.parse(kind)
    s = np.asarray(s, dtype=float)
    if kind is Link.LOGISTIC:
        p = _logistic(s)
        return p * (1.0 - p)
    if kind is Link.LINEAR:
        return np.ones_like(s)
    if kind is Link.HINGE:
        return (s >= 0).astype(float)
    if kind is Link.RAMP:
        return ((s >= 0) & (s < 1)).astype(float)
    return 1.0 / (1.0 + s * s)


def diagonal_field(link, m: int) -> VectorField:
    """The link applied coordinatewise on ``R^m``."""
    link = Link.parse(link)
    if m < 1:
        raise ValueError("m must be >= 1")
    return VectorField(m, lambda u: eval_link(link, u), name=f"diag({link.value})")


@lru_cache(maxsize=None)
def _hermite_rule(nodes: int):
    x, w = np.polynomial.hermite.hermgauss(nodes)
    # E{g(zeta)} = pi^{-1/2} sum w g(sqrt(2) x)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


@lru_cache(maxsize=None)
def _legendre_rule(nodes: int):
    return np.polynomial.legendre.leggauss(nodes)


_TAIL = 12.0  # standard normal mass beyond |zeta| = 12 is below 1e-32
_PANEL_NODES = 32


def _h_hermite(link: Link, t: float, nodes: int) -> float:
    zeta, w = _hermite_rule(nodes)
    return float(np.sum(w * zeta * eval_link(link, t * zeta)))


def _breakpoints(link: Link, t: float) -> np.ndarray:
    # unit panels across the bulk, dyadic refinement towards 0 on the 1/t scale
    # where f(t zeta) changes fastest, and the kinks of f mapped to zeta
    cuts = list(np.arange(-_TAIL, _TAIL + 0.5, 1.0))
    scale = 1.0 / t
    for j in range(-4, 8):
        c = scale * 2.0**j
        cuts += [c, -c]
    cuts += [k / t for k in link.kinks]
    cuts = np.unique(np.clip(cuts, -_TAIL, _TAIL))
    return cuts


def _h_composite(link: Link, t: float) -> float:
    """Composite Gauss-Legendre over panels between breakpoints of the integrand."""
    cuts = _breakpoints(link, t)
    x, w = _legendre_rule(_PANEL_NODES)
    a, b = cuts[:-1, None], cuts[1:, None]
    half = 0.5 * (b - a)
    zeta = 0.5 * (a + b) + half * x
    dens = np.exp(-0.5 * zeta**2) / np.sqrt(2 * np.pi)
    return float(np.sum(half * w * zeta * dens * eval_link(link, t * zeta)))


def h_profile(link, t: float, nodes: int = 64, max_nodes: int = 256) -> float:
    """Radial profile ``h(t) = E{zeta f(t zeta)}``, ``zeta ~ N(0, 1)``.

    Smooth links use Gauss-Hermite quadrature, doubling ``nodes`` until two
    successive rules agree to 1e-8. Links with kinks (hinge, ramp), and
    smooth links whose Hermite rules do not settle by ``max_nodes``, are
    integrated with a composite Gauss-Legendre rule split at the kinks.
    """
    link = Link.parse(link)
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return 0.0
    if link.kinks:
        return _h_composite(link, t)
    prev = _h_hermite(link, t, nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = _h_hermite(link, t, nodes)
        if abs(cur - prev) <= 1e-8:
            return cur
        prev = cur
    return _h_composite(link, t)


def h_derivative(link, r: float, rel_step: float = 1e-4) -> float:
    step = rel_step * max(1.0, r)
    lo = max(r - step, 0.0)
    return (h_profile(link, r + step) - h_profile(link, lo)) / (r + step - lo)


def modulus_profile(link, R: float, grid_size: int = 128) -> float:
    """Modulus of strong monotonicity of the radial field on ``{||z|| <= R}``.

    The symmetric Jacobian of ``h(r) z / r`` has eigenvalues ``h'(r)`` (radial)
    and ``h(r) / r`` (tangential); the modulus is their minimum over a
    log-spaced grid on ``[1e-3 R, R]``.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if grid_size < 16:
        raise ValueError("grid_size must be >= 16")
    link = Link.parse(link)
    best = np.inf
    for r in np.geomspace(1e-3 * R, R, grid_size):
        best = min(best, h_derivative(link, r), h_profile(link, r) / r)
    return float(best)


def radial_field(link, n: int) -> VectorField:
    """Population field ``F`` on ``R^n`` for standard normal regressors."""
    link = Link.parse(link)

    def F(z):
        r = np.linalg.norm(z, axis=-1, keepdims=True)
        flat = r.reshape(-1)
        h = np.array([h_profile(link, float(t)) for t in flat]).reshape(r.shape)
        return np.where(r > 0, h * z / np.where(r > 0, r, 1.0), 0.0)

    return VectorField(n, F, name=f"radial({link.value})")
