"""Monotone vector fields, ball projections and a projected-field VI solver.

Every field in this package evaluates batches: a point array of shape
``(..., dim)`` maps to a value array of the same shape. Single points are
plain 1-D arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MEMBERSHIP_TOL = 1e-9


class VectorField:
    """An everywhere-defined map ``R^dim -> R^dim``.

    Parameters
    ----------
    dim : int
        Dimension of the argument and the value.
    func : callable
        Maps an array of shape ``(..., dim)`` to an array of the same shape.
        If ``vectorized`` is False, ``func`` only has to accept a single
        1-D point and is looped over leading axes.
    vectorized : bool
        Whether ``func`` handles leading batch axes itself.
    """

    def __init__(self, dim: int, func: Callable, vectorized: bool = True, name: str = ""):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = int(dim)
        self._func = func
        self.vectorized = vectorized
        self.name = name

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[-1:] != (self.dim,):
            raise ValueError(f"expected points of dimension {self.dim}, got shape {z.shape}")
        if self.vectorized:
            return np.asarray(self._func(z), dtype=float)
        flat = z.reshape(-1, self.dim)
        out = np.array([self._func(p) for p in flat], dtype=float)
        return out.reshape(z.shape)

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<VectorField{label} dim={self.dim}>"


class Ball:
    """Euclidean ball ``{z : ||z - center||_2 <= radius}``."""

    def __init__(self, dim: int, radius: float = 1.0, center=None):
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.dim = int(dim)
        self.radius = float(radius)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        if self.center.shape != (self.dim,):
            raise ValueError("center has the wrong dimension")

    @property
    def diameter_bound(self) -> float:
        return 2.0 * self.radius

    def project(self, z) -> np.ndarray:
        return project_ball(self.radius, self.center, z)

    def contains(self, z, tol: float = MEMBERSHIP_TOL) -> bool | np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.linalg.norm(z - self.center, axis=-1) <= self.radius + tol

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points in the ball (normalized Gaussian times ``U^(1/dim)``)."""
        g = rng.standard_normal((size, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(size) ** (1.0 / self.dim)
        return self.center + g * r[:, None]

    def __repr__(self):
        return f"Ball(dim={self.dim}, radius={self.radius})"


def unit_ball(dim: int) -> Ball:
    return Ball(dim, 1.0)


def project_ball(radius: float, center, z) -> np.ndarray:
    """Euclidean projection onto a ball; works row-wise on ``(..., dim)`` input."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite point")
    center = np.asarray(center, dtype=float)
    d = z - center
    norm = np.linalg.norm(d, axis=-1, keepdims=True)
    scale = np.where(norm > radius, radius / np.where(norm > 0, norm, 1.0), 1.0)
    return center + d * scale


def affine_substitution(f: VectorField, A, a=None) -> VectorField:
    """The field ``x -> A f(A^T x + a)``; ``A`` is ``n x m`` for ``f`` over ``R^m``.

    Monotonicity is preserved, and a modulus ``kappa`` of ``f`` on the image
    set becomes ``sigma_min(A)^2 * kappa``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n, m = A.shape
    if m != f.dim:
        raise ValueError(f"A has {m} columns but the field has dimension {f.dim}")
    a = np.zeros(m) if a is None else np.asarray(a, dtype=float)
    if a.shape != (m,):
        raise ValueError(f"shift must have shape ({m},), got {a.shape}")

    def g(x):
        return f(x @ A + a) @ A.T

    return VectorField(n, g, name=f"affine({f.name})")


def average_field(fields: Sequence[VectorField], weights=None) -> VectorField:
    """Weighted average of fields sharing one dimension."""
    if len(fields) == 0:
        raise ValueError("need at least one field")
    dims = {f.dim for f in fields}
    if len(dims) != 1:
        raise ValueError(f"fields disagree on dimension: {sorted(dims)}")
    if weights is None:
        weights = np.full(len(fields), 1.0 / len(fields))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(fields),):
        raise ValueError("one weight per field is required")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    fields = list(fields)

    def g(z):
        out = weights[0] * fields[0](z)
        for w, f in zip(weights[1:], fields[1:]):
            out = out + w * f(z)
        return out

    return VectorField(fields[0].dim, g, name="average")


@dataclass
class MonotonicityEstimate:
    """Smallest observed ratio ``<g(z)-g(z'), z-z'> / ||z-z'||^2``."""

    modulus_lower: float
    pair_count: int
    worst_pair: tuple


def pair_ratios(g: VectorField, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    d = z1 - z2
    dd = np.einsum("ij,ij->i", d, d)
    num = np.einsum("ij,ij->i", g(z1) - g(z2), d)
    return num / dd


def jacobian(g: VectorField, z, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian at a single point."""
    z = np.asarray(z, dtype=float)
    n = g.dim
    h = step * max(1.0, float(np.linalg.norm(z)))
    pts = np.concatenate([z + h * np.eye(n), z - h * np.eye(n)])
    vals = g(pts)
    return ((vals[:n] - vals[n:]) / (2 * h)).T


def estimate_modulus(g: VectorField, region: Ball, num_pairs: int = 500, rng=None,
                     jacobian_points: int = 16) -> MonotonicityEstimate:
    """Empirical modulus of strong monotonicity of ``g`` on ``region``.

    Two surrogates are minimised together: the pair ratio over ``num_pairs``
    uniform pairs, and the smallest eigenvalue of the symmetrised
    finite-difference Jacobian at ``jacobian_points`` uniform points
    (``d^T g'(z) d >= kappa d^T d``). Both only ever over-estimate the true
    modulus, so more probes can only tighten the value.
    """
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    if region.diameter_bound <= 0:
        raise ValueError("degenerate set")
    rng = np.random.default_rng(rng)
    z1 = region.sample(num_pairs, rng)
    z2 = region.sample(num_pairs, rng)
    ratios = pair_ratios(g, z1, z2)
    i = int(np.argmin(ratios))
    best, worst = float(ratios[i]), (z1[i], z2[i])
    if jacobian_points > 0:
        for p in region.sample(jacobian_points, rng):
            J = jacobian(g, p)
            lam = float(np.linalg.eigvalsh(0.5 * (J + J.T))[0])
            if lam < best:
                best, worst = lam, (p, p)
    return MonotonicityEstimate(best, num_pairs, worst)


def estimate_lipschitz(g: VectorField, region: Ball, num_pairs: int = 200, rng=None,
                       safety: float = 1.5) -> float:
    """Largest sampled ``||g(z)-g(z')|| / ||z-z'||`` times ``safety``."""
    rng = np.random.default_rng(rng)
    z1 = region.sample(num_pairs, rng)
    z2 = region.sample(num_pairs, rng)
    num = np.linalg.norm(g(z1) - g(z2), axis=1)
    den = np.linalg.norm(z1 - z2, axis=1)
    return safety * float(np.max(num / den))


@dataclass
class VIResult:
    point: np.ndarray
    converged: bool
    iterations: int
    step: float
    residual: float
    kappa: float
    lipschitz: float
    flags: list = field(default_factory=list)


def solve_strongly_monotone_vi(g: VectorField, region: Ball, kappa: float,
                               lipschitz_hint: float | None = None, tol: float = 1e-8,
                               max_iters: int = 100_000, z0=None, rng=None,
                               diminishing: bool = False) -> VIResult:
    """Projected-field iteration ``z <- Proj(z - gamma g(z))``.

    With ``diminishing=False`` the step is the constant ``kappa / L^2``, which
    contracts for a ``kappa``-strongly monotone, ``L``-Lipschitz field.
    ``diminishing=True`` uses ``gamma_k = 1 / (L k)`` for fields that are
    monotone but possibly not strongly so. Iteration stops once
    ``||z_k - z_{k-1}|| / gamma_k <= tol``.
    """
    if kappa <= 0 and not diminishing:
        raise ValueError("kappa must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    L = lipschitz_hint if lipschitz_hint is not None else estimate_lipschitz(g, region, rng=rng)
    if L <= 0:
        L = 1.0  # constant field
    z = region.center.copy() if z0 is None else np.asarray(z0, dtype=float).copy()
    if not region.contains(z):
        raise ValueError("starting point lies outside the set")
    step = kappa / L**2 if not diminishing else 1.0 / L
    residual = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        gamma = step / it if diminishing else step
        z_new = region.project(z - gamma * g(z))
        residual = float(np.linalg.norm(z_new - z)) / gamma
        z = z_new
        if residual <= tol:
            return VIResult(z, True, it, step, residual, kappa, L)
    return VIResult(z, False, it, step, residual, kappa, L, ["max_iters"])


def _check_inside(region: Ball, pts: np.ndarray, what: str):
    if not np.all(region.contains(pts)):
        raise ValueError(f"{what} outside the set")


def weak_solution_residual(g: VectorField, region: Ball, candidate, probes) -> float:
    """``max_z -g(z)^T (z - candidate)`` over probes; ``<= 0`` certifies the probes."""
    candidate = np.asarray(candidate, dtype=float)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    _check_inside(region, candidate, "candidate")
    _check_inside(region, probes, "probe")
    vals = -np.einsum("ij,ij->i", g(probes), probes - candidate)
    return float(np.max(vals))


def strong_solution_residual(g: VectorField, region: Ball, candidate, probes) -> float:
    """``max_z -g(candidate)^T (z - candidate)`` over probes."""
    candidate = np.asarray(candidate, dtype=float)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    _check_inside(region, candidate, "candidate")
    _check_inside(region, probes, "probe")
    return float(np.max(-(probes - candidate) @ g(candidate)))


def strong_monotonicity_margins(g: VectorField, candidate, probes, kappa: float) -> np.ndarray:
    """Per-probe ``g(z)^T (z - zbar) - kappa ||z - zbar||^2``.

    At the weak solution ``zbar`` of a ``kappa``-strongly monotone VI every
    margin is nonnegative.
    """
    candidate = np.asarray(candidate, dtype=float)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    d = probes - candidate
    return np.einsum("ij,ij->i", g(probes), d) - kappa * np.einsum("ij,ij->i", d, d)
