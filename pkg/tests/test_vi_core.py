import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import quadratic_over_ball, random_spd
from glmvi.links import Link, diagonal_field, modulus_profile, radial_field
from glmvi.vi_core import (Ball, VectorField, affine_substitution, average_field, estimate_lipschitz,
                           estimate_modulus, project_ball, solve_strongly_monotone_vi,
                           strong_monotonicity_margins, strong_solution_residual, unit_ball,
                           weak_solution_residual)


def identity(n):
    return VectorField(n, lambda z: z)


def shifted(n, c):
    return VectorField(n, lambda z: z - c)


# -- projection ---------------------------------------------------------------

@pytest.mark.parametrize("radius,z,expected", [
    (1.0, [2.0, 0.0], [1.0, 0.0]),
    (1.0, [0.3, 0.4], [0.3, 0.4]),
    (2.0, [3.0, 4.0], [1.2, 1.6]),
])
def test_project_ball_examples(radius, z, expected):
    np.testing.assert_allclose(project_ball(radius, np.zeros(2), z), expected, atol=1e-15)


def test_project_ball_rejects_bad_input():
    with pytest.raises(ValueError, match="non-finite point"):
        project_ball(1.0, np.zeros(2), [np.nan, 0.0])
    with pytest.raises(ValueError):
        project_ball(0.0, np.zeros(2), [1.0, 0.0])


def test_project_ball_off_center():
    z = project_ball(1.0, np.array([1.0, 1.0]), [4.0, 5.0])
    np.testing.assert_allclose(z, [1.6, 1.8])


vectors = arrays(np.float64, 4, elements=st.floats(-50, 50, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(vectors, vectors, st.floats(0.1, 10))
def test_projection_contracts_and_is_idempotent(z, u_raw, radius):
    ball = Ball(4, radius)
    u = ball.project(u_raw)
    p = ball.project(z)
    assert ball.contains(p)
    np.testing.assert_allclose(ball.project(p), p, atol=1e-12)
    assert np.linalg.norm(p - u) <= np.linalg.norm(z - u) + 1e-12


def test_ball_sampling_is_uniform(rng):
    ball = Ball(3, 2.0)
    pts = ball.sample(50_000, rng)
    assert np.all(ball.contains(pts))
    # P(||z|| <= r) = (r / R)^3
    frac = np.mean(np.linalg.norm(pts, axis=1) <= 1.0)
    assert abs(frac - 0.125) < 4 * np.sqrt(0.125 * 0.875 / 50_000)


def test_degenerate_ball_rejected():
    with pytest.raises(ValueError):
        Ball(3, 0.0)


# -- combinators --------------------------------------------------------------

def test_affine_identity_substitution(rng):
    f = diagonal_field(Link.ARCTAN, 3)
    g = affine_substitution(f, np.eye(3))
    z = rng.standard_normal((5, 3))
    np.testing.assert_allclose(g(z), f(z))


def test_affine_rank_one(rng):
    v = np.array([1.0, -2.0, 0.5])
    g = affine_substitution(diagonal_field(Link.LINEAR, 1), v[:, None])
    x = rng.standard_normal(3)
    np.testing.assert_allclose(g(x), (v @ x) * v)


def test_affine_logistic_at_zero():
    e1 = np.array([[1.0], [0.0], [0.0]])
    g = affine_substitution(diagonal_field(Link.LOGISTIC, 1), e1)
    np.testing.assert_allclose(g(np.zeros(3)), [0.5, 0.0, 0.0])


def test_affine_dimension_mismatch():
    with pytest.raises(ValueError):
        affine_substitution(diagonal_field(Link.LINEAR, 2), np.ones((3, 3)))
    with pytest.raises(ValueError):
        affine_substitution(diagonal_field(Link.LINEAR, 3), np.eye(3), np.ones(2))


def test_affine_substitution_modulus(rng):
    # arctan is (1 + B^2)^{-1}-monotone on [-B, B]; A^T x stays within the
    # column norms of A on the unit ball
    A = rng.standard_normal((4, 6))
    sigma = np.linalg.svd(A, compute_uv=False).min()
    B = np.linalg.norm(A, axis=0).max()
    kappa_f = 1.0 / (1.0 + B**2)
    g = affine_substitution(diagonal_field(Link.ARCTAN, 6), A)
    est = estimate_modulus(g, unit_ball(4), 500, rng)
    assert est.modulus_lower >= 0.95 * sigma**2 * kappa_f


def test_average_field_examples(rng):
    f = diagonal_field(Link.ARCTAN, 3)
    z = rng.standard_normal((4, 3))
    np.testing.assert_allclose(average_field([f], [1.0])(z), f(z))
    np.testing.assert_allclose(average_field([f, f], [0.5, 0.5])(z), f(z))
    c = np.array([1.0, -2.0, 3.0])
    mirror = VectorField(3, lambda u: -u + 2 * c)
    np.testing.assert_allclose(average_field([identity(3), mirror], [0.5, 0.5])(z),
                               np.broadcast_to(c, z.shape))


def test_average_field_errors():
    with pytest.raises(ValueError):
        average_field([])
    with pytest.raises(ValueError):
        average_field([identity(2), identity(2)], [0.5, 0.6])
    with pytest.raises(ValueError):
        average_field([identity(2), identity(3)])


def test_non_vectorized_field_is_looped():
    g = VectorField(2, lambda z: np.array([z[1], -z[0]]) + z, vectorized=False)
    np.testing.assert_allclose(g(np.array([[1.0, 2.0], [3.0, 4.0]])), [[3.0, 1.0], [7.0, 1.0]])


# -- modulus estimation -------------------------------------------------------

def test_modulus_of_identity_fields(rng):
    ball = unit_ball(5)
    est = estimate_modulus(identity(5), ball, 100, rng)
    assert est.modulus_lower == pytest.approx(1.0, abs=1e-8)
    est2 = estimate_modulus(VectorField(5, lambda z: 2 * z), ball, 100, rng)
    assert est2.modulus_lower == pytest.approx(2.0, abs=1e-8)
    assert est2.pair_count == 100


def test_modulus_estimate_is_a_lower_envelope(rng):
    Q = random_spd(4, rng, 20.0)
    g = VectorField(4, lambda z: z @ Q)
    est = estimate_modulus(g, unit_ball(4), 300, rng)
    assert est.modulus_lower == pytest.approx(np.linalg.eigvalsh(Q)[0], rel=1e-6)
    z1, z2 = unit_ball(4).sample(50, rng), unit_ball(4).sample(50, rng)
    d = z1 - z2
    ratios = np.einsum("ij,ij->i", g(z1) - g(z2), d) / np.einsum("ij,ij->i", d, d)
    assert np.all(est.modulus_lower <= ratios + 1e-9)


def test_modulus_logistic_radial_matches_profile(rng):
    est = estimate_modulus(radial_field(Link.LOGISTIC, 3), unit_ball(3), 300, rng, jacobian_points=64)
    ref = modulus_profile(Link.LOGISTIC, 1.0)
    assert abs(est.modulus_lower - ref) <= 0.1 * ref


def test_lipschitz_estimate(rng):
    Q = random_spd(3, rng, 5.0)
    L = estimate_lipschitz(VectorField(3, lambda z: z @ Q), unit_ball(3), rng=rng)
    assert 0.9 * 1.5 * 5.0 <= L <= 1.5 * 5.0 + 1e-9


# -- solver -------------------------------------------------------------------

def test_solver_interior_root(rng):
    c = np.array([0.2, -0.3, 0.1])
    res = solve_strongly_monotone_vi(shifted(3, c), unit_ball(3), 1.0, tol=1e-10, rng=rng)
    assert res.converged
    np.testing.assert_allclose(res.point, c, atol=1e-9)


def test_solver_exterior_root_is_projection(rng):
    c = np.array([3.0, -4.0])
    res = solve_strongly_monotone_vi(shifted(2, c), unit_ball(2), 1.0, tol=1e-10, rng=rng)
    np.testing.assert_allclose(res.point, project_ball(1.0, np.zeros(2), c), atol=1e-9)


@pytest.mark.parametrize("scale", [0.5, 3.0])
def test_solver_quadratic_matches_kkt_oracle(rng, scale):
    n = 5
    Q = random_spd(n, rng, 8.0)
    b = scale * rng.standard_normal(n) * 4
    g = VectorField(n, lambda z: z @ Q - b)
    kappa = estimate_modulus(g, unit_ball(n), 500, rng).modulus_lower
    tol = 1e-10
    res = solve_strongly_monotone_vi(g, unit_ball(n), kappa, tol=tol, rng=rng)
    assert res.converged
    np.testing.assert_allclose(res.point, quadratic_over_ball(Q, b), atol=10 * tol / kappa)


def test_solver_reports_non_convergence(rng):
    res = solve_strongly_monotone_vi(shifted(2, np.array([0.5, 0.1])), unit_ball(2), 1e-3,
                                     lipschitz_hint=10.0, max_iters=5)
    assert not res.converged
    assert res.iterations == 5
    assert "max_iters" in res.flags


def test_solver_two_starts_agree(rng):
    n = 6
    Q = random_spd(n, rng, 5.0)
    b = rng.standard_normal(n) * 3
    g = VectorField(n, lambda z: z @ Q - b)
    kappa = float(np.linalg.eigvalsh(Q)[0])
    tol = 1e-9
    a = solve_strongly_monotone_vi(g, unit_ball(n), kappa, tol=tol, z0=0.5 * unit_ball(n).sample(1, rng)[0])
    c = solve_strongly_monotone_vi(g, unit_ball(n), kappa, tol=tol, z0=-0.5 * unit_ball(n).sample(1, rng)[0])
    assert np.linalg.norm(a.point - c.point) <= 2 * tol / kappa


# -- residuals ----------------------------------------------------------------

def test_weak_residual_examples(rng):
    c = np.array([0.1, 0.2, -0.3])
    ball = unit_ball(3)
    probes = ball.sample(200, rng)
    assert weak_solution_residual(shifted(3, c), ball, c, probes) <= 0
    assert strong_solution_residual(shifted(3, c), ball, c, probes) <= 1e-15
    assert weak_solution_residual(shifted(3, c), ball, probes[0], probes[:1]) == 0.0
    # a wrong candidate is witnessed by some probe
    assert weak_solution_residual(shifted(3, c), ball, -c, probes) > 0


def test_residual_rejects_outside_points():
    with pytest.raises(ValueError):
        weak_solution_residual(identity(2), unit_ball(2), np.zeros(2), [[2.0, 0.0]])
    with pytest.raises(ValueError):
        weak_solution_residual(identity(2), unit_ball(2), [3.0, 0.0], [[0.0, 0.0]])


def test_strong_monotonicity_margins_at_solution(rng):
    n = 4
    Q = random_spd(n, rng, 4.0)
    b = rng.standard_normal(n) * 5  # root outside the ball
    g = VectorField(n, lambda z: z @ Q - b)
    kappa = float(np.linalg.eigvalsh(Q)[0])
    tol = 1e-9
    res = solve_strongly_monotone_vi(g, unit_ball(n), kappa, tol=tol)
    probes = unit_ball(n).sample(1000, rng)
    margins = strong_monotonicity_margins(g, res.point, probes, kappa)
    dist = np.linalg.norm(probes - res.point, axis=1)
    assert np.all(margins >= -tol * dist)
