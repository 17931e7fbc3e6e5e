"""Radial pipeline: enclosed mass, fields, Mondian Laplacian, norms."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qumond.counterexamples import DyadicDensity
from qumond.densities import parse_density
from qumond.grid import RadialProfile
from qumond.mond import InterpolationFunction, lambda_deep_mond, lambda_simple
from qumond.newtonian import solve_field
from qumond.spherical import (
    SphericalModel,
    circular_velocity,
    cumulative_mass,
    geometric_mesh,
    lq_norm_radial,
    mond_laplacian,
    mond_laplacian_deep,
    newtonian_field_spherical,
    rotation_curve,
    sqrt_mass_derivative,
    uniform_ball,
    write_rotation_curve,
)

DEEP = lambda_deep_mond(1.0)
SIMPLE = lambda_simple(1.0)


def hollow_shell():
    """Uniform shell 0.5 <= r < 1 with density 1."""
    def density(r):
        r = np.asarray(r, dtype=float)
        return np.where((r >= 0.5) & (r < 1.0), 1.0, 0.0)

    def mass(r):
        r = np.clip(np.asarray(r, dtype=float), 0.5, 1.0)
        return 4 * math.pi / 3 * (r**3 - 0.125)

    return SphericalModel.from_functions(density, mass, float(mass(1.0)), 1.0)


def test_cumulative_mass_zero_and_uniform():
    r = geometric_mesh(1e-3, 2.0, 400)
    assert np.all(cumulative_mass(RadialProfile(r, np.zeros_like(r))).values == 0.0)
    m = cumulative_mass(RadialProfile(r, np.full_like(r, 2.5)))
    np.testing.assert_allclose(m.values, 4 * math.pi / 3 * 2.5 * r**3, rtol=1e-4)


@given(seed=st.integers(0, 2**16))
@settings(max_examples=15)
def test_mass_nondecreasing_for_nonnegative_density(seed):
    rng = np.random.default_rng(seed)
    r = np.sort(rng.uniform(1e-3, 3.0, 200))
    r = np.unique(r)
    m = cumulative_mass(RadialProfile(r, rng.uniform(0, 2, r.size)))
    assert np.all(np.diff(m.values) >= 0)
    model = SphericalModel.from_profile(RadialProfile(r, rng.uniform(0, 2, r.size)))
    assert model.enclosed_mass(0.0) == 0.0


def test_cumulative_mass_against_quadrature():
    f = lambda s: np.exp(-s * s) * (1 + s)  # noqa: E731
    r = geometric_mesh(1e-4, 3.0, 600)
    m = cumulative_mass(RadialProfile(r, f(r)))
    for x in (0.3, 1.0, 2.5):
        ref = 4 * math.pi * quad(lambda s: s * s * f(s), 0, x)[0]
        assert float(np.interp(x, r, m.values)) == pytest.approx(ref, rel=1e-4)


def test_dyadic_mass_bound_example():
    rho = DyadicDensity(1)
    for j in range(1, 12):
        assert rho.mass(2.0 ** (-j + 1)) <= 32 / 7 * 8.0**-j
    # the dyadic mass agrees with trapezoid quadrature of its density on a fine mesh
    r = np.unique(np.concatenate([geometric_mesh(2.0**-12, 2.0, 20000), rho.breakpoints()]))
    prof = cumulative_mass(RadialProfile(r, rho.density(r)))
    assert prof.values[-1] == pytest.approx(rho.total_mass(), rel=2e-3)


def test_newtonian_field_spherical_examples():
    ball = uniform_ball(0.3, 1.0)
    assert newtonian_field_spherical(ball, 3.0) == pytest.approx(ball.total_mass / 9.0)
    assert newtonian_field_spherical(ball, 0.4) == pytest.approx(4 * math.pi / 3 * 0.3 * 0.4)
    with pytest.raises(ValueError):
        newtonian_field_spherical(ball, 0.0)


def test_newtonian_field_matches_grid_solver():
    d = parse_density("uniform-ball:0.5,0.6")
    g = solve_field(d.sample(64, 2.0)).magnitude()
    r = g.radius()
    probe = (r > 0.2) & (r < 1.7)
    expect = newtonian_field_spherical(d.radial, r[probe])
    assert np.linalg.norm(g.data[probe] - expect) / np.linalg.norm(expect) <= 0.02


def test_sqrt_mass_derivative_examples():
    shell = hollow_shell()
    assert sqrt_mass_derivative(shell, 0.3) == 0.0
    assert sqrt_mass_derivative(shell, 1.5) == 0.0
    rho0 = 0.7
    ball = uniform_ball(rho0, 1.0)
    for r in (0.1, 0.5, 0.9):
        assert sqrt_mass_derivative(ball, r) == pytest.approx(1.5 * math.sqrt(4 * math.pi / 3 * rho0) * math.sqrt(r), rel=1e-12)


def test_sqrt_mass_derivative_matches_difference_quotient():
    model = parse_density("gaussian:2,0.4").radial
    r, e = np.array([0.2, 0.7, 1.3]), 1e-6
    fd = (np.sqrt(model.enclosed_mass(r + e)) - np.sqrt(model.enclosed_mass(r - e))) / (2 * e)
    np.testing.assert_allclose(sqrt_mass_derivative(model, r), fd, rtol=1e-6)


def test_mond_laplacian_examples():
    shell = hollow_shell()
    assert mond_laplacian(shell, DEEP, 0.25) == 0.0
    assert mond_laplacian(shell, SIMPLE, 0.25) == 0.0
    rho0 = 0.4
    ball = uniform_ball(rho0, 1.0)
    c = math.sqrt(4 * math.pi * rho0 / 3)
    for r in (0.05, 0.3, 0.8):
        assert mond_laplacian(ball, DEEP, r) - 4 * math.pi * rho0 == pytest.approx(2.5 * c / math.sqrt(r), rel=1e-12)
    for r in (1.5, 4.0):
        assert mond_laplacian(ball, DEEP, r) == pytest.approx(math.sqrt(ball.total_mass) / r**2, rel=1e-12)


def test_general_lambda_reduces_to_deep():
    # the generic chain-rule formula, fed the deep form under another name
    deep = lambda_deep_mond(2.0)
    custom = InterpolationFunction(deep.lam, deep.lam_prime, deep.big_lambda, 2.0, "generic")
    model = parse_density("gaussian:1,0.3").radial
    r = geometric_mesh(0.01, 3.0, 20)
    np.testing.assert_allclose(mond_laplacian(model, custom, r), mond_laplacian_deep(model, r, 2.0), rtol=1e-10)


@pytest.mark.parametrize("lam", [DEEP, SIMPLE], ids=["deep", "simple"])
def test_flux_identity(lam):
    model = parse_density("gaussian:1.5,0.3").radial
    for R in (0.4, 1.0, 2.0):
        lhs = 4 * math.pi * quad(lambda r: r * r * mond_laplacian(model, lam, r), 0, R, limit=200)[0]
        sigma = model.enclosed_mass(R) / R**2
        rhs = 4 * math.pi * R * R * (sigma + lam.tilde(sigma))
        assert lhs == pytest.approx(rhs, rel=0.01)


def test_circular_velocity_examples():
    ball = uniform_ball(0.1, 1.0)
    assert circular_velocity(ball, None, 5.0) == pytest.approx(math.sqrt(ball.total_mass / 5.0))
    assert circular_velocity(hollow_shell(), DEEP, 0.3) == 0.0
    for model in (uniform_ball(0.0025, 1.0), parse_density("gaussian:0.01,0.25").radial):
        v = circular_velocity(model, DEEP, 100 * model.support_radius)
        assert v**4 / model.total_mass == pytest.approx(1.0, abs=0.01)


def test_lq_norm_radial_examples():
    r = geometric_mesh(1e-6, 1.0, 2000)
    assert lq_norm_radial(RadialProfile(r, np.zeros_like(r)), 2, 1.0) == 0.0
    assert lq_norm_radial(RadialProfile(r, np.ones_like(r)), 3, 1.0) == pytest.approx((4 * math.pi / 3) ** (1 / 3), rel=1e-5)
    assert lq_norm_radial(RadialProfile(r, r**-0.5), 2, 1.0) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-5)
    with pytest.raises(ValueError):
        lq_norm_radial(RadialProfile(r, r), 0.9, 1.0)


def _random_density(rng):
    k = int(rng.integers(1, 4))
    c, w, a = rng.uniform(0, 1.5, k), rng.uniform(0.2, 0.5, k), rng.uniform(0.2, 1.0, k)

    def f(r):
        t = (np.asarray(r)[..., None] - c) / w
        return np.sum(a * np.clip(1 - t * t, 0, None) ** 2, axis=-1)

    peak = f(np.linspace(0, 2, 4001)).max()
    return lambda r: f(r) / peak


@pytest.mark.parametrize("seed", range(4))
def test_norms_stable_under_refinement(seed):
    fn = _random_density(np.random.default_rng(seed))
    vals = {}
    for per in (100, 200, 400):
        r = geometric_mesh(1e-4, 4.0, per)
        model = SphericalModel.from_profile(RadialProfile(r, fn(r)))
        m = model.enclosed_mass(r)
        a = RadialProfile(r, np.sqrt(m) / r**2)
        b = RadialProfile(r, sqrt_mass_derivative(model, r) / r)
        vals[per] = [lq_norm_radial(a, 2, 4), lq_norm_radial(a, 4, 4), lq_norm_radial(b, 1.5, 4)]
    for k in range(3):
        assert np.isfinite(vals[400][k])
        assert abs(vals[400][k] / vals[200][k] - 1) <= 0.01


def test_rotation_curve_csv(tmp_path):
    rows = rotation_curve(uniform_ball(0.1, 1.0), DEEP, [0.5, 1.0, 2.0])
    assert rows.shape == (3, 3)
    assert np.all(rows[:, 2] >= rows[:, 1])
    write_rotation_curve(tmp_path / "rot.csv", rows)
    text = (tmp_path / "rot.csv").read_text().splitlines()
    assert text[0] == "r,v_newton,v_mond" and len(text) == 4
    assert float(text[1].split(",")[0]) == 0.5
