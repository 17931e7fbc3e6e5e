"""Dyadic and signed shell densities and their predicted blowups."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qumond.counterexamples import (
    C0,
    DyadicDensity,
    MeshResolutionError,
    SignedDensity,
    blowup_exponent,
    blowup_norm,
    dyadic_mass_bound_check,
    signed_w11_divergence,
)
from qumond.grid import RadialProfile
from qumond.spherical import cumulative_mass, geometric_mesh, mond_laplacian_deep


def test_c0_from_chain():
    assert Fraction(4) * Fraction(8, 7) == Fraction(32, 7)
    assert C0 == pytest.approx(32 / 7, rel=1e-15)


def test_dyadic_invariants():
    rho = DyadicDensity(3)
    r = geometric_mesh(1e-6, 4.0, 2000)
    d = rho.density(r)
    assert np.all(d >= 0) and d.max() == pytest.approx(1 / (4 * math.pi))
    assert np.all(d[r >= rho.thickness] == 0)
    assert rho.thickness < 2
    assert rho.density(1.0) == pytest.approx(1 / (4 * math.pi))
    assert rho.density(0.5) == pytest.approx(1 / (4 * math.pi))
    assert rho.density(0.49) == 0.0


def test_dyadic_m1_example():
    rho = DyadicDensity(1)
    # shells [2^-i, 2^-i+1) inside the unit ball for i >= 1: sum (8^-i+1 - 8^-i)/3 = 7/3 * 1/7
    assert rho.mass(1.0) == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert rho.mass(1.0) <= C0 / 8.0


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64])
def test_dyadic_mass_bound(n):
    report = dyadic_mass_bound_check(n, 20)
    assert report.ok
    assert report.normalised_max <= C0 / n


def test_dyadic_mass_vanishes_as_n_grows():
    r = np.array([0.3, 0.9, 1.5])
    masses = [DyadicDensity(n).mass(r) for n in (1, 10, 100, 1000)]
    assert np.all(np.diff(np.array(masses), axis=0) < 0)
    assert np.all(masses[-1] < 2e-3)


def test_dyadic_mass_matches_trapezoid():
    rho = DyadicDensity(4, i_max=14)
    r = np.unique(np.concatenate([geometric_mesh(2.0**-16, 2.0, 40000), rho.breakpoints()]))
    m = cumulative_mass(RadialProfile(r, rho.density(r)))
    assert m.values[-1] == pytest.approx(rho.total_mass(), rel=5e-3)


@given(n=st.integers(1, 200), r=st.floats(1e-4, 3.0))
@settings(max_examples=60)
def test_dyadic_mass_monotone(n, r):
    rho = DyadicDensity(n)
    assert rho.mass(r) <= rho.mass(r * 1.01) + 1e-18


def test_blowup_norm_matches_adaptive_quadrature():
    n, q = 8, 3.0
    rho = DyadicDensity(n, i_max=8)
    model = rho.model()
    edges = np.concatenate([rho.breakpoints(), [2.0]])
    f = lambda r: r * r * abs(mond_laplacian_deep(model, r)) ** q  # noqa: E731
    # adaptive quadrature on each open interval, the ball below 2^-i_max left out
    total = sum(quad(f, a, b, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))
    ref = (4 * math.pi * total) ** (1 / q)
    assert blowup_norm(n, q, i_max=8) == pytest.approx(ref, rel=1e-5)


def test_blowup_resolution_errors():
    with pytest.raises(MeshResolutionError):
        blowup_norm(4, 4.0, points_per_shell=2)
    with pytest.raises(MeshResolutionError):
        blowup_norm(2**48, 4.0, i_max=20)
    with pytest.raises(ValueError):
        blowup_exponent(4.0, (8, 4))


def test_singular_term_rate():
    # the sqrt(M)'/r term alone carries n^(1/2 - 1/q)
    for q in (3.0, 4.0):
        fit = blowup_exponent(q, terms="singular")
        assert fit.slope == pytest.approx(0.5 - 1.0 / q, abs=0.02)


def test_bounded_below_q2():
    fit = blowup_exponent(1.5)
    assert fit.slope <= 0.05


def test_signed_construction():
    rho = SignedDensity(50)
    a, m = rho.nodes()
    assert a[0] == 2.0
    assert np.all(np.diff(a) > 0) and a[-1] < math.pi**2 / 3 < 4
    assert np.all(rho.mass(a[:-1]) == 0.0)
    k = np.arange(1, 51)
    np.testing.assert_allclose(rho.mass(m), 1.0 / (k + 1) ** 2, rtol=1e-12)
    assert rho.mass(1.0) == 0.0 and rho.mass(3.5) == 0.0


def test_signed_density_reconstructs_mass():
    rho = SignedDensity(6)
    a, m = rho.nodes()
    for lo, hi in zip(np.concatenate([a[:-1], m]), np.concatenate([m, a[1:]])):
        t = np.linspace(lo, hi, 7)[1:-1]
        e = 1e-7
        dm = (rho.mass(t + e) - rho.mass(t - e)) / (2 * e)
        np.testing.assert_allclose(dm, 4 * math.pi * t * t * rho.density(t), rtol=1e-6)


def test_signed_series_examples():
    s1 = signed_w11_divergence(1)
    assert s1.S_N == pytest.approx(9 * math.pi, rel=1e-14)
    assert s1.harmonic_bound == pytest.approx(4 * math.pi, rel=1e-14)
    assert s1.ok


@pytest.mark.parametrize("N", [10, 1000, 10_000])
def test_signed_series_dominates_harmonic(N):
    s = signed_w11_divergence(N)
    assert s.termwise_ok
    assert np.all(s.partial_sums >= s.harmonic_bounds)


def test_signed_series_tail_growth():
    N = 1000
    s1, s2 = signed_w11_divergence(N), signed_w11_divergence(2 * N)
    tail = 8 * math.pi * math.fsum(1.0 / (n + 1) for n in range(N + 1, 2 * N + 1))
    assert s2.S_N - s1.S_N >= tail
    assert tail == pytest.approx(8 * math.pi * math.log(2), rel=1e-2)
    assert s2.S_N / s1.S_N == pytest.approx(math.log(2 * N) / math.log(N), rel=0.10)
