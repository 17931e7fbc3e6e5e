"""Spherically symmetric pipeline: enclosed mass, fields, the Mondian
Laplacian, rotation curves and radial L^q norms.

A :class:`SphericalModel` carries vectorised callables for the density and
the enclosed mass.  Models built from a sampled profile integrate the mass
by the trapezoid rule; analytic models supply both functions exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .grid import RadialProfile
from .mond import InterpolationFunction

__all__ = [
    "SphericalModel",
    "cumulative_mass",
    "newtonian_field_spherical",
    "sqrt_mass_derivative",
    "mond_laplacian",
    "mond_laplacian_deep",
    "circular_velocity",
    "lq_norm_radial",
    "geometric_mesh",
    "rotation_curve",
    "uniform_ball",
]

FOUR_PI = 4.0 * math.pi


def cumulative_mass(rho: RadialProfile) -> RadialProfile:
    """``M(r) = 4 pi int_0^r s^2 rho(s) ds`` by the trapezoid rule.

    The segment below the first radius treats rho as constant there.
    """
    r = rho.radii
    head = FOUR_PI / 3.0 * rho.values[0] * r[0] ** 3
    m = head + cumulative_trapezoid(FOUR_PI * r * r * rho.values, r, initial=0.0)
    return rho.with_values(m)


@dataclass(frozen=True)
class SphericalModel:
    """Density and enclosed mass as functions of radius."""

    density_fn: Callable
    mass_fn: Callable
    total_mass: float
    support_radius: float
    rho: RadialProfile | None = None
    mass: RadialProfile | None = None

    @classmethod
    def from_profile(cls, rho: RadialProfile) -> "SphericalModel":
        """Linear interpolation of the sampled density; zero beyond the last radius."""
        mass = cumulative_mass(rho)
        r, v, m = rho.radii, rho.values, mass.values
        r0, rho0 = r[0], v[0]

        def density(x):
            x = np.asarray(x, dtype=float)
            return np.interp(x, r, v, left=rho0, right=0.0)

        def enclosed(x):
            x = np.asarray(x, dtype=float)
            inner = FOUR_PI / 3.0 * rho0 * x**3
            return np.where(x < r0, inner, np.interp(x, r, m, right=m[-1]))

        nz = np.nonzero(v)[0]
        support = float(r[min(nz[-1] + 1, len(r) - 1)]) if nz.size else 0.0
        return cls(density, enclosed, float(m[-1]), support, rho, mass)

    @classmethod
    def from_functions(cls, density, mass, total_mass: float, support_radius: float) -> "SphericalModel":
        return cls(density, mass, float(total_mass), float(support_radius))

    def density(self, r):
        return self.density_fn(r)

    def enclosed_mass(self, r):
        return self.mass_fn(r)


def uniform_ball(rho0: float, radius: float) -> SphericalModel:
    total = FOUR_PI / 3.0 * rho0 * radius**3

    def density(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < radius, rho0, 0.0)

    def mass(r):
        r = np.asarray(r, dtype=float)
        return FOUR_PI / 3.0 * rho0 * np.minimum(r, radius) ** 3

    return SphericalModel.from_functions(density, mass, total, radius)


def _positive(r, name="r"):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError(f"{name} must be positive")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def newtonian_field_spherical(model: SphericalModel, r):
    """Radial field magnitude ``M(r) / r^2``."""
    r = _positive(r)
    return _out(model.enclosed_mass(r) / r**2)


def sqrt_mass_derivative(model: SphericalModel, r):
    """``2 pi r^2 rho / sqrt(M)`` where ``M > 0``, else 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    m = np.asarray(model.enclosed_mass(r), dtype=float)
    rho = np.asarray(model.density(r), dtype=float)
    pos = m > 0
    out = np.zeros(np.broadcast(r, m).shape)
    num = np.broadcast_to(2.0 * math.pi * r * r * rho, out.shape)
    out[pos] = num[pos] / np.sqrt(np.broadcast_to(m, out.shape)[pos])
    return _out(out)


def mond_laplacian_deep(model: SphericalModel, r, a0: float = 1.0, terms: str = "full"):
    """``4 pi rho + sqrt(a0) (sqrt(M)/r^2 + sqrt(M)'/r)`` for ``lam = sqrt(a0/sigma)``.

    ``terms='singular'`` keeps only ``sqrt(a0) sqrt(M)'/r``.
    """
    r = _positive(r)
    root = math.sqrt(a0)
    dm = np.asarray(sqrt_mass_derivative(model, r))
    if terms == "singular":
        return _out(root * dm / r)
    if terms != "full":
        raise ValueError(f"terms must be 'full' or 'singular', got {terms!r}")
    m = np.asarray(model.enclosed_mass(r), dtype=float)
    rho = np.asarray(model.density(r), dtype=float)
    return _out(FOUR_PI * rho + root * (np.sqrt(np.maximum(m, 0.0)) / r**2 + dm / r))


def mond_laplacian(model: SphericalModel, lam: InterpolationFunction, r):
    """Divergence of ``(sigma + lam~(sigma)) x/r`` with ``sigma = M/r^2``.

    ``4 pi rho + lam~'(sigma) (4 pi rho - 2 M / r^3) + 2 lam~(sigma) / r``;
    where ``M = 0`` only ``4 pi rho`` remains.  The deep-MOND family takes
    the closed form of :func:`mond_laplacian_deep`.
    """
    if lam.name == "deep":
        return mond_laplacian_deep(model, r, lam.a0)
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(_positive(r))
    m = np.broadcast_to(np.asarray(model.enclosed_mass(r), dtype=float), r.shape)
    rho = np.broadcast_to(np.asarray(model.density(r), dtype=float), r.shape)
    out = FOUR_PI * rho
    pos = m > 0
    if np.any(pos):
        rp, mp, dp = r[pos], m[pos], rho[pos]
        sigma = mp / rp**2
        out[pos] += lam.tilde_prime(sigma) * (FOUR_PI * dp - 2.0 * mp / rp**3) + 2.0 * lam.tilde(sigma) / rp
    return float(out[0]) if scalar else out


def circular_velocity(model: SphericalModel, lam: InterpolationFunction | None, r):
    """``sqrt(r g(r))`` with ``g = sigma + lam~(sigma)``; ``lam=None`` is Newtonian."""
    r = _positive(r)
    sigma = np.asarray(model.enclosed_mass(r), dtype=float) / r**2
    g = sigma if lam is None else sigma + lam.tilde(sigma)
    return _out(np.sqrt(r * np.maximum(g, 0.0)))


def lq_norm_radial(f: RadialProfile, q: float, R: float) -> float:
    """``(4 pi int_0^R r^2 |f|^q dr)^(1/q)`` by the trapezoid rule on the
    profile's radii; the integrand is taken linear from 0 at r = 0."""
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    r = f.radii
    keep = r < R
    rr = np.concatenate([[0.0], r[keep], [R]])
    vals = np.concatenate([[0.0], f.values[keep], [float(f(R))]])
    integrand = rr * rr * np.abs(vals) ** q
    return float((FOUR_PI * trapezoid(integrand, rr)) ** (1.0 / q))


def geometric_mesh(r_min: float, r_max: float, per_decade: int = 200) -> np.ndarray:
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    count = max(2, int(math.ceil(per_decade * math.log10(r_max / r_min))) + 1)
    return np.geomspace(r_min, r_max, count)


def rotation_curve(model: SphericalModel, lam: InterpolationFunction, radii):
    """Rows ``(r, v_newton, v_mond)``."""
    r = _positive(radii)
    return np.column_stack([r, circular_velocity(model, None, r), circular_velocity(model, lam, r)])


def write_rotation_curve(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("r,v_newton,v_mond\n")
        for r, vn, vm in rows:
            fh.write(f"{float(r)!r},{float(vn)!r},{float(vm)!r}\n")
