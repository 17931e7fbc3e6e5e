"""Independent reference constructions used by the checks.

The spectral routines act on the same zero-padded ``2n`` box as the
real-space operators but never touch their kernels: they apply the Fourier
multipliers of the Hessian and of the gradient projector directly.  The
field generators produce smooth compactly concentrated inputs with known
analytic derivatives.
"""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .grid import ScalarGrid, VectorGrid, cell_mesh

__all__ = [
    "spectral_t_ij",
    "spectral_projector",
    "gaussian",
    "gaussian_mixture",
    "gradient_field",
    "solenoidal_field",
    "radial_field",
    "random_smooth_scalar",
    "random_smooth_vector",
    "Bump",
]


def _padded_wavenumbers(n: int, h: float):
    k = 2.0 * np.pi * sfft.fftfreq(2 * n, d=h)
    kz = 2.0 * np.pi * sfft.rfftfreq(2 * n, d=h)
    kx, ky, kz = np.meshgrid(k, k, kz, indexing="ij", sparse=True)
    k2 = kx * kx + ky * ky + kz * kz
    return (kx, ky, kz), np.where(k2 > 0, k2, 1.0)


def _pad(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    p = np.zeros((2 * n,) * 3)
    p[:n, :n, :n] = a
    return sfft.rfftn(p)


def _unpad(s: np.ndarray, n: int) -> np.ndarray:
    return np.ascontiguousarray(sfft.irfftn(s, s=(2 * n,) * 3)[:n, :n, :n])


def spectral_t_ij(g: ScalarGrid, i: int, j: int) -> ScalarGrid:
    """Multiplier ``4 pi (k_i k_j / |k|^2 - delta_ij / 3)``; zero at k = 0."""
    k, k2 = _padded_wavenumbers(g.n, g.h)
    a, b = i - 1, j - 1
    mult = 4.0 * np.pi * (k[a] * k[b] / k2 - (1.0 / 3.0 if a == b else 0.0))
    mult = np.where((k[0] == 0) & (k[1] == 0) & (k[2] == 0), 0.0, mult)
    return g.like(_unpad(_pad(g.data) * mult, g.n))


def spectral_projector(v: VectorGrid) -> VectorGrid:
    """Gradient projection ``k (k . v) / |k|^2`` on the padded box."""
    k, k2 = _padded_wavenumbers(v.n, v.h)
    vs = [_pad(c.data) for c in v]
    kv = (k[0] * vs[0] + k[1] * vs[1] + k[2] * vs[2]) / k2
    return v.like([_unpad(k[a] * kv, v.n) for a in range(3)])


# --------------------------------------------------------------------------
# analytic fields


def gaussian(n, L, mass=1.0, width=0.3, center=(0.0, 0.0, 0.0)) -> ScalarGrid:
    """Gaussian density of total mass ``mass``."""
    c = np.asarray(center, dtype=float)
    norm = mass / (2.0 * np.pi * width**2) ** 1.5

    def f(x, y, z):
        r2 = (x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2
        return norm * np.exp(-r2 / (2.0 * width**2))

    return ScalarGrid.from_function(n, L, f)


def gaussian_mixture(n, L, rng, count=3, width=(0.25, 0.35), spread=0.5) -> ScalarGrid:
    total = ScalarGrid.zeros(n, L)
    for _ in range(count):
        c = rng.uniform(-spread, spread, 3)
        w = rng.uniform(*width)
        m = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
        total = total + gaussian(n, L, m, w, c)
    return total


def gradient_field(n, L, width=0.35, center=(0.1, -0.05, 0.0)):
    """``grad phi`` for ``phi = exp(-|x-c|^2 / 2 w^2)`` and the potential itself."""
    c = np.asarray(center, dtype=float)
    x, y, z = cell_mesh(n, L)
    d = [x - c[0], y - c[1], z - c[2]]
    phi = np.exp(-(d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / (2.0 * width**2))
    comps = [np.broadcast_to(-dk / width**2 * phi, (n,) * 3) for dk in d]
    return VectorGrid.from_array(n, L, comps), ScalarGrid(n, L, phi)


def solenoidal_field(n, L, width=0.35, center=(-0.05, 0.1, 0.05)) -> VectorGrid:
    """``(d2 psi, -d1 psi, 0)`` with a Gaussian stream function; divergence free."""
    c = np.asarray(center, dtype=float)
    x, y, z = cell_mesh(n, L)
    d = [x - c[0], y - c[1], z - c[2]]
    psi = np.exp(-(d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / (2.0 * width**2))
    d1 = -d[0] / width**2 * psi
    d2 = -d[1] / width**2 * psi
    return VectorGrid.from_array(n, L, [d2, -d1, np.zeros((n,) * 3)])


def radial_field(n, L, width=0.6) -> VectorGrid:
    """``f(|x|) x/|x|`` with ``f(r) = r exp(-(r/w)^4)``."""
    x, y, z = cell_mesh(n, L)
    env = np.exp(-(((x * x + y * y + z * z) / width**2) ** 2))
    return VectorGrid.from_array(n, L, [np.broadcast_to(c * env, (n,) * 3) for c in (x, y, z)])


def _smooth_noise(n, L, rng, corr, envelope, zero_mean=False):
    h = 2.0 * L / n
    noise = rng.standard_normal((n, n, n))
    k = 2.0 * np.pi * sfft.fftfreq(n, d=h)
    kz = 2.0 * np.pi * sfft.rfftfreq(n, d=h)
    kx, ky, kz = np.meshgrid(k, k, kz, indexing="ij", sparse=True)
    filt = np.exp(-0.5 * (kx * kx + ky * ky + kz * kz) * corr**2)
    field = sfft.irfftn(sfft.rfftn(noise) * filt, s=(n,) * 3)
    x, y, z = cell_mesh(n, L)
    env = np.exp(-(x * x + y * y + z * z) / (2.0 * envelope**2))
    field = field * env
    if zero_mean:
        field = field - env * (field.sum() / env.sum())
    return field / np.sqrt(np.mean(field**2))


def random_smooth_scalar(n, L, rng, corr=0.25, envelope=0.4) -> ScalarGrid:
    """Gaussian-filtered white noise under a Gaussian envelope, unit RMS."""
    return ScalarGrid(n, L, _smooth_noise(n, L, rng, corr, envelope))


def random_smooth_vector(n, L, rng, corr=0.25, envelope=0.4) -> VectorGrid:
    """Unit-RMS components with zero integral each, so the gradient part of
    the field has no dipole tail reaching past the box."""
    return VectorGrid.from_array(
        n, L, [_smooth_noise(n, L, rng, corr, envelope, zero_mean=True) for _ in range(3)]
    )


class Bump:
    """``phi(x) = (1 - |x-c|^2/a^2)^4`` inside the ball of radius ``a``, else 0."""

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def _parts(self, n, L):
        x, y, z = cell_mesh(n, L)
        d = [x - self.center[0], y - self.center[1], z - self.center[2]]
        s = 1.0 - (d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / self.radius**2
        return d, np.clip(s, 0.0, None)

    def sample(self, n, L) -> ScalarGrid:
        _, s = self._parts(n, L)
        return ScalarGrid(n, L, np.broadcast_to(s**4, (n,) * 3))

    def gradient(self, n, L) -> VectorGrid:
        d, s = self._parts(n, L)
        f = -8.0 * s**3 / self.radius**2
        return VectorGrid.from_array(n, L, [np.broadcast_to(f * dk, (n,) * 3) for dk in d])

    @classmethod
    def random(cls, rng, max_offset=0.6, radius=(0.4, 0.7)):
        return cls(rng.uniform(-max_offset, max_offset, 3), rng.uniform(*radius))
