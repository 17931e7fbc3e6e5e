"""The dyadic-shell and signed-shell densities and the blowups they produce.

Dyadic shells: ``rho_n = (1/4 pi) 1_Omega`` with
``Omega = U_{i>=0} [2^-i, (1 + 1/n) 2^-i)``.  The enclosed mass is evaluated
shell by shell in closed form, never from samples of the indicator.

Signed shells: ``rho = +-1/(4 pi r^2)`` on alternating halves of
``[a_n, a_{n+1})`` with ``a_n = sum_{i<=n} 2/i^2``, so that the enclosed mass is
a triangle wave vanishing at every ``a_n`` and peaking at ``1/(n+1)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spherical import FOUR_PI, SphericalModel, mond_laplacian_deep

__all__ = [
    "MeshResolutionError",
    "DyadicDensity",
    "SignedDensity",
    "C0",
    "dyadic_mass_bound_check",
    "blowup_norm",
    "blowup_exponent",
    "signed_w11_divergence",
]

# constant of the mass bound M_n(2^{-j+1}) <= C0 / n * 8^-j
C0 = 4.0 * 8.0 / 7.0

_EXTRA_DEPTH = 40  # shells beyond i_max kept in the mass sums (8^-40 relative)


class MeshResolutionError(ValueError):
    """The quadrature cannot resolve the thinnest requested shell."""


@dataclass(frozen=True)
class DyadicDensity:
    n: int
    i_max: int = 20

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if int(self.i_max) < 1:
            raise ValueError("i_max must be >= 1")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "i_max", int(self.i_max))

    @property
    def thickness(self) -> float:
        return 1.0 + 1.0 / self.n

    def shells(self, depth: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Inner and outer radii ``(2^-i, (1+1/n) 2^-i)`` for i = 0..depth."""
        depth = self.i_max + _EXTRA_DEPTH if depth is None else depth
        a = np.ldexp(1.0, -np.arange(depth + 1))
        return a, a * self.thickness

    def density(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        pos = (r > 0) & (r < 2.0)
        i = np.ceil(-np.log2(r[pos]))
        a = np.ldexp(1.0, -i.astype(int))
        # guard log2 rounding near exact powers of two
        a = np.where(r[pos] < a, 0.5 * a, a)
        a = np.where(r[pos] >= 2.0 * a, 2.0 * a, a)
        inside = (r[pos] >= a) & (r[pos] < a * self.thickness) & (a <= 1.0)
        out[pos] = np.where(inside, 1.0 / FOUR_PI, 0.0)
        return float(out) if out.ndim == 0 else out

    def mass(self, r):
        """Exact ``M_n(r) = sum_i (clip(r, a_i, b_i)^3 - a_i^3) / 3``."""
        r = np.asarray(r, dtype=float)
        a, b = self.shells()
        rr = r[..., None]
        out = np.sum((np.clip(rr, a, b) ** 3 - a**3) / 3.0, axis=-1)
        return float(out) if out.ndim == 0 else out

    def total_mass(self) -> float:
        return self.mass(2.0)

    def normalised_mass(self, r):
        """``N_n(r) = M_n(r) / r^3``."""
        r = np.asarray(r, dtype=float)
        return self.mass(r) / r**3

    def model(self) -> SphericalModel:
        return SphericalModel.from_functions(self.density, self.mass, self.total_mass(), self.thickness)

    def breakpoints(self) -> np.ndarray:
        """All shell endpoints down to depth ``i_max``, ascending."""
        a, b = self.shells(self.i_max)
        return np.unique(np.concatenate([a, b]))


@dataclass(frozen=True)
class DyadicBoundRow:
    j: int
    mass: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.mass <= self.bound


@dataclass(frozen=True)
class DyadicBoundReport:
    n: int
    rows: tuple
    normalised_max: float
    normalised_bound: float

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows) and self.normalised_max <= self.normalised_bound


def dyadic_mass_bound_check(n: int, j_max: int, samples: int = 4000) -> DyadicBoundReport:
    """Check ``M_n(2^{-j+1}) <= (C0/n) 8^-j`` for j = 1..j_max and
    ``M_n(r)/r^3 <= C0/n`` on log-spaced radii in ``[2^-j_max, 2]``."""
    if n < 1 or j_max < 1:
        raise ValueError("n and j_max must be >= 1")
    rho = DyadicDensity(n, max(20, j_max))
    rows = []
    for j in range(1, j_max + 1):
        r = math.ldexp(1.0, -j + 1)
        rows.append(DyadicBoundRow(j, rho.mass(r), C0 / n * 8.0 ** (-j)))
    r = np.geomspace(math.ldexp(1.0, -j_max), 2.0, samples)
    r = np.concatenate([r, rho.breakpoints()])
    r = r[(r >= math.ldexp(1.0, -j_max)) & (r <= 2.0)]
    return DyadicBoundReport(n, tuple(rows), float(np.max(rho.normalised_mass(r))), C0 / n)


def blowup_norm(
    n: int,
    q: float,
    *,
    terms: str = "full",
    i_max: int = 20,
    points_per_shell: int = 8,
    radius: float = 2.0,
    a0: float = 1.0,
) -> float:
    """``||Delta U^M_{rho_n}||_{L^q(B_radius)}`` for the deep-MOND Laplacian.

    Gauss-Legendre quadrature with ``points_per_shell`` nodes on every
    interval between consecutive shell endpoints from ``2^-i_max`` outward;
    the ball below ``2^-i_max`` is omitted.
    """
    if points_per_shell < 4:
        raise MeshResolutionError(f"points_per_shell={points_per_shell} < 4 cannot resolve a shell")
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    rho = DyadicDensity(n, i_max)
    lo = math.ldexp(1.0, -i_max)
    if lo * rho.thickness - lo <= 64 * np.finfo(float).eps * lo:
        raise MeshResolutionError(f"shell thickness 2^-{i_max}/{n} is not resolvable in double precision")
    edges = rho.breakpoints()
    edges = np.unique(np.concatenate([edges[(edges >= lo) & (edges < radius)], [radius]]))
    x, w = np.polynomial.legendre.leggauss(points_per_shell)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    r = (left + right) / 2.0 + half * x
    weights = half * w
    model = rho.model()
    lap = np.asarray(mond_laplacian_deep(model, r.ravel(), a0, terms)).reshape(r.shape)
    integral = FOUR_PI * np.sum(weights * r * r * np.abs(lap) ** q)
    return float(integral ** (1.0 / q))


@dataclass(frozen=True)
class BlowupFit:
    q: float
    n_list: tuple
    norms: tuple
    slope: float
    terms: str


def blowup_exponent(q: float, n_list=(4, 8, 16, 32, 64), *, terms: str = "full", **kw) -> BlowupFit:
    """Least-squares slope of ``log ||Delta U^M_{rho_n}||_q`` against ``log n``."""
    n_list = tuple(int(n) for n in n_list)
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must hold at least two strictly increasing values")
    norms = tuple(blowup_norm(n, q, terms=terms, **kw) for n in n_list)
    slope = float(np.polyfit(np.log(n_list), np.log(norms), 1)[0])
    return BlowupFit(q, n_list, norms, slope, terms)


# --------------------------------------------------------------------------
# signed density


@dataclass(frozen=True)
class SignedDensity:
    N: int

    def __post_init__(self):
        if int(self.N) < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """``a_1..a_{N+1}`` and ``m_1..m_N``."""
        k = np.arange(1, self.N + 2, dtype=float)
        a = np.cumsum(2.0 / k**2)
        m = a[:-1] + 1.0 / (k[:-1] + 1.0) ** 2
        return a, m

    def mass(self, r):
        """Triangle wave: rises with slope 1 on [a_n, m_n), falls on [m_n, a_{n+1})."""
        r = np.asarray(r, dtype=float)
        a, m = self.nodes()
        idx = np.searchsorted(a, r, side="right") - 1
        valid = (idx >= 0) & (idx < self.N)
        k = np.clip(idx, 0, self.N - 1)
        up = r - a[k]
        down = a[np.minimum(k + 1, self.N)] - r
        out = np.where(valid, np.where(r < m[k], up, down), 0.0)
        return float(out) if out.ndim == 0 else out

    def density(self, r):
        r = np.asarray(r, dtype=float)
        a, m = self.nodes()
        idx = np.searchsorted(a, r, side="right") - 1
        valid = (idx >= 0) & (idx < self.N) & (r > 0)
        k = np.clip(idx, 0, self.N - 1)
        sign = np.where(r < m[k], 1.0, -1.0)
        with np.errstate(divide="ignore"):
            out = np.where(valid, sign / (FOUR_PI * r * r), 0.0)
        return float(out) if out.ndim == 0 else out

    def model(self) -> SphericalModel:
        a, _ = self.nodes()
        return SphericalModel.from_functions(self.density, self.mass, 0.0, float(a[-1]))


@dataclass(frozen=True)
class SignedSeries:
    N: int
    partial_sums: np.ndarray
    harmonic_bounds: np.ndarray
    S_N: float
    harmonic_bound: float
    termwise_ok: bool

    @property
    def ok(self) -> bool:
        return self.termwise_ok and self.S_N >= self.harmonic_bound


def signed_w11_divergence(N: int) -> SignedSeries:
    """``S_N = 8 pi sum m_n sqrt(M(m_n))`` and ``8 pi sum 1/(n+1)``.

    ``termwise_ok`` records that every term of S dominates the matching
    harmonic term, which makes ``S_N >= bound`` independent of summation
    order; the totals are accumulated with ``math.fsum``.
    """
    rho = SignedDensity(N)
    _, m = rho.nodes()
    terms = m * np.sqrt(rho.mass(m))
    harm = 1.0 / np.arange(2, N + 2, dtype=float)
    eight_pi = 8.0 * math.pi
    return SignedSeries(
        N=N,
        partial_sums=eight_pi * np.cumsum(terms),
        harmonic_bounds=eight_pi * np.cumsum(harm),
        S_N=eight_pi * math.fsum(terms),
        harmonic_bound=eight_pi * math.fsum(harm),
        termwise_ok=bool(np.all(terms >= harm)),
    )
