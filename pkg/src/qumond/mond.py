"""Interpolation functions, the phantom field, Milgrom's potential formula and
the weak form of the QUMOND equation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import ScalarGrid, VectorGrid, cell_centres, gradient_fd, inner
from .helmholtz import project_irrotational
from .newtonian import solve_field
from .singular import EpsilonSchedule

__all__ = [
    "AdmissibilityError",
    "InterpolationFunction",
    "lambda_deep_mond",
    "lambda_simple",
    "parse_lambda",
    "holder_vector_check",
    "empirical_holder_sup",
    "phantom_field",
    "mond_field",
    "cube_field_average",
    "milgrom_potential",
    "weak_pde_residual",
    "WeakResidual",
]


class AdmissibilityError(ValueError):
    """An interpolation function violates the bounds it is required to satisfy."""


@dataclass(frozen=True)
class Admissibility:
    upper_bound: bool
    derivative_bounds: bool
    decay: bool

    @property
    def ok(self) -> bool:
        return self.upper_bound and self.derivative_bounds and self.decay


@dataclass(frozen=True)
class InterpolationFunction:
    """``lam`` on (0, inf) with derivative ``lam_prime`` and constant ``big_lambda``.

    Construction scans sigma over twelve decades around ``a0`` and rejects
    functions with ``lam > big_lambda / sqrt(sigma)``, with ``lam_prime``
    outside ``[-big_lambda / (2 sigma^1.5), 0]``, or without decay.
    """

    lam: Callable
    lam_prime: Callable
    big_lambda: float
    a0: float = 1.0
    name: str = "custom"
    admissibility: Admissibility = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.a0 > 0 or not self.big_lambda > 0:
            raise AdmissibilityError("a0 and big_lambda must be positive")
        report = self.scan()
        object.__setattr__(self, "admissibility", report)
        if not report.ok:
            raise AdmissibilityError(f"interpolation function {self.name!r} is not admissible: {report}")

    def sigma_scan(self, decades: float = 12.0, count: int = 481) -> np.ndarray:
        half = decades / 2.0
        return self.a0 * np.logspace(-half, half, count)

    def scan(self, decades: float = 12.0) -> Admissibility:
        s = self.sigma_scan(decades)
        lam = np.asarray(self.lam(s), dtype=float)
        dlam = np.asarray(self.lam_prime(s), dtype=float)
        rtol = 1e-12
        bound = self.big_lambda / np.sqrt(s)
        upper = bool(np.all(np.isfinite(lam)) and np.all(lam > 0) and np.all(lam <= bound * (1 + rtol)))
        dlow = -self.big_lambda / (2.0 * s**1.5)
        deriv = bool(np.all(np.isfinite(dlam)) and np.all(dlam <= 0) and np.all(dlam >= dlow * (1 + rtol)))
        tail = lam[-len(lam) // 4 :]
        decay = bool(np.all(np.diff(tail) <= 0) and tail[-1] <= 1e-2 * lam[len(lam) // 2])
        return Admissibility(upper, deriv, decay)

    def __call__(self, sigma):
        return self.lam(sigma)

    def tilde(self, sigma):
        """``lam(sigma) * sigma`` with value 0 at sigma = 0."""
        s = np.asarray(sigma, dtype=float)
        pos = s > 0
        out = np.zeros_like(s)
        out[pos] = self.lam(s[pos]) * s[pos]
        return float(out) if out.ndim == 0 else out

    def tilde_prime(self, sigma):
        s = np.asarray(sigma, dtype=float)
        return self.lam_prime(s) * s + self.lam(s)


def lambda_deep_mond(a0: float = 1.0) -> InterpolationFunction:
    """``lam(sigma) = sqrt(a0 / sigma)``, ``big_lambda = sqrt(a0)``."""
    if not a0 > 0:
        raise ValueError(f"a0 must be positive, got {a0}")
    r = math.sqrt(a0)
    return InterpolationFunction(
        lam=lambda s: r / np.sqrt(s),
        lam_prime=lambda s: -0.5 * r / np.asarray(s, dtype=float) ** 1.5,
        big_lambda=r,
        a0=a0,
        name="deep",
    )


def lambda_simple(a0: float = 1.0) -> InterpolationFunction:
    """``lam(sigma) = -1/2 + sqrt(1/4 + a0/sigma)``: Newtonian at large sigma,
    deep-MOND at small sigma."""
    if not a0 > 0:
        raise ValueError(f"a0 must be positive, got {a0}")

    def lam(s):
        p = np.asarray(s, dtype=float) / a0
        # -1/2 + sqrt(1/4 + 1/p) rewritten so neither tiny nor huge p overflows
        return 1.0 / (0.5 * p + np.sqrt(p) * np.sqrt(0.25 * p + 1.0))

    def lam_prime(s):
        p = np.asarray(s, dtype=float) / a0
        with np.errstate(over="ignore", divide="ignore"):  # saturates to -0 or -inf
            return -1.0 / (2.0 * a0 * p * np.sqrt(p) * np.sqrt(0.25 * p + 1.0))

    return InterpolationFunction(lam, lam_prime, math.sqrt(a0), a0, "simple")


_FAMILIES = {"deep": lambda_deep_mond, "simple": lambda_simple}


def parse_lambda(text: str) -> InterpolationFunction:
    """``"deep:1"`` or ``"simple:0.5"``; a missing a0 means 1."""
    name, _, a0 = text.partition(":")
    if name not in _FAMILIES:
        raise ValueError(f"unknown interpolation family {name!r} (expected one of {sorted(_FAMILIES)})")
    try:
        value = float(a0) if a0 else 1.0
    except ValueError:
        raise ValueError(f"bad a0 value {a0!r}") from None
    return _FAMILIES[name](value)


# --------------------------------------------------------------------------
# pointwise maps


def _weighted(lam: InterpolationFunction, u: np.ndarray) -> np.ndarray:
    """``lam(|u|) u`` along the last axis, 0 where u = 0."""
    mag = np.linalg.norm(u, axis=-1, keepdims=True)
    pos = mag > 0
    w = np.zeros_like(mag)
    w[pos] = lam(mag[pos])
    return w * u


def holder_vector_check(lam: InterpolationFunction, u, v) -> float:
    """``|lam(|u|)u - lam(|v|)v| / |u - v|^(1/2)``; 0 when u = v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    d = np.linalg.norm(u - v)
    if d == 0:
        return 0.0
    return float(np.linalg.norm(_weighted(lam, u) - _weighted(lam, v)) / math.sqrt(d))


def empirical_holder_sup(lam: InterpolationFunction, rng, count: int, box: float = 10.0) -> float:
    """Largest Hoelder ratio over ``count`` random pairs in ``[-box, box]^3``."""
    u = rng.uniform(-box, box, (count, 3))
    v = rng.uniform(-box, box, (count, 3))
    num = np.linalg.norm(_weighted(lam, u) - _weighted(lam, v), axis=-1)
    den = np.sqrt(np.linalg.norm(u - v, axis=-1))
    ok = den > 0
    return float(np.max(num[ok] / den[ok])) if np.any(ok) else 0.0


def phantom_field(grad_un: VectorGrid, lam: InterpolationFunction) -> VectorGrid:
    """``lam(|g|) g`` pointwise, 0 where g vanishes."""
    arr = np.moveaxis(grad_un.array, 0, -1)
    return grad_un.like(np.moveaxis(_weighted(lam, arr), -1, 0))


def mond_field(rho: ScalarGrid, lam: InterpolationFunction, sched: EpsilonSchedule | None = None) -> VectorGrid:
    """``grad U^N + H(lam(|grad U^N|) grad U^N)``."""
    g = solve_field(rho)
    return g + project_irrotational(phantom_field(g, lam), sched)


# --------------------------------------------------------------------------
# Milgrom's anchored potential


def _log_plus(a, r, rest2):
    """``log(a + r)`` with ``r = sqrt(a^2 + rest2)``, stable for a < 0."""
    out = np.empty(np.broadcast(a, r).shape)
    a, r, rest2 = np.broadcast_arrays(a, r, rest2)
    pos = a >= 0
    out[pos] = np.log(a[pos] + r[pos])
    neg = ~pos
    with np.errstate(divide="ignore"):
        out[neg] = np.log(rest2[neg]) - np.log(r[neg] - a[neg])
    return out


def _prism_antiderivative(u1, u2, u3):
    """Antiderivative in (u2, u3) of ``1/|u|`` at fixed u1."""
    u1, u2, u3 = np.broadcast_arrays(u1, u2, u3)
    r = np.sqrt(u1 * u1 + u2 * u2 + u3 * u3)
    out = np.zeros(u1.shape)
    a = u2 != 0
    out[a] += u2[a] * _log_plus(u3[a], r[a], (u1 * u1 + u2 * u2)[a])
    b = u3 != 0
    out[b] += u3[b] * _log_plus(u2[b], r[b], (u1 * u1 + u3 * u3)[b])
    c = (u1 != 0) & (r > 0)
    out[c] -= u1[c] * np.arctan(u2[c] * u3[c] / (u1[c] * r[c]))
    return out


def cube_field_average(x, lo, hi) -> np.ndarray:
    """``int_{[lo, hi]} (x - y)/|x - y|^3 dy`` for boxes ``[lo, hi]`` (last axis 3).

    Exact; ``x`` may sit inside, on the boundary of, or outside the box.
    """
    x = np.asarray(x, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    shape = np.broadcast(x[..., 0], lo[..., 0], hi[..., 0]).shape
    out = np.zeros(shape + (3,))
    ulo = x - hi  # u = x - y ranges over [x - hi, x - lo]
    uhi = x - lo
    for k in range(3):
        p, q = (k + 1) % 3, (k + 2) % 3
        total = np.zeros(shape)
        for s1, u1 in ((1.0, uhi[..., k]), (-1.0, ulo[..., k])):
            for s2, u2 in ((1.0, uhi[..., p]), (-1.0, ulo[..., p])):
                for s3, u3 in ((1.0, uhi[..., q]), (-1.0, ulo[..., q])):
                    total = total - s1 * s2 * s3 * _prism_antiderivative(u1, u2, u3)
        out[..., k] = total
    return out


def _kernel_sum(w: np.ndarray, centres, h: float, x: np.ndarray) -> float:
    """``sum_y w(y) . (x - y)/|x - y|^3 h^3`` with exact cell averages for the
    cells within 1.5h (per axis) of x."""
    cx, cy, cz = centres
    d = [x[0] - cx[:, None, None], x[1] - cy[None, :, None], x[2] - cz[None, None, :]]
    r2 = d[0] ** 2 + d[1] ** 2 + d[2] ** 2
    near = (np.abs(d[0]) <= 1.5 * h) & (np.abs(d[1]) <= 1.5 * h) & (np.abs(d[2]) <= 1.5 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv3 = np.where(near, 0.0, r2**-1.5)
    total = sum(float(np.sum(w[k] * d[k] * inv3)) for k in range(3)) * h**3
    idx = np.nonzero(near)
    if idx[0].size:
        c = np.stack([cx[idx[0]], cy[idx[1]], cz[idx[2]]], axis=-1)
        avg = cube_field_average(x[None, :], c - 0.5 * h, c + 0.5 * h)
        wn = np.stack([w[k][idx] for k in range(3)], axis=-1)
        total += float(np.sum(wn * avg))
    return total


def milgrom_potential(rho: ScalarGrid, lam: InterpolationFunction, points, *, phantom: VectorGrid | None = None) -> np.ndarray:
    """``(1/4 pi) int w(y) . ((x-y)/|x-y|^3 + y/|y|^3) dy`` with
    ``w = lam(|grad U^N|) grad U^N``, evaluated at each point.

    Cells adjacent to ``x`` or to the origin use exact cell averages of the
    kernel.  ``phantom`` may be passed to reuse a precomputed ``w``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != 3:
        raise ValueError("points must be 3-vectors")
    L = rho.half_width
    if np.any(np.abs(pts) > L):
        raise ValueError("evaluation points must lie inside the box")
    w = phantom if phantom is not None else phantom_field(solve_field(rho), lam)
    data = [c.data for c in w]
    c = cell_centres(rho.n, L)
    centres = (c, c, c)
    # y/|y|^3 = -(0 - y)/|0 - y|^3: the anchor is minus the kernel sum at x = 0
    anchor = -_kernel_sum(data, centres, rho.h, np.zeros(3))
    out = np.array([_kernel_sum(data, centres, rho.h, x) + anchor for x in pts])
    return out / (4.0 * np.pi)


# --------------------------------------------------------------------------
# weak form


@dataclass(frozen=True)
class WeakResidual:
    test_id: int
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        den = max(abs(self.lhs), abs(self.rhs))
        return 0.0 if den == 0 else abs(self.lhs - self.rhs) / den


def weak_pde_residual(rho: ScalarGrid, lam: InterpolationFunction, testfns, sched: EpsilonSchedule | None = None) -> list[WeakResidual]:
    """Compare ``int grad U^M . grad phi`` with ``int (grad U^N + w) . grad phi``.

    Test functions are ScalarGrids (differentiated by central differences)
    or VectorGrids taken to be their exact gradients already.
    """
    g = solve_field(rho)
    w = phantom_field(g, lam)
    gm = g + project_irrotational(w, sched)
    rhs_field = g + w
    out = []
    for k, phi in enumerate(testfns):
        dphi = phi if isinstance(phi, VectorGrid) else gradient_fd(phi)
        out.append(WeakResidual(k, inner(gm, dphi), inner(rhs_field, dphi)))
    return out


def write_residuals(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("test_id,lhs,rhs,gap\n")
        for r in rows:
            fh.write(f"{r.test_id},{r.lhs!r},{r.rhs!r},{r.gap!r}\n")


def read_points(path) -> np.ndarray:
    """Evaluation points from CSV ``x,y,z`` (header line required)."""
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.shape[1] != 3:
        raise ValueError(f"{path}: expected three columns x,y,z")
    return arr
