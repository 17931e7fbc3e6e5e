"""Calderon-Zygmund kernel Omega_ij, truncated operators T_ij^eps and their limits.

``T_ij^eps g(x) = -int_{|x-y|>eps} [3 (x_i-y_i)(x_j-y_j)/|x-y|^5 - delta_ij/|x-y|^3] g(y) dy``

is evaluated as a zero-padded lattice convolution with the kernel zeroed at
offsets whose cell-centre distance is ``<= eps``.  The ``eps -> 0`` limit is
taken by polynomial extrapolation in ``eps^2`` over an :class:`EpsilonSchedule`.
Because extrapolation is linear, the limit operator is itself a convolution
with a radially reweighted kernel; that fused kernel is what
:func:`t_ij` and :mod:`qumond.helmholtz` apply.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _conv
from .grid import ScalarGrid

__all__ = [
    "KernelIndex",
    "EpsilonSchedule",
    "ConvergenceError",
    "omega",
    "kernel_value",
    "t_ij_eps",
    "t_ij",
    "t_ij_levels",
    "PAIRS",
]

PAIRS = ((1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))


class ConvergenceError(ArithmeticError):
    """The eps -> 0 extrapolation changed by more than the schedule tolerance."""

    def __init__(self, message: str, relative_change: float):
        super().__init__(message)
        self.relative_change = relative_change


@dataclass(frozen=True)
class KernelIndex:
    """Index pair (i, j), each in {1, 2, 3}."""

    i: int
    j: int

    def __post_init__(self):
        for v in (self.i, self.j):
            if v not in (1, 2, 3):
                raise ValueError(f"kernel indices must be in {{1,2,3}}, got ({self.i}, {self.j})")

    @classmethod
    def of(cls, idx) -> "KernelIndex":
        if isinstance(idx, KernelIndex):
            return idx
        i, j = idx
        return cls(int(i), int(j))

    @property
    def axes(self) -> tuple[int, int]:
        """Zero-based axes, ordered (kernel is symmetric in i, j)."""
        a, b = self.i - 1, self.j - 1
        return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Decreasing truncation radii with an optional Richardson flag.

    ``tolerance`` bounds the relative L2 change between the final estimate
    and the next-best one (the estimate built without the coarsest radius,
    or the second-finest raw level when ``richardson`` is off).
    """

    eps: tuple[float, ...]
    richardson: bool = True
    tolerance: float = 0.05
    _weights: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if not eps:
            raise ValueError("empty epsilon schedule")
        if any(not e > 0 for e in eps):
            raise ValueError(f"truncation radii must be positive: {eps}")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"truncation radii must be strictly decreasing: {eps}")
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be non-negative")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "_weights", (self._coeffs(eps), self._coeffs(eps[1:]) if len(eps) > 1 else None))

    def _coeffs(self, eps):
        if not self.richardson:
            return tuple(0.0 if k < len(eps) - 1 else 1.0 for k in range(len(eps)))
        t = [e * e for e in eps]
        out = []
        for k, tk in enumerate(t):
            c = 1.0
            for l, tl in enumerate(t):
                if l != k:
                    c *= tl / (tl - tk)
            out.append(c)
        return tuple(out)

    @classmethod
    def geometric(cls, h: float, factors=(8, 4, 2), **kw) -> "EpsilonSchedule":
        return cls(tuple(f * h for f in factors), **kw)

    @classmethod
    def parse(cls, text: str, h: float, **kw) -> "EpsilonSchedule":
        """Parse ``"8,4,2"`` (multiples of h) or ``"8h,4h,2h"``; a trailing
        ``":raw"`` disables extrapolation."""
        body, _, mode = text.partition(":")
        factors = [float(tok.strip().rstrip("h")) for tok in body.split(",") if tok.strip()]
        if mode not in ("", "raw", "richardson"):
            raise ValueError(f"unknown schedule mode {mode!r}")
        return cls.geometric(h, factors, richardson=(mode != "raw"), **kw)

    def weights(self) -> tuple[float, ...]:
        """Coefficients c_k with limit = sum_k c_k * T^{eps_k}."""
        return self._weights[0]

    def previous_weights(self) -> tuple[float, ...] | None:
        """Coefficients of the comparison estimate, aligned with ``eps``."""
        if len(self.eps) < 2:
            return None
        if not self.richardson:
            return tuple(1.0 if k == len(self.eps) - 2 else 0.0 for k in range(len(self.eps)))
        return (0.0,) + self._weights[1]

    def check_grid(self, h: float) -> None:
        if self.eps[-1] < h * (1 - 1e-12):
            raise ValueError(f"smallest truncation radius {self.eps[-1]} is below the grid spacing {h}")


def default_schedule(h: float) -> EpsilonSchedule:
    return EpsilonSchedule.geometric(h)


# --------------------------------------------------------------------------
# pointwise kernel


def omega(i: int, j: int, x) -> np.ndarray | float:
    """Omega_ij(x) = 3 x_i x_j / |x|^2 - delta_ij for nonzero x (last axis = 3)."""
    idx = KernelIndex(i, j)
    x = np.asarray(x, dtype=np.float64)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0):
        raise ValueError("omega is undefined at x = 0")
    a, b = idx.i - 1, idx.j - 1
    out = 3.0 * x[..., a] * x[..., b] / r2 - (1.0 if a == b else 0.0)
    return float(out) if np.ndim(out) == 0 else out


def kernel_value(i: int, j: int, x):
    """Omega_ij(x) / |x|^3, the second-derivative kernel of 1/|x|."""
    x = np.asarray(x, dtype=np.float64)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return omega(i, j, x) / r**3


# --------------------------------------------------------------------------
# lattice operators


def _thresholds(eps_seq, h):
    # strict |x| > eps at cell-centre granularity, robust to eps = k*h rounding
    out = []
    for e in eps_seq:
        t2 = (e / h) ** 2
        out.append(t2 + 1e-9 * max(1.0, t2))
    return tuple(out)


def _tij_builder(mx, my, mz, h, a, b, radial):
    """Lattice samples of -Omega_ab(m)/|m|^3 (h^3 cancels the degree -3 scaling)
    multiplied by a radial weight sum_k c_k [|m|^2 > t_k]."""
    m = (mx, my, mz)
    m2 = mx * mx + my * my + mz * mz
    safe = np.where(m2 > 0, m2, 1.0)
    k = (3.0 * m[a] * m[b] / safe - (1.0 if a == b else 0.0)) / safe**1.5
    w = np.zeros(np.shape(m2))
    for t2, c in radial:
        if c != 0.0:
            w = w + c * (m2 > t2)
    return -k * w


def _spectrum(n, h, axes, eps_seq, coeffs):
    radial = tuple(zip(_thresholds(eps_seq, h), (float(c) for c in coeffs)))
    return _conv.kernel_spectrum(_tij_builder, n, h, axes[0], axes[1], radial)


def t_ij_eps(g: ScalarGrid, idx, eps: float) -> ScalarGrid:
    """Truncated operator T_ij^eps applied to ``g``; requires ``eps >= h``."""
    idx = KernelIndex.of(idx)
    if eps < g.h * (1 - 1e-12):
        raise ValueError(f"eps={eps} is below the grid spacing h={g.h}")
    spec = _spectrum(g.n, g.h, idx.axes, (eps,), (1.0,))
    return g.like(_conv.convolve(g.data, spec))


def t_ij_levels(g: ScalarGrid, idx, sched: EpsilonSchedule) -> list[ScalarGrid]:
    """T_ij^eps g for every radius of the schedule, coarsest first."""
    return [t_ij_eps(g, idx, e) for e in sched.eps]


def relative_change(final: np.ndarray, other: np.ndarray, source: np.ndarray | None = None) -> float:
    """``||final - other|| / max(||final||, ||source||)``.

    Including the input norm keeps the measure meaningful when the operator
    nearly annihilates its input.
    """
    den = float(np.linalg.norm(final))
    if source is not None:
        den = max(den, float(np.linalg.norm(source)))
    if den == 0.0:
        return 0.0 if not np.any(other) else float("inf")
    return float(np.linalg.norm(final - other)) / den


def t_ij(g: ScalarGrid, idx, sched: EpsilonSchedule | None = None, *, return_change: bool = False):
    """Extrapolated eps -> 0 limit of :func:`t_ij_eps` over ``sched``.

    Raises :class:`ConvergenceError` when the change between the final and
    the next-best estimate, relative to ``max(||output||, ||g||)``, exceeds
    ``sched.tolerance``.
    """
    idx = KernelIndex.of(idx)
    sched = sched or default_schedule(g.h)
    sched.check_grid(g.h)
    gf = _conv.forward(g.data)
    final = _conv.inverse(gf * _spectrum(g.n, g.h, idx.axes, sched.eps, sched.weights()), g.n)
    change = 0.0
    prev_w = sched.previous_weights()
    if prev_w is not None:
        diff_w = tuple(a - b for a, b in zip(sched.weights(), prev_w))
        diff = _conv.inverse(gf * _spectrum(g.n, g.h, idx.axes, sched.eps, diff_w), g.n)
        change = relative_change(final, final - diff, g.data)
    if change > sched.tolerance:
        raise ConvergenceError(
            f"T_{idx.i}{idx.j}: extrapolation changed by {change:.3g} > tolerance {sched.tolerance}",
            change,
        )
    out = g.like(final)
    return (out, change) if return_change else out


def apply_matrix(vectors: list[np.ndarray], n: int, h: float, sched: EpsilonSchedule):
    """Return ``sum_j T_ij v_j`` for i = 1..3 plus the extrapolation change.

    Shares the forward transforms across the six kernel pairs.
    """
    sched.check_grid(h)
    spectra = [_conv.forward(v) for v in vectors]
    w = sched.weights()
    prev_w = sched.previous_weights()
    diff_w = None if prev_w is None else tuple(a - b for a, b in zip(w, prev_w))
    outs, diffs = [], []
    for a in range(3):
        acc = None
        dacc = None
        for b in range(3):
            axes = (min(a, b), max(a, b))
            term = spectra[b] * _spectrum(n, h, axes, sched.eps, w)
            acc = term if acc is None else acc + term
            if diff_w is not None:
                dterm = spectra[b] * _spectrum(n, h, axes, sched.eps, diff_w)
                dacc = dterm if dacc is None else dacc + dterm
        outs.append(_conv.inverse(acc, n))
        diffs.append(None if dacc is None else _conv.inverse(dacc, n))
    return outs, diffs
