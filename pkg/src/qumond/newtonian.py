"""Free-space Newtonian potential, field, Hessian and interaction energy (G = 1).

``U(x) = -int g(y)/|x-y| dy`` and ``grad U(x) = int (x-y)/|x-y|^3 g(y) dy`` are
evaluated as lattice convolutions on a zero-padded ``2n`` box, so no periodic
images enter.  The potential kernel takes the cube-averaged value of
``-1/|x|`` on the self cell; the field kernel is odd and vanishes there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _conv
from .grid import ScalarGrid, VectorGrid, inner, integrate
from .singular import EpsilonSchedule, default_schedule, t_ij

__all__ = [
    "NewtonianSolution",
    "EnergyReport",
    "solve",
    "solve_potential",
    "solve_field",
    "hessian",
    "hessian_trace",
    "interaction_energy",
    "EXTERIOR_INV_R4",
]

# int over the exterior of [-1, 1]^3 of |x|^-4 dx; scales as 1/L for [-L, L]^3.
EXTERIOR_INV_R4 = 10.445037016405239


def _potential_builder(mx, my, mz, h):
    m2 = mx * mx + my * my + mz * mz
    safe = np.where(m2 > 0, m2, 1.0)
    k = -(h * h) / np.sqrt(safe)
    return np.where(m2 > 0, k, -_conv.CUBE_INV_R_MEAN * h * h)


def _field_builder(mx, my, mz, h, axis):
    m = (mx, my, mz)
    m2 = mx * mx + my * my + mz * mz
    safe = np.where(m2 > 0, m2, 1.0)
    return np.where(m2 > 0, m[axis] * h / safe**1.5, 0.0)


def solve_potential(g: ScalarGrid) -> ScalarGrid:
    spec = _conv.kernel_spectrum(_potential_builder, g.n, g.h)
    return g.like(_conv.convolve(g.data, spec))


def solve_field(g: ScalarGrid) -> VectorGrid:
    gf = _conv.forward(g.data)
    comps = [
        _conv.inverse(gf * _conv.kernel_spectrum(_field_builder, g.n, g.h, k), g.n)
        for k in range(3)
    ]
    return VectorGrid(tuple(g.like(c) for c in comps))


def hessian(g: ScalarGrid, sched: EpsilonSchedule | None = None):
    """Second derivatives ``T_ij g + delta_ij (4 pi / 3) g`` as a symmetric 3x3 tuple."""
    sched = sched or default_schedule(g.h)
    local = (4.0 * np.pi / 3.0) * g.data
    out = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            t = t_ij(g, (i + 1, j + 1), sched)
            if i == j:
                t = t.like(t.data + local)
            out[i][j] = out[j][i] = t
    return tuple(tuple(row) for row in out)


def hessian_trace(hess) -> ScalarGrid:
    return hess[0][0] + hess[1][1] + hess[2][2]


@dataclass(frozen=True)
class NewtonianSolution:
    potential: ScalarGrid
    field: VectorGrid
    source: ScalarGrid


def solve(g: ScalarGrid) -> NewtonianSolution:
    return NewtonianSolution(solve_potential(g), solve_field(g), g)


@dataclass(frozen=True)
class EnergyReport:
    """Both energy expressions.  ``field_form`` adds the monopole estimate of
    the field product outside the box, which decays only like 1/L."""

    potential_form: float
    field_form: float

    @property
    def gap(self) -> float:
        den = max(abs(self.potential_form), abs(self.field_form))
        return 0.0 if den == 0 else abs(self.potential_form - self.field_form) / den


def interaction_energy(rho: ScalarGrid, sigma: ScalarGrid, verify: bool = False):
    """``(1/2) int U_rho sigma``; with ``verify`` an :class:`EnergyReport`
    that also carries ``-(1/8 pi) int grad U_rho . grad U_sigma``."""
    rho._check(sigma)
    pot = 0.5 * inner(solve_potential(rho), sigma)
    if not verify:
        return pot
    box = inner(solve_field(rho), solve_field(sigma))
    tail = integrate(rho) * integrate(sigma) * EXTERIOR_INV_R4 / rho.half_width
    return EnergyReport(pot, -(box + tail) / (8.0 * np.pi))
