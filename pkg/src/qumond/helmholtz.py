"""Irrotational projector ``H_i v = (1/4 pi) sum_j T_ij v_j + v_i / 3`` and the
resulting gradient / divergence-free split."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import VectorGrid, curl_fd, divergence_fd, inner, jacobian_norm, l2_norm
from .singular import ConvergenceError, EpsilonSchedule, apply_matrix, default_schedule, relative_change

__all__ = [
    "Decomposition",
    "project_irrotational",
    "decompose",
    "inner_product_symmetry_check",
    "divergence_preservation_check",
]


def project_irrotational(v: VectorGrid, sched: EpsilonSchedule | None = None, *, return_change: bool = False):
    """Apply H through the extrapolated singular operators.

    Raises :class:`ConvergenceError` if the extrapolation is not settled
    to within ``sched.tolerance`` (L2, relative to ``max(||Hv||, ||v||)``).
    """
    sched = sched or default_schedule(v.h)
    outs, diffs = apply_matrix([c.data for c in v], v.n, v.h, sched)
    scale = 1.0 / (4.0 * np.pi)
    final = np.stack([scale * o + c.data / 3.0 for o, c in zip(outs, v)])
    change = 0.0
    if diffs[0] is not None:
        prev = final - scale * np.stack(diffs)
        change = relative_change(final, prev, v.array)
    if change > sched.tolerance:
        raise ConvergenceError(
            f"H: extrapolation changed by {change:.3g} > tolerance {sched.tolerance}", change
        )
    out = v.like(final)
    return (out, change) if return_change else out


@dataclass(frozen=True)
class Decomposition:
    """``input = irrotational + solenoidal``.

    Residuals are L2 norms of the finite-difference curl of the irrotational
    part and divergence of the solenoidal part, divided by the L2 norm of the
    input's finite-difference Jacobian so both are dimensionless.
    """

    irrotational: VectorGrid
    solenoidal: VectorGrid
    input: VectorGrid
    curl_residual: float
    div_residual: float
    extrapolation_change: float


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def decompose(v: VectorGrid, sched: EpsilonSchedule | None = None) -> Decomposition:
    hv, change = project_irrotational(v, sched, return_change=True)
    sol = v - hv
    scale = jacobian_norm(v)
    return Decomposition(
        irrotational=hv,
        solenoidal=sol,
        input=v,
        curl_residual=_ratio(l2_norm(curl_fd(hv)), scale),
        div_residual=_ratio(l2_norm(divergence_fd(sol)), scale),
        extrapolation_change=change,
    )


def inner_product_symmetry_check(v: VectorGrid, w: VectorGrid, sched: EpsilonSchedule | None = None):
    """Return ``(int v . Hw, int Hv . w)``."""
    if not v.compatible(w):
        raise ValueError("incompatible vector grids")
    return inner(v, project_irrotational(w, sched)), inner(project_irrotational(v, sched), w)


def divergence_preservation_check(v: VectorGrid, sched: EpsilonSchedule | None = None, *, floor: float = 1e-2) -> float:
    """``||div Hv - div v|| / ||div v||`` with finite-difference divergence.

    When ``||div v||`` is below ``floor`` times ``jacobian_norm(v)`` (a
    divergence-free input) the absolute residual divided by the Jacobian
    norm is returned instead.
    """
    dv = divergence_fd(v)
    resid = l2_norm(divergence_fd(project_irrotational(v, sched)) - dv)
    ref = l2_norm(dv)
    scale = jacobian_norm(v)
    if ref <= floor * scale:
        return _ratio(resid, scale)
    return resid / ref
