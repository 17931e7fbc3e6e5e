"""Declarative mass distributions and their text syntax.

``uniform-ball:rho0,R[,cx,cy,cz]``, ``gaussian:M,sigma[,cx,cy,cz]``, ``zero``,
``dyadic:n``, ``signed:N``, ``profile:<csv>`` and ``grid:<dump>``; terms
may be added with ``+``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from .counterexamples import DyadicDensity, SignedDensity
from .grid import ScalarGrid, cell_centres, read_grid, read_profile
from .spherical import FOUR_PI, SphericalModel

__all__ = ["DensityModel", "DensitySpecError", "parse_density"]


class DensitySpecError(ValueError):
    pass


def _subsample(fn, n: int, L: float, sub: int) -> np.ndarray:
    """Cell averages of ``fn(x, y, z)`` from ``sub^3`` points per cell."""
    h = 2.0 * L / n
    c = cell_centres(n, L)
    off = ((np.arange(sub) + 0.5) / sub - 0.5) * h
    fine = (c[:, None] + off[None, :]).ravel()
    out = np.empty((n, n, n))
    y = fine[None, :, None]
    z = fine[None, None, :]
    for i in range(n):
        x = (c[i] + off)[:, None, None]
        block = np.broadcast_to(fn(x, y, z), (sub, n * sub, n * sub))
        out[i] = block.reshape(sub, n, sub, n, sub).mean(axis=(0, 2, 4))
    return out


@dataclass(frozen=True)
class DensityModel:
    """A density with a grid sampler and, when centred and radial, a spherical model."""

    label: str
    point_fn: object = None  # f(x, y, z) -> rho
    radial: SphericalModel | None = None
    grid: ScalarGrid | None = None
    subsamples: int = 4

    def sample(self, n: int, L: float) -> ScalarGrid:
        if self.grid is not None:
            if self.grid.n != n or self.grid.half_width != L:
                raise DensitySpecError(
                    f"density: grid file has n={self.grid.n}, L={self.grid.half_width} but the run uses n={n}, L={L}"
                )
            return self.grid
        if self.point_fn is None:
            return ScalarGrid.zeros(n, L)
        return ScalarGrid(n, L, _subsample(self.point_fn, n, L, self.subsamples))

    @property
    def is_spherical(self) -> bool:
        return self.radial is not None

    def __add__(self, other: "DensityModel") -> "DensityModel":
        if self.grid is not None or other.grid is not None:
            raise DensitySpecError("density: grid files cannot be combined with other terms")
        f, g = self.point_fn, other.point_fn
        if f is None:
            fn = g
        elif g is None:
            fn = f
        else:
            fn = lambda x, y, z: f(x, y, z) + g(x, y, z)  # noqa: E731
        radial = None
        if self.radial is not None and other.radial is not None:
            a, b = self.radial, other.radial
            radial = SphericalModel.from_functions(
                lambda r: a.density(r) + b.density(r),
                lambda r: a.enclosed_mass(r) + b.enclosed_mass(r),
                a.total_mass + b.total_mass,
                max(a.support_radius, b.support_radius),
            )
        return DensityModel(f"{self.label}+{other.label}", fn, radial, None, max(self.subsamples, other.subsamples))


def _floats(name: str, body: str, lo: int, hi: int) -> list[float]:
    try:
        vals = [float(t) for t in body.split(",")] if body else []
    except ValueError:
        raise DensitySpecError(f"density: {name} parameters must be numbers, got {body!r}") from None
    if not lo <= len(vals) <= hi:
        raise DensitySpecError(f"density: {name} takes {lo} to {hi} parameters, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise DensitySpecError(f"density: {name} parameters must be finite")
    return vals


def _centre(vals, k):
    c = vals[k:] + [0.0] * (3 - len(vals[k:]))
    return np.array(c[:3])


def _radius_fn(c):
    return lambda x, y, z: np.sqrt((x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2)


def uniform_ball(rho0: float, R: float, center=(0.0, 0.0, 0.0)) -> DensityModel:
    if not rho0 >= 0 or not R > 0:
        raise DensitySpecError("density: uniform-ball needs rho0 >= 0 and R > 0")
    c = np.asarray(center, dtype=float)
    rad = _radius_fn(c)
    fn = lambda x, y, z: np.where(rad(x, y, z) < R, rho0, 0.0)  # noqa: E731
    radial = None
    if not np.any(c):
        radial = SphericalModel.from_functions(
            lambda r: np.where(np.asarray(r) < R, rho0, 0.0),
            lambda r: FOUR_PI / 3.0 * rho0 * np.minimum(np.asarray(r, dtype=float), R) ** 3,
            FOUR_PI / 3.0 * rho0 * R**3,
            R,
        )
    return DensityModel(f"uniform-ball:{rho0},{R}", fn, radial)


def gaussian(mass: float, width: float, center=(0.0, 0.0, 0.0)) -> DensityModel:
    if not mass >= 0 or not width > 0:
        raise DensitySpecError("density: gaussian needs M >= 0 and sigma > 0")
    c = np.asarray(center, dtype=float)
    rad = _radius_fn(c)
    norm = mass / (2.0 * math.pi * width**2) ** 1.5
    fn = lambda x, y, z: norm * np.exp(-rad(x, y, z) ** 2 / (2.0 * width**2))  # noqa: E731
    radial = None
    if not np.any(c):

        def enclosed(r):
            s = np.asarray(r, dtype=float) / width
            return mass * (erf(s / math.sqrt(2.0)) - math.sqrt(2.0 / math.pi) * s * np.exp(-0.5 * s * s))

        radial = SphericalModel.from_functions(
            lambda r: norm * np.exp(-np.asarray(r, dtype=float) ** 2 / (2.0 * width**2)),
            enclosed,
            mass,
            4.0 * width,
        )
    return DensityModel(f"gaussian:{mass},{width}", fn, radial)


def _radial_point_fn(model: SphericalModel):
    return lambda x, y, z: model.density(np.sqrt(x * x + y * y + z * z))


def _primitive(term: str) -> DensityModel:
    name, _, body = term.strip().partition(":")
    name = name.strip()
    if name == "zero":
        if body:
            raise DensitySpecError("density: zero takes no parameters")
        nothing = lambda r: np.zeros(np.shape(r))  # noqa: E731
        return DensityModel("zero", None, SphericalModel.from_functions(nothing, nothing, 0.0, 0.0))
    if name == "uniform-ball":
        v = _floats(name, body, 2, 5)
        return uniform_ball(v[0], v[1], _centre(v, 2))
    if name == "gaussian":
        v = _floats(name, body, 2, 5)
        return gaussian(v[0], v[1], _centre(v, 2))
    if name == "dyadic":
        v = _floats(name, body, 1, 1)
        if v[0] < 1 or v[0] != int(v[0]):
            raise DensitySpecError("density: dyadic needs a positive integer n")
        model = DyadicDensity(int(v[0])).model()
        return DensityModel(term, _radial_point_fn(model), model, subsamples=6)
    if name == "signed":
        v = _floats(name, body, 1, 1)
        if v[0] < 1 or v[0] != int(v[0]):
            raise DensitySpecError("density: signed needs a positive integer N")
        model = SignedDensity(int(v[0])).model()
        return DensityModel(term, _radial_point_fn(model), model)
    if name == "profile":
        path = Path(body)
        if not path.is_file():
            raise DensitySpecError(f"density: profile file {body!r} does not exist")
        try:
            model = SphericalModel.from_profile(read_profile(path))
        except ValueError as exc:
            raise DensitySpecError(f"density: bad profile file {body!r}: {exc}") from None
        return DensityModel(term, _radial_point_fn(model), model)
    if name == "grid":
        path = Path(body)
        if not path.is_file():
            raise DensitySpecError(f"density: grid file {body!r} does not exist")
        try:
            g = read_grid(path)
        except ValueError as exc:
            raise DensitySpecError(f"density: bad grid file {body!r}: {exc}") from None
        if not isinstance(g, ScalarGrid):
            raise DensitySpecError(f"density: grid file {body!r} holds a vector field")
        return DensityModel(term, None, None, g)
    raise DensitySpecError(
        f"density: unknown primitive {name!r} "
        "(expected uniform-ball, gaussian, zero, dyadic, signed, profile or grid)"
    )


def parse_density(text: str) -> DensityModel:
    if not text or not text.strip():
        raise DensitySpecError("density: empty specification")
    # '+' joins terms only when a primitive name follows, so 1e+3 survives
    terms = re.split(r"\+(?=\s*[a-z])", text)
    if any(not t.strip() for t in terms):
        raise DensitySpecError(f"density: empty term in {text!r}")
    model = _primitive(terms[0])
    for t in terms[1:]:
        model = model + _primitive(t)
    return model
