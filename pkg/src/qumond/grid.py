"""Uniform Cartesian field containers, quadrature, norms and stencils.

Grids are cubic, cell-centred and cover ``[-L, L]^3``.  Arrays are indexed
``data[ix, iy, iz]``; the dump format writes them x-fastest (Fortran order).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

__all__ = [
    "ScalarGrid",
    "VectorGrid",
    "RadialProfile",
    "integrate",
    "inner",
    "lq_norm",
    "l2_norm",
    "gradient_fd",
    "divergence_fd",
    "curl_fd",
    "jacobian_norm",
    "write_grid",
    "read_grid",
    "write_profile",
    "read_profile",
    "GridFormatError",
]


class GridFormatError(ValueError):
    """Malformed grid dump or profile file."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    """Cell-centred samples of a scalar field on ``[-L, L]^3``."""

    n: int
    half_width: float
    data: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 4 or n % 2:
            raise ValueError(f"n must be even and >= 4, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (n, n, n):
            raise ValueError(f"data shape {data.shape} does not match n={n}")
        if not np.all(np.isfinite(data)):
            raise ValueError("grid samples must be finite")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def zeros(cls, n: int, half_width: float) -> "ScalarGrid":
        return cls(n, half_width, np.zeros((n, n, n)))

    @classmethod
    def from_function(cls, n: int, half_width: float, fn) -> "ScalarGrid":
        """Sample ``fn(x, y, z)`` (broadcasting) at the cell centres."""
        x, y, z = cell_mesh(n, half_width)
        return cls(n, half_width, np.broadcast_to(fn(x, y, z), (n, n, n)))

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def coords(self) -> np.ndarray:
        return cell_centres(self.n, self.half_width)

    def mesh(self):
        return cell_mesh(self.n, self.half_width)

    def radius(self) -> np.ndarray:
        x, y, z = self.mesh()
        return np.sqrt(x * x + y * y + z * z)

    def like(self, data) -> "ScalarGrid":
        return ScalarGrid(self.n, self.half_width, data)

    def compatible(self, other) -> bool:
        return self.n == other.n and self.half_width == other.half_width

    def _check(self, other):
        if not self.compatible(other):
            raise ValueError(
                f"incompatible grids: n={self.n}, L={self.half_width} vs "
                f"n={other.n}, L={other.half_width}"
            )

    def __add__(self, other):
        if isinstance(other, ScalarGrid):
            self._check(other)
            return self.like(self.data + other.data)
        return self.like(self.data + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarGrid):
            self._check(other)
            return self.like(self.data - other.data)
        return self.like(self.data - other)

    def __mul__(self, other):
        if isinstance(other, ScalarGrid):
            self._check(other)
            return self.like(self.data * other.data)
        return self.like(self.data * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.data)


@dataclass(frozen=True, eq=False)
class VectorGrid:
    """Three :class:`ScalarGrid` components sharing ``n`` and ``half_width``."""

    components: tuple[ScalarGrid, ScalarGrid, ScalarGrid]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != 3:
            raise ValueError("a vector grid needs exactly three components")
        for c in comps[1:]:
            comps[0]._check(c)
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_array(cls, n: int, half_width: float, arr) -> "VectorGrid":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(tuple(ScalarGrid(n, half_width, arr[k]) for k in range(3)))

    @classmethod
    def zeros(cls, n: int, half_width: float) -> "VectorGrid":
        return cls.from_array(n, half_width, np.zeros((3, n, n, n)))

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def half_width(self) -> float:
        return self.components[0].half_width

    @property
    def h(self) -> float:
        return self.components[0].h

    @property
    def array(self) -> np.ndarray:
        """Stacked ``(3, n, n, n)`` copy of the components."""
        return np.stack([c.data for c in self.components])

    def magnitude(self) -> ScalarGrid:
        a = self.array
        return self.components[0].like(np.sqrt(np.sum(a * a, axis=0)))

    def like(self, arr) -> "VectorGrid":
        return VectorGrid.from_array(self.n, self.half_width, arr)

    def compatible(self, other) -> bool:
        return self.components[0].compatible(other.components[0] if isinstance(other, VectorGrid) else other)

    def __iter__(self) -> Iterator[ScalarGrid]:
        return iter(self.components)

    def __getitem__(self, k: int) -> ScalarGrid:
        return self.components[k]

    def __add__(self, other: "VectorGrid") -> "VectorGrid":
        return VectorGrid(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "VectorGrid") -> "VectorGrid":
        return VectorGrid(tuple(a - b for a, b in zip(self, other)))

    def __mul__(self, s) -> "VectorGrid":
        if isinstance(s, ScalarGrid):
            return VectorGrid(tuple(c * s for c in self))
        return VectorGrid(tuple(c * float(s) for c in self))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of a spherically symmetric function on a nonuniform radial mesh."""

    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=np.float64).ravel()
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if r.shape != v.shape:
            raise ValueError("radii and values must have the same length")
        if r.size == 0:
            raise ValueError("empty profile")
        if not np.all(r > 0):
            raise ValueError("radii must be positive")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(r)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "radii", _frozen(r))
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self) -> int:
        return self.radii.size

    def __call__(self, r):
        """Piecewise-linear interpolation; constant extension outside the mesh."""
        return np.interp(r, self.radii, self.values)

    def with_values(self, values) -> "RadialProfile":
        return RadialProfile(self.radii, values)


def cell_centres(n: int, half_width: float) -> np.ndarray:
    h = 2.0 * half_width / n
    return (np.arange(n) + 0.5) * h - half_width


def cell_mesh(n: int, half_width: float):
    """Sparse ``(x, y, z)`` mesh of cell centres, ``indexing='ij'``."""
    c = cell_centres(n, half_width)
    return np.meshgrid(c, c, c, indexing="ij", sparse=True)


# --------------------------------------------------------------------------
# quadrature and norms


def integrate(g: ScalarGrid) -> float:
    """Midpoint rule: sum of samples times the cell volume."""
    return float(np.sum(g.data) * g.h**3)


def inner(a, b) -> float:
    """Discrete L2 inner product of two scalar or two vector grids."""
    if isinstance(a, VectorGrid) and isinstance(b, VectorGrid):
        if not a.compatible(b):
            raise ValueError("incompatible vector grids")
        return float(np.sum(a.array * b.array) * a.h**3)
    if isinstance(a, ScalarGrid) and isinstance(b, ScalarGrid):
        a._check(b)
        return float(np.sum(a.data * b.data) * a.h**3)
    raise TypeError("inner() needs two ScalarGrids or two VectorGrids")


def lq_norm(g, q: float = 2.0, radius: float | None = None) -> float:
    """L^q norm over the box, or over the ball ``|x| < radius``.

    A cell belongs to the ball iff its centre does.  Vector grids use the
    pointwise Euclidean magnitude.
    """
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if isinstance(g, VectorGrid):
        g = g.magnitude()
    vals = np.abs(g.data)
    if radius is not None:
        if not radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")
        vals = vals[g.radius() < radius]
    if np.isinf(q):
        return float(vals.max()) if vals.size else 0.0
    return float((np.sum(vals**q) * g.h**3) ** (1.0 / q))


def l2_norm(g, radius: float | None = None) -> float:
    return lq_norm(g, 2.0, radius)


# --------------------------------------------------------------------------
# finite differences


def _diff(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    """d/dx_axis from first differences, so constants give exact zeros."""
    u = np.moveaxis(u, axis, 0)
    d = np.diff(u, axis=0)
    out = np.empty_like(u)
    out[1:-1] = (d[1:] + d[:-1]) / (2.0 * h)
    out[0] = (3.0 * d[0] - d[1]) / (2.0 * h)
    out[-1] = (3.0 * d[-1] - d[-2]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def _grad_array(u: np.ndarray, h: float) -> list[np.ndarray]:
    return [_diff(u, h, k) for k in range(3)]


def gradient_fd(u: ScalarGrid) -> VectorGrid:
    """Second-order central differences, second-order one-sided at the faces."""
    return VectorGrid(tuple(u.like(d) for d in _grad_array(u.data, u.h)))


def divergence_fd(v: VectorGrid) -> ScalarGrid:
    h = v.h
    div = sum(_diff(c.data, h, k) for k, c in enumerate(v))
    return v[0].like(div)


def curl_fd(v: VectorGrid) -> VectorGrid:
    h = v.h
    d = lambda k, axis: _diff(v[k].data, h, axis)  # noqa: E731
    return v.like([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])


def jacobian_norm(v: VectorGrid, radius: float | None = None) -> float:
    """L2 norm of the finite-difference Jacobian (Frobenius pointwise)."""
    total = np.zeros(v[0].shape)
    for c in v:
        for d in _grad_array(c.data, v.h):
            total += d * d
    return lq_norm(v[0].like(np.sqrt(total)), 2.0, radius)


# --------------------------------------------------------------------------
# dump formats

_HEADER = "SCALARGRID n={n} L={L!r} layout=x-fastest encoding=f64le"


def _header_fields(line: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != "SCALARGRID":
        raise GridFormatError(f"bad grid header: {line!r}")
    fields = {}
    for p in parts[1:]:
        key, sep, val = p.partition("=")
        if not sep:
            raise GridFormatError(f"bad header token {p!r}")
        fields[key] = val
    if fields.get("layout") != "x-fastest" or fields.get("encoding") != "f64le":
        raise GridFormatError(f"unsupported layout/encoding in {line!r}")
    return fields


def _write_block(fh, g: ScalarGrid, component: int | None):
    header = _HEADER.format(n=g.n, L=g.half_width)
    if component is not None:
        header += f" component={component}"
    fh.write(header.encode("ascii") + b"\n")
    fh.write(np.asarray(g.data, dtype="<f8").tobytes(order="F"))


def _read_block(fh) -> tuple[ScalarGrid, dict[str, str]]:
    line = fh.readline()
    if not line:
        raise GridFormatError("unexpected end of file")
    fields = _header_fields(line.decode("ascii").strip())
    try:
        n, L = int(fields["n"]), float(fields["L"])
    except (KeyError, ValueError) as exc:
        raise GridFormatError(f"missing n/L in header: {line!r}") from exc
    nbytes = 8 * n**3
    raw = fh.read(nbytes)
    if len(raw) != nbytes:
        raise GridFormatError(f"truncated grid payload ({len(raw)} of {nbytes} bytes)")
    data = np.frombuffer(raw, dtype="<f8").reshape((n, n, n), order="F")
    return ScalarGrid(n, L, data), fields


def write_grid(path, g) -> Path:
    """Write a scalar grid (one block) or vector grid (three tagged blocks)."""
    path = Path(path)
    with open(path, "wb") as fh:
        if isinstance(g, VectorGrid):
            for k, c in enumerate(g, start=1):
                _write_block(fh, c, k)
        else:
            _write_block(fh, g, None)
    return path


def read_grid(path):
    """Read a dump; returns a VectorGrid when the blocks carry component tags."""
    with open(path, "rb") as fh:
        first, fields = _read_block(fh)
        if "component" not in fields:
            if fh.read(1):
                raise GridFormatError("trailing data after scalar grid")
            return first
        blocks = {fields["component"]: first}
        for _ in range(2):
            g, f = _read_block(fh)
            blocks[f.get("component")] = g
        if fh.read(1):
            raise GridFormatError("trailing data after vector grid")
    if sorted(blocks) != ["1", "2", "3"]:
        raise GridFormatError(f"vector grid components {sorted(blocks)} != 1..3")
    return VectorGrid((blocks["1"], blocks["2"], blocks["3"]))


def write_profile(path, profile: RadialProfile) -> Path:
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "value"])
    for r, v in zip(profile.radii, profile.values):
        w.writerow([repr(float(r)), repr(float(v))])
    path.write_text(buf.getvalue())
    return path


def read_profile(path) -> RadialProfile:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["r", "value"]:
        raise GridFormatError(f"{path}: expected header 'r,value'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:] if a.strip()])
    except ValueError as exc:
        raise GridFormatError(f"{path}: non-numeric row") from exc
    if data.size == 0:
        raise GridFormatError(f"{path}: no samples")
    return RadialProfile(data[:, 0], data[:, 1])
