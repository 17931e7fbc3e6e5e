"""Containers, quadrature, norms, stencils and the dump format."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qumond import oracles
from qumond.grid import (
    GridFormatError,
    RadialProfile,
    ScalarGrid,
    VectorGrid,
    gradient_fd,
    integrate,
    lq_norm,
    read_grid,
    read_profile,
    write_grid,
    write_profile,
)


def test_invariants_rejected():
    with pytest.raises(ValueError):
        ScalarGrid.zeros(5, 1.0)
    with pytest.raises(ValueError):
        ScalarGrid.zeros(2, 1.0)
    with pytest.raises(ValueError):
        ScalarGrid(4, 1.0, np.full((4, 4, 4), np.nan))
    with pytest.raises(ValueError):
        ScalarGrid.zeros(4, 0.0)
    with pytest.raises(ValueError):
        VectorGrid((ScalarGrid.zeros(4, 1.0), ScalarGrid.zeros(4, 1.0), ScalarGrid.zeros(6, 1.0)))


def test_data_is_read_only():
    g = ScalarGrid.zeros(4, 1.0)
    with pytest.raises(ValueError):
        g.data[0, 0, 0] = 1.0


@pytest.mark.parametrize("n", [4, 8, 16])
def test_integrate_constant_and_zero(n):
    assert integrate(ScalarGrid.from_function(n, 1.0, lambda x, y, z: np.ones_like(x * y * z))) == pytest.approx(8.0, rel=1e-14)
    assert integrate(ScalarGrid.zeros(n, 1.0)) == 0.0


def test_integrate_unit_gaussian():
    g = oracles.gaussian(64, 2.0, mass=1.0, width=0.3)
    assert abs(integrate(g) - 1.0) <= 1e-3


@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
@settings(max_examples=25, deadline=None)
def test_integrate_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    f = ScalarGrid(8, 1.0, rng.standard_normal((8, 8, 8)))
    g = ScalarGrid(8, 1.0, rng.standard_normal((8, 8, 8)))
    lhs = integrate(a * f + b * g)
    rhs = a * integrate(f) + b * integrate(g)
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(a) + abs(b)) * 512)


def test_lq_norm_examples():
    two = ScalarGrid.from_function(8, 1.0, lambda x, y, z: np.full(np.broadcast(x, y, z).shape, 2.0))
    assert lq_norm(two, 2) == pytest.approx(2.0 * math.sqrt(8.0), rel=1e-14)
    assert lq_norm(ScalarGrid.zeros(8, 1.0), 3.5) == 0.0
    with pytest.raises(ValueError):
        lq_norm(two, 0.5)


def test_lq_norm_inverse_radius():
    # cell centres never hit the origin for even n
    g = ScalarGrid.from_function(64, 1.0, lambda x, y, z: 1.0 / np.sqrt(x * x + y * y + z * z))
    assert lq_norm(g, 2, radius=1.0) == pytest.approx(math.sqrt(4 * math.pi), rel=0.05)


@given(q=st.floats(1.0, 6.0), seed=st.integers(0, 2**16))
@settings(max_examples=20, deadline=None)
def test_lq_norm_full_ball_equals_box(q, seed):
    rng = np.random.default_rng(seed)
    g = ScalarGrid(8, 1.5, rng.standard_normal((8, 8, 8)))
    assert lq_norm(g, q, radius=1.5 * math.sqrt(3)) == pytest.approx(lq_norm(g, q), rel=1e-14)


def test_gradient_fd_linear_and_constant():
    n, L = 16, 1.0
    g = gradient_fd(ScalarGrid.from_function(n, L, lambda x, y, z: x + 0 * y * z))
    np.testing.assert_allclose(g[0].data, 1.0, atol=1e-12)
    np.testing.assert_allclose(g[1].data, 0.0, atol=1e-12)
    np.testing.assert_allclose(g[2].data, 0.0, atol=1e-12)
    c = gradient_fd(ScalarGrid.from_function(n, L, lambda x, y, z: np.full(np.broadcast(x, y, z).shape, 3.7)))
    assert all(np.all(comp.data == 0.0) for comp in c)


def test_gradient_fd_quadratic_second_order():
    errs = []
    for n in (16, 32):
        u = ScalarGrid.from_function(n, 1.0, lambda x, y, z: x * x + y * y + z * z)
        g = gradient_fd(u)
        x, _, _ = u.mesh()
        errs.append(np.max(np.abs(g[0].data - 2 * np.broadcast_to(x, (n, n, n)))[2:-2, 2:-2, 2:-2]))
    # central differences are exact on quadratics
    assert max(errs) < 1e-12


def test_gradient_fd_gaussian_order():
    errs = []
    for n in (16, 32):
        _, phi = oracles.gradient_field(n, 2.0)
        grad, _ = oracles.gradient_field(n, 2.0)
        d = gradient_fd(phi)[0].data - grad[0].data
        errs.append(np.max(np.abs(d)))
    assert errs[1] < errs[0] / 3.0


def test_grid_dump_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    s = ScalarGrid(6, 1.25, rng.standard_normal((6, 6, 6)))
    v = VectorGrid.from_array(6, 1.25, rng.standard_normal((3, 6, 6, 6)))
    write_grid(tmp_path / "s.grid", s)
    write_grid(tmp_path / "v.grid", v)
    s2, v2 = read_grid(tmp_path / "s.grid"), read_grid(tmp_path / "v.grid")
    assert np.array_equal(s.data, s2.data) and s2.half_width == 1.25
    assert isinstance(v2, VectorGrid)
    assert np.array_equal(v.array, v2.array)
    head = (tmp_path / "v.grid").read_bytes().split(b"\n", 1)[0]
    assert head == b"SCALARGRID n=6 L=1.25 layout=x-fastest encoding=f64le component=1"


def test_dump_is_x_fastest(tmp_path):
    data = np.zeros((4, 4, 4))
    data[1, 0, 0] = 1.0
    write_grid(tmp_path / "g.grid", ScalarGrid(4, 1.0, data))
    payload = (tmp_path / "g.grid").read_bytes().split(b"\n", 1)[1]
    assert np.frombuffer(payload, "<f8")[1] == 1.0


def test_grid_dump_truncated(tmp_path):
    write_grid(tmp_path / "g.grid", ScalarGrid.zeros(4, 1.0))
    raw = (tmp_path / "g.grid").read_bytes()
    (tmp_path / "bad.grid").write_bytes(raw[:-8])
    with pytest.raises(GridFormatError):
        read_grid(tmp_path / "bad.grid")


def test_profile_round_trip_and_validation(tmp_path):
    p = RadialProfile([0.1, 0.5, 2.0], [3.0, 2.0, 0.0])
    write_profile(tmp_path / "p.csv", p)
    q = read_profile(tmp_path / "p.csv")
    assert np.array_equal(p.radii, q.radii) and np.array_equal(p.values, q.values)
    assert p(0.3) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        RadialProfile([0.5, 0.5], [1.0, 1.0])
    with pytest.raises(ValueError):
        RadialProfile([0.0, 1.0], [1.0, 1.0])
