import math

import numpy as np
import pytest

from activepenalty.geometry import (Circle, Interval, SingularProjection, make_geometry, mask_chi,
                                    normal_at, phi_on_grid, project_to_boundary)
from activepenalty.grid import PeriodicGrid

PI = math.pi
C = Circle(PI, PI, 0.5)
I = Interval(PI - 0.7, PI + 0.7)


def test_circle_mask_points():
    assert C.phi(PI + 0.6, PI) < 0
    assert C.phi(PI, PI) > 0
    g = PeriodicGrid(2, 64)
    chi = mask_chi(C, g).values
    i = 32  # x = pi
    assert chi[i, i] == 1.0
    assert set(np.unique(chi)) <= {0.0, 1.0}


def test_interval_mask():
    g = PeriodicGrid(1, 64)
    chi = mask_chi(I, g).values
    assert chi[32] == 1.0  # x = pi
    assert chi[0] == 0.0


def test_mask_area_first_order():
    for N in (64, 128, 256):
        g = PeriodicGrid(2, N)
        area = mask_chi(C, g).values.sum() * g.h ** 2
        assert abs(area - PI / 4) <= 2 * PI * 0.5 * g.h


def test_boundary_points_count_as_solid():
    g = PeriodicGrid(1, 16)
    # pi - 0.7 is not a grid point, so use an interval whose ends are nodes
    geom = Interval(4 * g.h, 8 * g.h)
    chi = mask_chi(geom, g).values
    assert chi[4] == 1.0 and chi[8] == 1.0 and chi[3] == 0.0


def test_mask_idempotent():
    g = PeriodicGrid(2, 32)
    assert np.array_equal(mask_chi(C, g).values, mask_chi(C, g).values)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        phi_on_grid(C, PeriodicGrid(1, 32))


def test_projection_examples():
    xi, s = project_to_boundary(C, (PI + 0.3, PI))
    assert np.allclose(xi, [PI + 0.5, PI]) and s == pytest.approx(0.2)
    xi, s = project_to_boundary(C, (PI + 0.5, PI))
    assert np.allclose(xi, [PI + 0.5, PI]) and s == pytest.approx(0.0, abs=1e-15)
    xi, s = project_to_boundary(I, PI - 0.5)
    assert xi == pytest.approx(PI - 0.7) and s == pytest.approx(0.2)


def test_projection_errors():
    with pytest.raises(SingularProjection, match="singular projection"):
        project_to_boundary(Circle(PI, PI, 0.5), (PI, PI))
    with pytest.raises(ValueError):
        project_to_boundary(C, (PI + 0.6, PI))  # fluid point


def test_reconstruction_and_signed_distance():
    g = PeriodicGrid(2, 128)
    X, Y = g.coords()
    phi = C.phi(X, Y)
    sel = (phi >= 0) & (phi <= C.l_max)
    xx, xy, s, nx, ny = C.project(X[sel], Y[sel])
    assert np.max(np.abs(xx + s * nx - X[sel])) <= 1e-12
    assert np.max(np.abs(xy + s * ny - Y[sel])) <= 1e-12
    assert np.max(np.abs(s - phi[sel])) <= 1e-12


def test_normals():
    assert np.allclose(normal_at(C, (PI + 0.5, PI)), [-1.0, 0.0])
    rng = np.random.default_rng(1)
    th = rng.uniform(0, 2 * PI, 100)
    for t in th:
        xi = (PI + 0.5 * math.cos(t), PI + 0.5 * math.sin(t))
        n = normal_at(C, xi)
        tangent = np.array([-math.sin(t), math.cos(t)])
        assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-14)
        assert abs(n @ tangent) <= 1e-14
    with pytest.raises(ValueError):
        normal_at(C, (PI, PI))


def test_interval_normals_point_into_solid():
    assert normal_at(I, PI - 0.7)[0] == 1.0
    assert normal_at(I, PI + 0.7)[0] == -1.0


def test_tube_width():
    assert C.l_max == pytest.approx(0.45)
    assert I.l_max == pytest.approx(0.7)


def test_make_geometry():
    assert make_geometry("circle", cx=1, cy=2, radius=0.5) == Circle(1.0, 2.0, 0.5)
    assert make_geometry("interval", a=0, b=1) == Interval(0.0, 1.0)
    with pytest.raises(ValueError):
        make_geometry("square")
