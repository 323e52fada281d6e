"""Analytic level-set obstacles: an interval in 1D and a circle in 2D.

The signed distance ``phi`` is positive inside the solid. Normals point from
the fluid into the solid (``n = grad phi``), and ``s`` measures distance from
the boundary along ``n``. Grid points with ``phi == 0`` belong to the solid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, ScalarField


class SingularProjection(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    a: float
    b: float
    dim: int = 1

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("interval needs b > a")

    @property
    def l_max(self) -> float:
        return 0.5 * (self.b - self.a)

    def phi(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.minimum(x - self.a, self.b - x)

    def project(self, x):
        """Vectorised ``(xi, s, n)`` to the nearest endpoint."""
        x = np.asarray(x, dtype=np.float64)
        left = (x - self.a) <= (self.b - x)
        xi = np.where(left, self.a, self.b)
        n = np.where(left, 1.0, -1.0)
        s = np.abs(x - xi)
        return xi, s, n

    def normal(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return np.where(np.abs(xi - self.a) <= np.abs(xi - self.b), 1.0, -1.0)

    def boundary_points(self):
        return np.array([self.a, self.b]), np.array([1.0, -1.0])


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float
    dim: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def center(self):
        return np.array([self.cx, self.cy])

    @property
    def l_max(self) -> float:
        return 0.9 * self.radius

    def phi(self, x, y):
        return self.radius - np.hypot(np.asarray(x) - self.cx, np.asarray(y) - self.cy)

    def project(self, x, y):
        """Vectorised ``(xi_x, xi_y, s, n_x, n_y)``."""
        dx = np.asarray(x, dtype=np.float64) - self.cx
        dy = np.asarray(y, dtype=np.float64) - self.cy
        rho = np.hypot(dx, dy)
        if np.any(rho == 0.0):
            raise SingularProjection("singular projection: point at circle center")
        ex, ey = dx / rho, dy / rho
        return (self.cx + self.radius * ex, self.cy + self.radius * ey,
                self.radius - rho, -ex, -ey)

    def normal(self, xi_x, xi_y):
        return (-(np.asarray(xi_x) - self.cx) / self.radius,
                -(np.asarray(xi_y) - self.cy) / self.radius)

    def boundary_points(self, m: int = 256):
        """``m`` equally spaced boundary points and their normals."""
        th = 2.0 * math.pi * np.arange(m) / m
        bx = self.cx + self.radius * np.cos(th)
        by = self.cy + self.radius * np.sin(th)
        return (bx, by), (-np.cos(th), -np.sin(th))


def phi_on_grid(geom, grid: PeriodicGrid) -> np.ndarray:
    if grid.dim != geom.dim:
        raise ValueError(f"{type(geom).__name__} is {geom.dim}D but grid is {grid.dim}D")
    if grid.dim == 1:
        return geom.phi(grid.coords())
    X, Y = grid.coords()
    return geom.phi(X, Y)


def mask_chi(geom, grid: PeriodicGrid) -> ScalarField:
    """Sharp solid indicator: 1 where ``phi >= 0``, else 0."""
    return ScalarField(grid, (phi_on_grid(geom, grid) >= 0.0).astype(np.float64))


def project_to_boundary(geom, point):
    """Footpoint ``xi`` and normal distance ``s`` for one solid point."""
    if geom.dim == 1:
        x = float(np.asarray(point).reshape(-1)[0])
        if geom.phi(x) < 0:
            raise ValueError(f"point {x} is not inside the solid")
        xi, s, _ = geom.project(x)
        s = float(s)
        if s > geom.l_max:
            raise ValueError(f"s={s} outside the tube (l_max={geom.l_max})")
        return float(xi), s
    x, y = (float(c) for c in point)
    if geom.phi(x, y) < 0:
        raise ValueError(f"point {(x, y)} is not inside the solid")
    xx, xy, s, _, _ = geom.project(x, y)
    s = float(s)
    if s > geom.l_max:
        raise ValueError(f"s={s} outside the tube (l_max={geom.l_max})")
    return np.array([float(xx), float(xy)]), s


def normal_at(geom, xi, tol: float = 1e-8):
    """Unit normal at a boundary point, pointing into the solid."""
    if geom.dim == 1:
        xi = float(np.asarray(xi).reshape(-1)[0])
        if abs(geom.phi(xi)) > tol:
            raise ValueError(f"{xi} is not on the boundary")
        return np.array([float(geom.normal(xi))])
    x, y = (float(c) for c in xi)
    if abs(geom.phi(x, y)) > tol:
        raise ValueError(f"{(x, y)} is not on the boundary")
    nx, ny = geom.normal(x, y)
    return np.array([float(nx), float(ny)])


def make_geometry(shape: str, **params):
    """Build a geometry from a shape name as written in run configs."""
    if shape == "interval":
        return Interval(float(params["a"]), float(params["b"]))
    if shape == "circle":
        return Circle(float(params["cx"]), float(params["cy"]), float(params["radius"]))
    raise ValueError(f"unknown shape {shape!r}")
