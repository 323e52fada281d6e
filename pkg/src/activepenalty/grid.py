"""Periodic grids, sampled fields, stencils and the Fourier Poisson inverse."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import FIRST, SECOND, _check_acc


class GridMismatch(ValueError):
    pass


class EmptyRegion(ValueError):
    pass


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic grid with ``n`` points per axis on ``[0, length)``."""

    dim: int
    n: int
    length: float = 2.0 * math.pi

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8:
            raise ValueError(f"n must be >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axis(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    def coords(self):
        """``x`` in 1D, ``(X, Y)`` with ``indexing='ij'`` in 2D."""
        x = self.axis()
        if self.dim == 1:
            return x
        return np.meshgrid(x, x, indexing="ij")

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers matching ``np.fft.fftfreq`` ordering."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.h)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise GridMismatch(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other, self.grid))

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _vals(other, self.grid))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField2D:
    x_component: ScalarField
    y_component: ScalarField

    def __post_init__(self):
        if self.x_component.grid != self.y_component.grid:
            raise GridMismatch("vector components live on different grids")
        if self.x_component.grid.dim != 2:
            raise ValueError("VectorField2D needs a 2D grid")

    @property
    def grid(self) -> PeriodicGrid:
        return self.x_component.grid


def _vals(other, grid):
    if isinstance(other, ScalarField):
        if other.grid != grid:
            raise GridMismatch("fields live on different grids")
        return other.values
    return other


def _as_field(f, grid=None) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if grid is None:
        raise TypeError("raw arrays need an explicit grid")
    return ScalarField(grid, f)


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------

def fd_derivative(f: ScalarField, axis: int, order: int = 1, accuracy: int = 2) -> ScalarField:
    """Centred periodic derivative of ``order`` 1 or 2 along ``axis``."""
    grid = f.grid
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} invalid for a {grid.dim}D grid")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    _check_acc(accuracy)
    coef = (FIRST if order == 1 else SECOND)[accuracy]
    out = np.zeros_like(f.values)
    for o in range(-2, 3):
        c = coef[o + 2]
        if c != 0.0:
            out += c * np.roll(f.values, -o, axis=axis)
    return ScalarField(grid, out / grid.h ** order)


def laplacian(f: ScalarField, accuracy: int = 2) -> ScalarField:
    _check_acc(accuracy)
    grid = f.grid
    if grid.dim == 1:
        vals = kernels.laplacian_1d(f.values, grid.h, accuracy)
    else:
        vals = kernels.laplacian_2d(f.values, grid.h, accuracy)
    return ScalarField(grid, vals)


def divergence_fd(u: VectorField2D) -> ScalarField:
    """Second-order centred divergence."""
    return (fd_derivative(u.x_component, 0, 1, 2)
            + fd_derivative(u.y_component, 1, 1, 2))


# --------------------------------------------------------------------------
# Fourier operations
# --------------------------------------------------------------------------

def _k_vectors(grid: PeriodicGrid, odd: bool):
    k = grid.wavenumbers()
    if odd and grid.n % 2 == 0:
        k = k.copy()
        k[grid.n // 2] = 0.0
    if grid.dim == 1:
        return (k,)
    return (k[:, None], k[None, :])


def _ksq(grid: PeriodicGrid) -> np.ndarray:
    ks = _k_vectors(grid, odd=False)
    return sum(kk ** 2 for kk in ks)


def poisson_solve_array(rhs: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    rhat = np.fft.fftn(rhs)
    ksq = _ksq(grid) * np.ones(grid.shape)
    ksq.flat[0] = 1.0
    phat = -rhat / ksq
    phat.flat[0] = 0.0
    return np.fft.ifftn(phat).real


def spectral_poisson_solve(rhs: ScalarField) -> ScalarField:
    """Solve ``lap(p) = rhs`` with the zero mode of ``rhs`` discarded; ``mean(p) = 0``."""
    return ScalarField(rhs.grid, poisson_solve_array(rhs.values, rhs.grid))


def spectral_gradient_array(p: np.ndarray, grid: PeriodicGrid):
    phat = np.fft.fftn(p)
    return tuple(np.fft.ifftn(1j * kk * phat).real for kk in _k_vectors(grid, odd=True))


def spectral_divergence_array(ux: np.ndarray, uy: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    kx, ky = _k_vectors(grid, odd=True)
    dhat = 1j * kx * np.fft.fftn(ux) + 1j * ky * np.fft.fftn(uy)
    return np.fft.ifftn(dhat).real


def spectral_gradient(p: ScalarField):
    """Gradient by ``ifft(i k p_hat)``; the Nyquist mode of odd derivatives is zeroed."""
    comps = spectral_gradient_array(p.values, p.grid)
    if p.grid.dim == 1:
        return ScalarField(p.grid, comps[0])
    return VectorField2D(ScalarField(p.grid, comps[0]), ScalarField(p.grid, comps[1]))


# --------------------------------------------------------------------------
# quadrature and norms
# --------------------------------------------------------------------------

def integrate(f: ScalarField, weight: ScalarField | None = None) -> float:
    vals = f.values
    if weight is not None:
        vals = vals * _vals(weight, f.grid)
    return float(np.sum(vals) * f.grid.cell_volume)


def masked_norm(f: ScalarField, mask: ScalarField, kind: str = "Linf") -> float:
    m = _vals(mask, f.grid) > 0.5
    if not np.any(m):
        raise EmptyRegion("empty region: mask selects no grid points")
    vals = f.values[m]
    if kind == "Linf":
        return float(np.max(np.abs(vals)))
    if kind == "L2":
        return float(np.sqrt(np.sum(vals ** 2) * f.grid.cell_volume))
    raise ValueError(f"unknown norm kind {kind!r}")


# --------------------------------------------------------------------------
# field dump format
# --------------------------------------------------------------------------

def dump_field(path, f: ScalarField) -> None:
    """Write ``# scalar nx=<n> ny=<n> h=<h>`` then one value per line, row-major."""
    grid = f.grid
    ny = grid.n if grid.dim == 2 else 1
    lines = [f"# scalar nx={grid.n} ny={ny} h={grid.h!r}"]
    lines.extend(repr(float(v)) for v in f.values.ravel(order="C"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path, length: float | None = None) -> ScalarField:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 2 or header[0] != "#" or header[1] != "scalar":
            raise ValueError(f"{path}: not a scalar field dump")
        meta = dict(tok.split("=", 1) for tok in header[2:])
        nx, ny, h = int(meta["nx"]), int(meta["ny"]), float(meta["h"])
        vals = np.array([float(line) for line in fh if line.strip()])
    dim = 1 if ny == 1 else 2
    if vals.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {vals.size}")
    grid = PeriodicGrid(dim, nx, length if length is not None else nx * h)
    return ScalarField(grid, vals.reshape(grid.shape))
