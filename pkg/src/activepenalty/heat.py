"""Penalised forced heat equation with an active penalty target.

    u_t = lap(u) + f - chi (u - gt(u)) / eta

integrated with Heun's method; ``gt`` is rebuilt from the current iterate at
both stages. Manufactured solutions supply ``f`` and the boundary data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .extension import ExtensionConfig, Extender
from .geometry import Circle, Interval, mask_chi
from .grid import PeriodicGrid
from .results import ResultTable, loglog_slope


class SolverDiverged(RuntimeError):
    def __init__(self, message, step=None, index=None):
        super().__init__(message)
        self.step = step
        self.index = index


# ---- manufactured solutions ------------------------------------------------

def heat1d_exact(x, t):
    return np.exp(np.sin(x + t))


def heat1d_forcing(x, t):
    a = x + t
    return np.exp(np.sin(a)) * (np.cos(a) + np.sin(a) - np.cos(a) ** 2)


def heat2d_exact(x, y, t):
    return (np.exp(np.sin(x)) + np.cos(y)) * np.cos(t)


def heat2d_forcing(x, y, t):
    """``d/dt u_e - lap(u_e)`` for :func:`heat2d_exact`."""
    es = np.exp(np.sin(x))
    lap = es * (np.cos(x) ** 2 - np.sin(x)) - np.cos(y)
    return -(es + np.cos(y)) * np.sin(t) - lap * np.cos(t)


# ---- run description ---------------------------------------------------------

@dataclass(eq=False)
class HeatRun:
    grid: PeriodicGrid
    geometry: object
    extension: ExtensionConfig
    eta: float
    dt: float
    T: float
    forcing: Callable
    exact: Callable
    accuracy: int | None = None
    restrict_forcing: bool = False
    chi: np.ndarray = field(init=False, repr=False)
    extender: Extender | None = field(init=False, repr=False)

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        h = self.grid.h
        bound = min(0.5 * h * h, 1.2 * self.eta)
        if self.dt > bound * (1.0 + 1e-12):
            raise ValueError(f"dt={self.dt} violates dt <= min(0.5 h^2, 1.2 eta) = {bound}")
        if self.accuracy is None:
            self.accuracy = 4 if self.grid.dim == 1 else 2
        self.chi = mask_chi(self.geometry, self.grid).values if self.geometry is not None \
            else np.zeros(self.grid.shape)
        self.extender = (Extender(self.geometry, self.grid, self.extension)
                         if self.geometry is not None else None)
        self._coords = self.grid.coords()
        if self.grid.dim == 1:
            self._coords = (self._coords,)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def exact_field(self, t):
        return self.exact(*self._coords, t)

    def forcing_field(self, t):
        f = self.forcing(*self._coords, t)
        if self.restrict_forcing:
            f = f * (1.0 - self.chi)
        return f

    def gtilde(self, u, t):
        if self.extender is None:
            return np.zeros_like(u)
        g = self.exact(*self.extender.footpoints(), t)
        return self.extender(u, g, float(self.extension.G))


def heat_rhs(u, t, run: HeatRun) -> np.ndarray:
    """``lap(u) + f - chi (u - gt(u)) / eta`` for a raw array ``u``."""
    lap = (kernels.laplacian_1d if run.grid.dim == 1 else kernels.laplacian_2d)(
        u, run.grid.h, run.accuracy)
    out = lap + run.forcing_field(t)
    if run.extender is not None:
        out -= run.chi * (u - run.gtilde(u, t)) / run.eta
    return out


def step_improved_euler(u, t, dt, run: HeatRun, step=None) -> np.ndarray:
    k1 = heat_rhs(u, t, run)
    ustar = u + dt * k1
    k2 = heat_rhs(ustar, t + dt, run)
    out = u + 0.5 * dt * (k1 + k2)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out.ravel()))[0])
        raise SolverDiverged(f"non-finite value at flat index {bad} (step {step})", step, bad)
    return out


def integrate_heat(run: HeatRun, u0=None):
    """March from ``u_e(., 0)`` (or ``u0``) to ``T``; returns the final array."""
    u = run.exact_field(0.0) if u0 is None else np.array(u0, dtype=float)
    t = 0.0
    for n in range(run.steps):
        u = step_improved_euler(u, t, run.dt, run, step=n)
        t = (n + 1) * run.dt
    return u


def fluid_error(run: HeatRun, u) -> float:
    err = np.abs(u - run.exact_field(run.T))
    return float(np.max(err[run.chi < 0.5]))


# ---- experiments ---------------------------------------------------------------

HEAT1D_SOLID = (math.pi - 0.7, math.pi + 0.7)


def heat1d_run(N, k, T=1.0, dt_factor=0.2, eta_factor=5.0, l=0.6, **kw) -> HeatRun:
    grid = PeriodicGrid(1, N)
    h = grid.h
    steps = int(math.ceil(T / (dt_factor * h * h)))
    dt = T / steps
    cfg = ExtensionConfig(k=k, l=l, G=0.0, **kw.pop("extension", {}))
    return HeatRun(grid, Interval(*HEAT1D_SOLID), cfg, eta_factor * dt, dt, T,
                   heat1d_forcing, heat1d_exact, **kw)


def run_heat1d_convergence(k_match: int, N_list, T=1.0, dt_factor=0.2, eta_factor=5.0,
                           l=0.6, **kw) -> ResultTable:
    """Rows ``(N, error, local_order, fitted_order)`` in the fluid max norm."""
    N_list = list(N_list)
    if N_list != sorted(N_list):
        raise ValueError("N_list must be ascending")
    errors = []
    for N in N_list:
        run = heat1d_run(N, k_match, T, dt_factor, eta_factor, l, **kw)
        errors.append(fluid_error(run, integrate_heat(run)))
    hs = [2.0 * math.pi / N for N in N_list]
    fitted = loglog_slope(hs, errors) if len(N_list) > 1 else float("nan")
    table = ResultTable(["N", "error", "local_order", "fitted_order"],
                        provenance={"experiment": "heat1d", "k": k_match, "T": T,
                                    "dt_factor": dt_factor, "eta_factor": eta_factor, "l": l})
    for i, (N, e) in enumerate(zip(N_list, errors)):
        local = math.log2(errors[i - 1] / e) / math.log2(N / N_list[i - 1]) if i else float("nan")
        table.add(int(N), e, local, fitted)
    return table


HEAT2D_CIRCLE = (math.pi, math.pi, 0.5)


LAPLACIAN_RADIUS = {2: 4.0, 4: 16.0 / 3.0}  # max |symbol| * h^2 per dimension


def heat2d_dt(N, eta, accuracy=2, T=0.1, fraction=0.5):
    """Half of Heun's real-axis limit for ``lap - 1/eta``, landed on ``T``.

    The stable set of the improved Euler method on the negative real axis is
    ``dt |lambda| <= 2``; the stiffest mode in the solid combines the
    Laplacian radius and the penalty rate ``1/eta``.
    """
    h = 2.0 * math.pi / N
    lam = 2.0 * LAPLACIAN_RADIUS[accuracy] / (h * h) + 1.0 / eta
    dt = fraction * 2.0 / lam
    steps = int(math.ceil(T / dt))
    return T / steps


def heat2d_run(N, k, eta, T=0.1, accuracy=2, fraction=0.5, l=None, **kw) -> HeatRun:
    grid = PeriodicGrid(2, N)
    geom = Circle(*HEAT2D_CIRCLE)
    ext = dict(kw.pop("extension", {}))
    ext.setdefault("accuracy", accuracy)
    cfg = ExtensionConfig(k=k, l=l, G=0.0, **ext)
    dt = heat2d_dt(N, eta, accuracy, T, fraction)
    return HeatRun(grid, geom, cfg, eta, dt, T, heat2d_forcing, heat2d_exact,
                   accuracy=accuracy, **kw)


def run_heat2d_eta_sweep(k_match: int, eta_list, N=256, T=0.1, accuracy=2, fraction=0.5,
                         l=None, **kw) -> ResultTable:
    """Rows ``(eta, error, slope)``; ``slope`` is the log-log fit over the sweep."""
    etas = sorted(float(e) for e in eta_list)
    errors = []
    for eta in etas:
        run = heat2d_run(N, k_match, eta, T, accuracy, fraction, l, **kw)
        errors.append(fluid_error(run, integrate_heat(run)))
    slope = loglog_slope(etas, errors) if len(etas) > 1 else float("nan")
    table = ResultTable(["eta", "error", "slope"],
                        provenance={"experiment": "heat2d", "k": k_match, "N": N, "T": T,
                                    "accuracy": accuracy, "dt_fraction": fraction})
    for e, err in zip(etas, errors):
        table.add(e, err, slope)
    return table
