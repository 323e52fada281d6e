"""2D penalised incompressible Navier-Stokes with a masked Fourier projection.

One explicit Euler step:

1. ``ut = u + dt * (-(u - u0).grad(u) + mu lap(u) + f - chi (u - u0 - gt) / eta)``
2. ``lap(p) = (div ut) (1 - chi) / dt`` with the zero mode dropped
3. ``u = ut - dt grad(p)`` with a spectral gradient

Momentum-equation derivatives are second-order finite differences; the
transforms are used only for the pressure. ``u0`` is the frame velocity
(zero unless a moving body is simulated in its own frame).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .extension import ExtensionConfig, Extender, boundary_average
from .geometry import Circle, mask_chi, phi_on_grid
from .grid import (PeriodicGrid, ScalarField, VectorField2D, poisson_solve_array,
                   spectral_divergence_array, spectral_gradient_array)
from .heat import SolverDiverged
from .results import ResultTable, loglog_slope

SAFETY = 0.9


def dt_bound(grid: PeriodicGrid, mu: float, eta: float, umax: float = 0.0,
             safety: float = SAFETY) -> float:
    """``safety * min(0.25 h^2 / mu, 1.2 eta, 2 / (8 mu / h^2 + 1 / eta), 0.5 h / umax, 2 mu / umax^2)``.

    The third term keeps the stiffest solid mode, which feels diffusion and
    penalty together, inside the forward Euler interval ``dt |lambda| <= 2``.
    The last term is the low-wavenumber limit of forward Euler with centred
    advection. Terms with a zero denominator are skipped.
    """
    h = grid.h
    bounds = [1.2 * eta]
    if mu > 0:
        bounds.append(0.25 * h * h / mu)
    bounds.append(2.0 / (8.0 * mu / (h * h) + 1.0 / eta))
    if umax > 0:
        bounds.append(0.5 * h / umax)
        if mu > 0:
            bounds.append(2.0 * mu / umax ** 2)
    return safety * min(bounds)


@dataclass(eq=False)
class NSConfig:
    grid: PeriodicGrid
    mu: float
    eta: float
    dt: float
    geometry: object = None
    extension: ExtensionConfig = field(default_factory=lambda: ExtensionConfig(k=1))
    frame_velocity: tuple | None = None
    forcing: Callable | None = None
    boundary: Callable | None = None
    umax: float = 0.0

    def __post_init__(self):
        if self.grid.dim != 2:
            raise ValueError("the Navier-Stokes solver is 2D only")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.geometry is not None and self.extension.k < 1:
            raise ValueError("the velocity target must match at least one derivative (k >= 1)")
        bound = dt_bound(self.grid, self.mu, self.eta, self.umax)
        if not 0 < self.dt <= bound * (1.0 + 1e-12):
            raise ValueError(f"dt={self.dt} outside (0, {bound}]")
        if self.geometry is not None:
            self.chi = mask_chi(self.geometry, self.grid).values
            self.extender = Extender(self.geometry, self.grid, self.extension)
        else:
            self.chi = np.zeros(self.grid.shape)
            self.extender = None
        self.X, self.Y = self.grid.coords()

    @property
    def u0(self):
        return (0.0, 0.0) if self.frame_velocity is None else tuple(self.frame_velocity)

    def target(self, ux, uy, t):
        """Penalty target ``u0 + gt`` for both components."""
        if self.extender is None:
            z = np.zeros_like(ux)
            return z, z
        ext = self.extender
        if self.boundary is None:
            gx = gy = 0.0
            Gx = Gy = 0.0
        else:
            gx, gy = self.boundary(*ext.footpoints(), t)
            if ext.cfg.G == "auto":
                Gx, Gy = boundary_average(lambda a, b: np.stack(self.boundary(a, b, t)),
                                          self.geometry)
            else:
                Gx, Gy = np.broadcast_to(np.asarray(ext.cfg.G, dtype=float), (2,))
        u0x, u0y = self.u0
        return (u0x + ext(ux, gx, float(Gx)), u0y + ext(uy, gy, float(Gy)))


@dataclass
class NSState:
    u: VectorField2D
    p: ScalarField
    t: float = 0.0

    def __post_init__(self):
        if abs(float(np.mean(self.p.values))) > 1e-12 * max(1.0, float(np.max(np.abs(self.p.values)))):
            raise ValueError("pressure must have zero mean")

    @classmethod
    def from_arrays(cls, grid, ux, uy, p=None, t=0.0):
        p = np.zeros(grid.shape) if p is None else p
        return cls(VectorField2D(ScalarField(grid, ux), ScalarField(grid, uy)),
                   ScalarField(grid, p), t)

    def arrays(self):
        return self.u.x_component.values, self.u.y_component.values


def momentum_rhs_arrays(ux, uy, t, cfg: NSConfig):
    h = cfg.grid.h
    u0x, u0y = cfg.u0
    ax, ay = kernels.advect_2d(ux, uy, ux - u0x, uy - u0y, h)
    fx = -ax
    fy = -ay
    if cfg.mu:
        fx = fx + cfg.mu * kernels.laplacian_2d(ux, h, 2)
        fy = fy + cfg.mu * kernels.laplacian_2d(uy, h, 2)
    if cfg.forcing is not None:
        sx, sy = cfg.forcing(cfg.X, cfg.Y, t)
        fx = fx + sx
        fy = fy + sy
    if cfg.extender is not None:
        tx, ty = cfg.target(ux, uy, t)
        fx = fx - cfg.chi * (ux - tx) / cfg.eta
        fy = fy - cfg.chi * (uy - ty) / cfg.eta
    return fx, fy


def momentum_rhs(state: NSState, cfg: NSConfig) -> VectorField2D:
    fx, fy = momentum_rhs_arrays(*state.arrays(), state.t, cfg)
    g = cfg.grid
    return VectorField2D(ScalarField(g, fx), ScalarField(g, fy))


def project(ux, uy, chi, dt, grid: PeriodicGrid):
    """Masked pressure step; returns ``(ux, uy, p)`` with ``mean(p) = 0``."""
    rhs = spectral_divergence_array(ux, uy, grid) * (1.0 - chi) / dt
    p = poisson_solve_array(rhs, grid)
    px, py = spectral_gradient_array(p, grid)
    return ux - dt * px, uy - dt * py, p


def ns_step_arrays(ux, uy, t, cfg: NSConfig, step=None):
    fx, fy = momentum_rhs_arrays(ux, uy, t, cfg)
    tx = ux + cfg.dt * fx
    ty = uy + cfg.dt * fy
    nx, ny, p = project(tx, ty, cfg.chi, cfg.dt, cfg.grid)
    for comp in (nx, ny):
        if not np.all(np.isfinite(comp)):
            bad = int(np.flatnonzero(~np.isfinite(comp.ravel()))[0])
            raise SolverDiverged(f"non-finite velocity at flat index {bad} (step {step})",
                                 step, bad)
    return nx, ny, p


def ns_step(state: NSState, cfg: NSConfig, step=None) -> NSState:
    nx, ny, p = ns_step_arrays(*state.arrays(), state.t, cfg, step)
    return NSState.from_arrays(cfg.grid, nx, ny, p, state.t + cfg.dt)


def vorticity(u: VectorField2D) -> ScalarField:
    """``dv/dx - du/dy`` by centred second-order differences."""
    g = u.grid
    ux, uy = u.x_component.values, u.y_component.values
    inv = 0.5 / g.h
    w = (np.roll(uy, -1, 0) - np.roll(uy, 1, 0)) * inv - (np.roll(ux, -1, 1) - np.roll(ux, 1, 1)) * inv
    return ScalarField(g, w)


def fd_divergence_array(ux, uy, h):
    inv = 0.5 / h
    return (np.roll(ux, -1, 0) - np.roll(ux, 1, 0)) * inv + (np.roll(uy, -1, 1) - np.roll(uy, 1, 1)) * inv


# ---- manufactured solution ---------------------------------------------------

MMS_CIRCLE = (math.pi, math.pi, 0.5)


def mms_velocity(x, y, t):
    c = math.cos(t)
    return np.cos(x) * np.sin(y) * c, -np.sin(x) * np.cos(y) * c


def mms_pressure(x, y, t):
    return np.sin(2.0 * x) * np.cos(y) * math.cos(t)


def mms_forcing(mu):
    """``f = du_e/dt + u_e.grad(u_e) + grad(p_e) - mu lap(u_e)``."""
    def f(x, y, t):
        st, ct = math.sin(t), math.cos(t)
        cx, sx, cy, sy = np.cos(x), np.sin(x), np.cos(y), np.sin(y)
        fx = (-cx * sy * st - ct * ct * sx * cx + 2.0 * np.cos(2.0 * x) * cy * ct
              + 2.0 * mu * cx * sy * ct)
        fy = (sx * cy * st - ct * ct * sy * cy - np.sin(2.0 * x) * sy * ct
              - 2.0 * mu * sx * cy * ct)
        return fx, fy
    return f


MMS_DT_FACTOR = 0.05
MMS_ETA_FACTOR = 5.0
MMS_L = 0.45


def mms_config(N, mu=1.0, dt_factor=MMS_DT_FACTOR, eta_factor=MMS_ETA_FACTOR, T=0.25,
               extension=None, geometry=True) -> NSConfig:
    """``dt = dt_factor h^2``, ``eta = eta_factor dt``, matched slope, ``G`` averaged."""
    grid = PeriodicGrid(2, N)
    h = grid.h
    steps = int(math.ceil(T / (dt_factor * h * h)))
    dt = T / steps
    cfg = extension or ExtensionConfig(k=1, l=MMS_L, G="auto")
    return NSConfig(grid, mu, eta_factor * dt, dt, Circle(*MMS_CIRCLE) if geometry else None,
                    cfg, None, mms_forcing(mu), mms_velocity, umax=1.0)


def mms_errors(cfg: NSConfig, ux, uy, p, t):
    fluid = cfg.chi < 0.5
    dv = cfg.grid.cell_volume
    ex, ey = mms_velocity(cfg.X, cfg.Y, t)
    err_u = float(max(np.max(np.abs(ux - ex)[fluid]), np.max(np.abs(uy - ey)[fluid])))
    dp = (p - mms_pressure(cfg.X, cfg.Y, t))[fluid]
    dp = dp - dp.mean()
    div = fd_divergence_array(ux, uy, cfg.grid.h)[fluid]
    return {
        "err_u_inf": err_u,
        "err_p_inf": float(np.max(np.abs(dp))),
        "err_p_l2": float(np.sqrt(np.sum(dp ** 2) * dv)),
        "div_l2": float(np.sqrt(np.sum(div ** 2) * dv)),
        "div_inf": float(np.max(np.abs(div))),
    }


MMS_COLUMNS = ["N", "err_u_inf", "err_p_inf", "err_p_l2", "div_l2", "div_inf"]


def run_ns_mms(N_list, T=0.25, mu=1.0, dt_factor=MMS_DT_FACTOR, eta_factor=MMS_ETA_FACTOR,
               **kw) -> ResultTable:
    """Velocity, pressure and divergence errors over the physical domain at ``T``."""
    N_list = list(N_list)
    if N_list != sorted(N_list):
        raise ValueError("N_list must be ascending")
    table = ResultTable(list(MMS_COLUMNS),
                        provenance={"experiment": "ns-mms", "T": T, "mu": mu,
                                    "dt_factor": dt_factor, "eta_factor": eta_factor})
    for N in N_list:
        cfg = mms_config(N, mu, dt_factor, eta_factor, T, **kw)
        ux, uy = mms_velocity(cfg.X, cfg.Y, 0.0)
        p = np.zeros(cfg.grid.shape)
        steps = int(round(T / cfg.dt))
        for n in range(steps):
            ux, uy, p = ns_step_arrays(ux, uy, n * cfg.dt, cfg, n)
        e = mms_errors(cfg, ux, uy, p, steps * cfg.dt)
        table.add(int(N), *(e[c] for c in MMS_COLUMNS[1:]))
    return table


def fitted_orders(table: ResultTable, x="N") -> dict:
    """Least-squares orders ``-d log(err) / d log(N)`` for every error column."""
    n = table.column(x)
    return {c: -loglog_slope(n, table.column(c)) for c in table.columns if c != x}


# ---- cylinder ------------------------------------------------------------------

@dataclass
class ForceSeries:
    T: np.ndarray
    C_D: np.ndarray
    C_L: np.ndarray

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=float)
        if np.any(np.diff(self.T) <= 0):
            raise ValueError("sample times must be strictly increasing")

    def table(self, provenance=None) -> ResultTable:
        t = ResultTable(["T", "C_D", "C_L"], provenance=provenance or {})
        for row in zip(self.T, self.C_D, self.C_L):
            t.add(*(float(v) for v in row))
        return t


def moving_average(a, width: int):
    """Centred moving mean; the window shrinks symmetrically at the ends."""
    a = np.asarray(a, dtype=float)
    if width <= 1:
        return a.copy()
    half = width // 2
    out = np.empty_like(a)
    n = len(a)
    for i in range(n):
        r = min(half, i, n - 1 - i)
        out[i] = a[i - r:i + r + 1].mean()
    return out


def body_force(times, momenta, R=1.0, u0=10.0, filter_width: int = 5) -> ForceSeries:
    """Drag and lift from the fluid-momentum history.

    ``momenta`` has shape ``(n, 2)`` holding ``M(t) = int u (1 - chi) dV``. The
    force on the body is ``F_b = -dM/dt``. Drag is reported as the component
    opposing the motion, ``C_D = -F_b.e_x / (R u0^2)``, so that a body moving
    along ``+x`` has positive drag; ``C_L = F_b.e_y / (R u0^2)``.
    """
    t = np.asarray(times, dtype=float)
    M = np.asarray(momenta, dtype=float)
    if len(t) < 2:
        raise ValueError("need at least 2 momentum samples")
    F = -np.stack([np.gradient(M[:, 0], t, edge_order=1),
                   np.gradient(M[:, 1], t, edge_order=1)], axis=1)
    scale = R * u0 * u0
    cd = moving_average(-F[:, 0] / scale, filter_width)
    cl = moving_average(F[:, 1] / scale, filter_width)
    return ForceSeries(u0 * t / R, cd, cl)


def cylinder_config(RE, N, eta, l, R=1.0, u0=10.0, k=1, dt=None, one_sided=False) -> NSConfig:
    grid = PeriodicGrid(2, N)
    mu = 2.0 * R * u0 / RE
    geom = Circle(math.pi, math.pi, R)
    umax = 2.0 * u0
    if dt is None:
        dt = dt_bound(grid, mu, eta, umax)
    return NSConfig(grid, mu, eta, dt, geom, ExtensionConfig(k=k, l=l, G=0.0, one_sided=one_sided),
                    (u0, 0.0), None, None, umax=umax)


def run_cylinder(RE, N, eta, l, T_end, R=1.0, u0=10.0, sample_dT=0.05, snapshots=(),
                 filter_width: int = 5, k=1, progress=None, one_sided=False):
    """Impulsively started cylinder in its own frame.

    Returns ``(ForceSeries, {T: vorticity})``. Time steps are shortened so
    that samples every ``sample_dT`` (in ``T = u0 t / R`` units) land on steps.
    """
    base = cylinder_config(RE, N, eta, l, R, u0, k, one_sided=one_sided)
    dt_sample = sample_dT * R / u0
    per = int(math.ceil(dt_sample / base.dt - 1e-9))
    cfg = cylinder_config(RE, N, eta, l, R, u0, k, dt=dt_sample / per, one_sided=one_sided)
    n_samples = int(round(T_end / sample_dT))
    snap_steps = {int(round(Ts / sample_dT)) * per: Ts for Ts in snapshots}
    fluid = 1.0 - cfg.chi
    dv = cfg.grid.cell_volume
    ux = np.zeros(cfg.grid.shape)
    uy = np.zeros(cfg.grid.shape)
    times = [0.0]
    mom = [(0.0, 0.0)]
    snaps = {}
    if 0 in snap_steps:
        snaps[snap_steps[0]] = vorticity(NSState.from_arrays(cfg.grid, ux, uy).u)
    total = n_samples * per
    for n in range(total):
        ux, uy, _ = ns_step_arrays(ux, uy, n * cfg.dt, cfg, n)
        if (n + 1) % per == 0:
            t = (n + 1) * cfg.dt
            times.append(t)
            mom.append((float(np.sum(ux * fluid) * dv), float(np.sum(uy * fluid) * dv)))
            if progress is not None:
                progress(u0 * t / R)
        if (n + 1) in snap_steps:
            snaps[snap_steps[n + 1]] = vorticity(NSState.from_arrays(cfg.grid, ux, uy).u)
    return body_force(times, mom, R, u0, filter_width), snaps


def interior_fluid_mask(cfg: NSConfig, margin_cells: float = 3.0) -> np.ndarray:
    """Fluid points farther than ``margin_cells * h`` from the boundary."""
    phi = phi_on_grid(cfg.geometry, cfg.grid)
    return phi < -margin_cells * cfg.grid.h


# (N, eta, l) per Reynolds number; the desk resolutions keep l near 2h, which
# is the largest decay length for which the impulsive start stays bounded here
CYLINDER_PRESETS = {
    40.0: {"desk": (256, 2e-4, 0.05), "full": (512, 2e-4, 0.45)},
    550.0: {"desk": (384, 1e-3, 0.03), "full": (768, 1e-3, 0.05)},
}


def cylinder_preset(RE, full=False) -> dict:
    """Default ``{"n", "eta", "l"}`` for a Reynolds number (nearest preset)."""
    key = min(CYLINDER_PRESETS, key=lambda r: abs(math.log(float(RE) / r)))
    n, eta, l = CYLINDER_PRESETS[key]["full" if full else "desk"]
    return {"n": n, "eta": eta, "l": l}


def local_maxima(T, values, T_min=1.0):
    """Indices of interior local maxima with ``T >= T_min``."""
    v = np.asarray(values, dtype=float)
    T = np.asarray(T, dtype=float)
    idx = [i for i in range(1, len(v) - 1)
           if v[i] >= v[i - 1] and v[i] > v[i + 1] and T[i] >= T_min]
    return idx


def drag_summary(series: ForceSeries, window=(1.0, 5.0)) -> dict:
    """Final drag, monotonicity over ``window`` and the dominant drag peak after ``T = 1``."""
    T, cd = series.T, series.C_D
    sel = (T >= window[0] - 1e-9) & (T <= window[1] + 1e-9)
    d = np.diff(cd[sel])
    peaks = local_maxima(T, cd, window[0])
    best = max(peaks, key=lambda i: cd[i]) if peaks else None
    return {
        "final_T": float(T[-1]),
        "final_C_D": float(cd[-1]),
        "monotone_decreasing": bool(d.size > 0 and np.all(d <= 0.0)),
        "max_increase": float(d.max()) if d.size else float("nan"),
        "peak_T": float(T[best]) if best is not None else float("nan"),
        "peak_C_D": float(cd[best]) if best is not None else float("nan"),
        "n_peaks": len(peaks),
    }
