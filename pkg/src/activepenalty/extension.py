"""Active-penalty target fields built from boundary data and normal derivatives.

For a solid grid point at normal coordinates ``(xi, s)`` with ``s <= l``::

    gt = (g(xi) - G) B0(s/l) + l u_n(xi) B1(s/l) + l^2 u_nn(xi) B2(s/l) + G

and ``gt = G`` deeper inside the solid. ``u_n`` and ``u_nn`` come from
finite-difference derivatives at grid points, interpolated to ``xi`` with the
3-point (1D) or 3x3 biquadratic (2D) Lagrange stencil nearest ``xi``.

Everything that depends only on geometry and grid (tube points, footpoints,
stencil nodes and weights, basis samples) is computed once and cached.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .basis import basis_B, k_max_of
from .geometry import Circle, Interval, phi_on_grid
from .grid import PeriodicGrid, ScalarField, VectorField2D


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class ExtensionConfig:
    """``k`` matched normal derivatives, decay length ``l``, far value ``G``.

    ``G="auto"`` uses the boundary average of the boundary data.
    ``accuracy=None`` picks 4th-order stencils in 1D and 2nd-order in 2D.
    """

    k: int = 1
    l: float | None = None
    G: object = 0.0
    family: str = "compact"
    one_sided: bool = False
    accuracy: int | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.k > k_max_of(self.family):
            raise ValueError(f"k <= {k_max_of(self.family)} for family {self.family!r}")
        if self.l is not None and not self.l > 0:
            raise ValueError("l must be positive")

    def resolved(self, geom, dim: int) -> "ExtensionConfig":
        l = self.l if self.l is not None else default_l(geom)
        if l > geom.l_max + 1e-12:
            raise ValueError(f"l={l} exceeds the geometry tube width {geom.l_max}")
        acc = self.accuracy if self.accuracy is not None else (4 if dim == 1 else 2)
        return replace(self, l=l, accuracy=acc)


def default_l(geom) -> float:
    if isinstance(geom, Interval):
        return min(0.6, geom.l_max)
    if isinstance(geom, Circle):
        return 0.8 * geom.radius
    raise TypeError(f"no default decay length for {type(geom).__name__}")


@dataclass(frozen=True, eq=False)
class ExtensionStencil:
    grid: PeriodicGrid
    l: float
    tube: np.ndarray        # flat indices of solid points with s <= l
    far: np.ndarray         # flat indices of solid points with s > l
    xi: np.ndarray          # (T,) in 1D, (T, 2) in 2D
    s: np.ndarray
    normal: np.ndarray      # (T,) in 1D, (T, 2) in 2D
    nodes: tuple            # (T, 3) in 1D; ((T, 9), (T, 9)) in 2D
    weights: np.ndarray
    basis: np.ndarray       # (k_max + 1, T) samples B_j(s / l)


@dataclass(frozen=True, eq=False)
class BoundaryDerivatives:
    """Per tube point: footpoint, distance, normal and interpolated data."""

    stencil: ExtensionStencil
    k: int
    u_n: np.ndarray
    u_nn: np.ndarray
    g: np.ndarray

    @property
    def xi(self):
        return self.stencil.xi

    @property
    def s(self):
        return self.stencil.s

    @property
    def normal(self):
        return self.stencil.normal

    def with_boundary_values(self, g) -> "BoundaryDerivatives":
        return replace(self, g=np.broadcast_to(np.asarray(g, dtype=float), self.u_n.shape).copy())


def _lagrange3(t):
    return np.stack([0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)], axis=-1)


def _nearest_lower(q):
    """Nearest integer, ties toward the lower index."""
    return np.ceil(q - 0.5).astype(np.int64)


def _stencil_1d(geom: Interval, grid: PeriodicGrid, l, family, one_sided):
    h, n = grid.h, grid.n
    x = grid.axis()
    phi = phi_on_grid(geom, grid)
    tube = np.flatnonzero((phi >= 0.0) & (phi <= l))
    far = np.flatnonzero(phi > l)
    xi, s, nrm = geom.project(x[tube])
    if one_sided:
        # three fluid nodes on the far side of xi, extrapolated
        centre = np.where(nrm > 0, np.ceil(xi / h - 1e-12) - 2, np.floor(xi / h + 1e-12) + 2)
        centre = centre.astype(np.int64)
    else:
        centre = _nearest_lower(xi / h)
    t = xi / h - centre
    nodes = (centre[:, None] + np.arange(-1, 2)[None, :]) % n
    w = _lagrange3(t)
    return tube, far, xi, s, nrm, nodes, w


def _stencil_2d(geom: Circle, grid: PeriodicGrid, l, family, one_sided):
    h, n = grid.h, grid.n
    X, Y = grid.coords()
    phi = phi_on_grid(geom, grid)
    tube = np.flatnonzero(((phi >= 0.0) & (phi <= l)).ravel())
    far = np.flatnonzero((phi > l).ravel())
    xx, xy, s, nx, ny = geom.project(X.ravel()[tube], Y.ravel()[tube])
    if one_sided:
        ci, cj = _fluid_block_centres(geom, grid, xx, xy, nx, ny)
    else:
        ci, cj = _nearest_lower(xx / h), _nearest_lower(xy / h)
    tx, ty = xx / h - ci, xy / h - cj
    off = np.arange(-1, 2)
    ii = (ci[:, None, None] + off[None, :, None]) + 0 * off[None, None, :]
    jj = (cj[:, None, None] + off[None, None, :]) + 0 * off[None, :, None]
    wx, wy = _lagrange3(tx), _lagrange3(ty)
    w = (wx[:, :, None] * wy[:, None, :]).reshape(len(tube), 9)
    ii = (ii.reshape(len(tube), 9) % n).astype(np.int64)
    jj = (jj.reshape(len(tube), 9) % n).astype(np.int64)
    xi = np.stack([xx, xy], axis=1)
    nrm = np.stack([nx, ny], axis=1)
    return tube, far, xi, s, nrm, (ii, jj), w


def _fluid_block_centres(geom, grid, xx, xy, nx, ny):
    h = grid.h
    ci = np.empty(len(xx), dtype=np.int64)
    cj = np.empty(len(xx), dtype=np.int64)
    off = np.arange(-1, 2) * h
    for p in range(len(xx)):
        for push in np.arange(1.5, 4.01, 0.25):
            i = int(np.ceil((xx[p] - push * h * nx[p]) / h - 0.5))
            j = int(np.ceil((xy[p] - push * h * ny[p]) / h - 0.5))
            bx = i * h + off[:, None]
            by = j * h + off[None, :]
            if np.all(geom.phi(bx, by) < 0.0):
                break
        else:
            raise GridTooCoarse("no all-fluid 3x3 block near the boundary")
        ci[p], cj[p] = i, j
    return ci, cj


@lru_cache(maxsize=64)
def extension_stencil(geom, grid: PeriodicGrid, l: float, family: str = "compact",
                      one_sided: bool = False) -> ExtensionStencil:
    if grid.dim != geom.dim:
        raise ValueError("geometry and grid dimensions differ")
    if isinstance(geom, Circle):
        if geom.radius <= 2.0 * grid.h:
            raise GridTooCoarse(f"radius {geom.radius} must exceed 2h = {2 * grid.h}")
        if 2.0 * geom.radius + 8.0 * grid.h > 0.5 * grid.length:
            raise GridTooCoarse("stencil would cross more than half the domain")
        build = _stencil_2d
    else:
        if (geom.b - geom.a) + 8.0 * grid.h > 0.5 * grid.length * 1.999:
            raise GridTooCoarse("stencil would cross more than half the domain")
        if geom.b - geom.a <= 4.0 * grid.h:
            raise GridTooCoarse("interval must span more than 4 grid cells")
        build = _stencil_1d
    tube, far, xi, s, nrm, nodes, w = build(geom, grid, l, family, one_sided)
    kmax = k_max_of(family)
    basis = np.stack([basis_B(j, s / l, family) for j in range(kmax + 1)])
    for arr in (xi, s, nrm, w, basis):
        arr.setflags(write=False)
    return ExtensionStencil(grid, l, tube, far, xi, s, nrm, nodes, w, basis)


def _normal_derivs(values, st: ExtensionStencil, k, acc):
    if len(st.tube) == 0:
        z = np.zeros(0)
        return z, z
    if st.grid.dim == 1:
        return kernels.normal_derivs_1d(values, st.nodes, st.weights, st.normal, st.grid.h, k, acc)
    ii, jj = st.nodes
    return kernels.normal_derivs_2d(values, ii, jj, st.weights, st.normal[:, 0],
                                    st.normal[:, 1], st.grid.h, k, acc)


def boundary_normal_derivatives(f: ScalarField, geom, k: int, l: float | None = None,
                                accuracy: int | None = None, one_sided: bool = False,
                                family: str = "compact") -> BoundaryDerivatives:
    """Interpolate ``u_n = n . grad u`` (and ``u_nn = n^T H n`` for ``k = 2``) to footpoints."""
    if k > 2:
        raise ValueError("k <= 2")
    cfg = ExtensionConfig(k=k, l=l, family=family, one_sided=one_sided,
                          accuracy=accuracy).resolved(geom, f.grid.dim)
    st = extension_stencil(geom, f.grid, cfg.l, family, one_sided)
    un, unn = _normal_derivs(f.values, st, k, cfg.accuracy)
    return BoundaryDerivatives(st, k, un, unn, np.zeros_like(un))


def assemble(st: ExtensionStencil, k: int, g, G: float, u_n, u_nn) -> np.ndarray:
    """Full-grid target field from footpoint data (flat index order)."""
    l = st.l
    out = np.zeros(st.grid.n ** st.grid.dim)
    val = (g - G) * st.basis[0] + G
    if k >= 1:
        val = val + l * u_n * st.basis[1]
    if k >= 2:
        val = val + l * l * u_nn * st.basis[2]
    out[st.tube] = val
    out[st.far] = G
    return out.reshape(st.grid.shape)


def build_extension_scalar(bd: BoundaryDerivatives, cfg: ExtensionConfig,
                           grid: PeriodicGrid | None = None) -> ScalarField:
    """Assemble the target field; zero (and unused) outside the solid."""
    st = bd.stencil
    if grid is not None and grid != st.grid:
        raise ValueError("grid does not match the boundary data")
    if cfg.k > bd.k:
        raise ValueError(f"cfg.k={cfg.k} exceeds the boundary derivative depth {bd.k}")
    if cfg.l is not None and not math.isclose(cfg.l, st.l):
        raise ValueError("cfg.l differs from the decay length used for the boundary data")
    if isinstance(cfg.G, str):
        raise ValueError("G='auto' needs boundary data as a callable; resolve it first")
    return ScalarField(st.grid, assemble(st, cfg.k, bd.g, float(cfg.G), bd.u_n, bd.u_nn))


def feedback_matrix(geom, grid: PeriodicGrid, cfg: ExtensionConfig):
    """Linear map from solid values to the target, restricted to feedback nodes.

    With ``g = G = 0`` the target is linear in ``u``: ``gt = M u``. Only solid
    nodes read by some interpolation stencil can feed back, so the nonzero
    spectrum of ``M`` on the solid equals that of this restriction. Returns
    ``(M_SS, flat indices of S)``.
    """
    ext = Extender(geom, grid, cfg)
    st = ext.stencil
    chi = phi_on_grid(geom, grid).ravel() >= 0.0
    n = grid.n
    if grid.dim == 1:
        reach = st.nodes.ravel()[:, None] + np.arange(-2, 3)[None, :]
        read = np.unique(reach % n)
    else:
        ii, jj = st.nodes
        off = np.arange(-2, 3)
        ri = (ii.ravel()[:, None, None] + off[None, :, None]) % n
        rj = (jj.ravel()[:, None, None] + off[None, None, :]) % n
        read = np.unique((ri * n + rj).ravel())
    S = read[chi[read]]
    M = np.zeros((len(S), len(S)))
    e = np.zeros(grid.n ** grid.dim)
    for c, j in enumerate(S):
        e[j] = 1.0
        M[:, c] = ext(e.reshape(grid.shape), 0.0, 0.0).ravel()[S]
        e[j] = 0.0
    return M, S


def feedback_radius(geom, grid: PeriodicGrid, cfg: ExtensionConfig) -> float:
    """Spectral radius of :func:`feedback_matrix`.

    The penalty term ``-(u - gt(u)) / eta`` restricted to the solid has
    eigenvalues ``-(1 - mu) / eta`` for eigenvalues ``mu`` of ``M``; a radius
    at or above one means the penalty no longer damps every solid mode.
    """
    M, _ = feedback_matrix(geom, grid, cfg)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def boundary_average(g, geom, m: int = 512):
    """``A^-1 * integral of g over the boundary``; ``g`` is a callable of footpoints."""
    if not callable(g):
        return np.asarray(g, dtype=float)
    if geom.dim == 1:
        pts, _ = geom.boundary_points()
        return np.mean(np.asarray(g(pts), dtype=float), axis=-1)
    (bx, by), _ = geom.boundary_points(m)
    vals = np.asarray(g(bx, by), dtype=float)
    return np.mean(vals, axis=-1)


class Extender:
    """Rebuilds the target field from a raw array; the time-loop entry point."""

    def __init__(self, geom, grid: PeriodicGrid, cfg: ExtensionConfig):
        self.geom = geom
        self.grid = grid
        self.cfg = cfg.resolved(geom, grid.dim)
        self.stencil = extension_stencil(geom, grid, self.cfg.l, self.cfg.family,
                                         self.cfg.one_sided)
        if self.cfg.k > 0 and self.stencil.basis.shape[0] <= self.cfg.k:
            raise ValueError("basis family too small for k")

    def footpoints(self):
        xi = self.stencil.xi
        return (xi,) if self.grid.dim == 1 else (xi[:, 0], xi[:, 1])

    def __call__(self, values: np.ndarray, g=0.0, G: float = 0.0) -> np.ndarray:
        k = self.cfg.k
        if k >= 1:
            un, unn = _normal_derivs(values, self.stencil, k, self.cfg.accuracy)
        else:
            un = unn = None
        return assemble(self.stencil, k, g, G, un, unn)


def build_extension_vector(u: VectorField2D, g, geom, cfg: ExtensionConfig) -> VectorField2D:
    """Per-component extension.

    ``g`` is a callable ``g(x, y) -> (gx, gy)`` evaluated at footpoints, or a
    constant pair. ``cfg.G="auto"`` takes each component's boundary average.
    """
    grid = u.grid
    ext = Extender(geom, grid, cfg)
    xs, ys = ext.footpoints()
    if callable(g):
        gx, gy = g(xs, ys)
        if cfg.G == "auto":
            Gx, Gy = boundary_average(lambda a, b: np.stack(g(a, b)), geom)
    else:
        gx, gy = (np.broadcast_to(np.asarray(c, dtype=float), xs.shape) for c in g)
        if cfg.G == "auto":
            Gx, Gy = float(np.asarray(g[0])), float(np.asarray(g[1]))
    if cfg.G != "auto":
        G = np.broadcast_to(np.asarray(cfg.G, dtype=float), (2,))
        Gx, Gy = float(G[0]), float(G[1])
    ox = ext(u.x_component.values, gx, float(Gx))
    oy = ext(u.y_component.values, gy, float(Gy))
    return VectorField2D(ScalarField(grid, ox), ScalarField(grid, oy))
