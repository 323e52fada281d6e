"""Steady penalised two-point problem on ``[-1, L]``.

Solves ``u'' = H(x) (u - gt) / eta`` with ``u(-1) = 1`` and ``u(L) = 0``; the
unpenalised solution on ``[-1, 0]`` is ``v = -x``. The target ``gt`` is built
from the solution's own boundary derivatives at the origin, so the discrete
problem is solved self-consistently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .basis import basis_B
from .results import ResultTable, loglog_slope

# variant -> (basis family, coefficient sources for B1, B2)
VARIANTS = {
    "matched-k0": ("compact", ()),
    "matched-k1": ("compact1", ("slope",)),
    "matched-k1-compact": ("compact", ("slope",)),
    "matched-k2-minus": ("compact", ("slope", "curv-")),
    "matched-k2-plus-exponential": ("exponential", ("slope", "curv+")),
    "matched-k2-minus-exponential": ("exponential", ("slope", "curv-")),
}


class NotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelProblem:
    eta: float
    variant: str = "matched-k0"
    L: float = 2.0
    resolution: float = 0.1
    heaviside_at_zero: float = 0.5

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {sorted(VARIANTS)}")
        if self.L < 2.0:
            raise ValueError("L must be >= 2")
        if not 0.0 < self.resolution <= 0.1:
            raise ValueError("grid must resolve the layer: resolution (h / sqrt(eta)) <= 0.1")

    @property
    def cells_per_unit(self) -> int:
        return int(math.ceil(1.0 / (self.resolution * math.sqrt(self.eta))))


@dataclass
class ModelSolution:
    problem: ModelProblem
    x: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    gtilde: np.ndarray = field(repr=False)
    theta: np.ndarray
    iterations: int
    residual: float

    @property
    def error(self) -> float:
        """``max |u - v|`` over the nodes of ``[-1, 0]``."""
        left = self.x <= 0.0
        return float(np.max(np.abs(self.u[left] + self.x[left])))


def _target_columns(x, variant):
    family, sources = VARIANTS[variant]
    cols = [basis_B(j + 1, x, family) for j in range(len(sources))]
    return cols, sources


def _extract(u, h, i0, eta, gt0, sources):
    """Boundary derivatives of ``u`` at the origin node ``i0``."""
    out = []
    for src in sources:
        if src == "slope":
            out.append((3.0 * u[i0] - 4.0 * u[i0 - 1] + u[i0 - 2]) / (2.0 * h))
        elif src == "curv-":
            out.append((2.0 * u[i0] - 5.0 * u[i0 - 1] + 4.0 * u[i0 - 2] - u[i0 - 3]) / h ** 2)
        elif src == "curv+":
            # right limit read off the equation itself
            out.append((u[i0] - gt0) / eta)
    return np.array(out)


def solve_model_bvp(p: ModelProblem, tol: float = 1e-12, max_iter: int = 200) -> ModelSolution:
    """Second-order FD solve with a fixed-point loop on the boundary derivatives.

    The map from boundary derivatives to the re-extracted ones is affine, so
    the loop is seeded with the exact affine fixed point (from three linear
    solves sharing one factorisation) and then iterated until the change
    falls below ``tol`` (or the round-off floor of the one-sided stencils).
    """
    m = p.cells_per_unit
    h = 1.0 / m
    nodes = int(round((1.0 + p.L) * m)) + 1
    x = -1.0 + h * np.arange(nodes)
    i0 = m
    x[i0] = 0.0
    H = np.where(x > 0.0, 1.0, 0.0)
    H[i0] = p.heaviside_at_zero
    cols, sources = _target_columns(x, p.variant)

    # interior unknowns 1..nodes-2;  (u_{j-1} - 2u_j + u_{j+1})/h^2 - H u/eta = -H gt/eta
    inner = slice(1, nodes - 1)
    ni = nodes - 2
    ab = np.zeros((3, ni))
    ab[0, 1:] = 1.0 / h ** 2
    ab[2, :-1] = 1.0 / h ** 2
    ab[1, :] = -2.0 / h ** 2 - H[inner] / p.eta
    rhs = np.zeros((ni, 1 + len(cols)))
    rhs[0, 0] -= 1.0 / h ** 2  # u(-1) = 1
    for c, col in enumerate(cols):
        rhs[:, 1 + c] = -H[inner] * col[inner] / p.eta
    sol = solve_banded((1, 1), ab, rhs)
    basis_u = np.zeros((nodes, sol.shape[1]))
    basis_u[0, 0] = 1.0
    basis_u[inner] = sol

    def field_of(theta):
        u = basis_u[:, 0] + basis_u[:, 1:] @ theta
        gt = sum((t * col for t, col in zip(theta, cols)), np.zeros(nodes))
        return u, gt

    def F(theta):
        u, gt = field_of(theta)
        return _extract(u, h, i0, p.eta, gt[i0], sources)

    npar = len(cols)
    iterations = 0
    theta = np.zeros(npar)
    if npar:
        b = F(np.zeros(npar))
        M = np.column_stack([F(e) - b for e in np.eye(npar)])
        theta = np.linalg.solve(np.eye(npar) - M, b)
        floor = np.array([tol if s == "slope" else
                          max(tol, 64.0 * np.finfo(float).eps / h ** 2) if s == "curv-" else
                          max(tol, 64.0 * np.finfo(float).eps / p.eta) for s in sources])
        for iterations in range(1, max_iter + 1):
            new = F(theta)
            step = np.abs(new - theta)
            theta = new
            if np.all(step <= floor * np.maximum(1.0, np.abs(theta))):
                break
        else:
            raise NotConverged(f"fixed point not converged in {max_iter} iterations")

    u, gt = field_of(theta)
    resid = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h ** 2 - H[inner] * (u[1:-1] - gt[1:-1]) / p.eta
    scale = 4.0 / h ** 2 + 1.0 / p.eta
    residual = float(np.max(np.abs(resid)) / scale)
    return ModelSolution(p, x, u, gt, theta, iterations, residual)


def model_convergence_sweep(variant: str, eta_list, **problem_kw) -> ResultTable:
    """Rows ``(eta, error, slope)``; ``slope`` is the log-log fit over the whole list."""
    etas = sorted(float(e) for e in eta_list)
    errors = [solve_model_bvp(ModelProblem(e, variant, **problem_kw)).error for e in etas]
    slope = loglog_slope(etas, errors) if len(etas) > 1 else float("nan")
    table = ResultTable(["eta", "error", "slope"],
                        provenance={"experiment": "model1d", "variant": variant})
    for e, err in zip(etas, errors):
        table.add(e, err, slope)
    return table
