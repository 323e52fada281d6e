"""Explicit-Euler stability of the 1D active penalty operator.

Setup on ``[0, 2 pi)``: fluid ``(0, pi)``, solid ``[pi, 2 pi]`` with
``g = 0`` and one matched derivative, giving the rank-two-perturbed penalty
matrix ``B = -(I_chi - v1 d1^T - v2 d2^T) / eta``. All operators are
applied matrix-free; dense assembly exists only as a small-``N`` oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import basis_B
from .results import ResultTable


def rule_dt(N: int, eta: float) -> float:
    """``min(0.5 h^2, 1.2 eta)``."""
    h = 2.0 * math.pi / N
    return min(0.5 * h * h, 1.2 * eta)


@dataclass(frozen=True, eq=False)
class PenaltyOperator:
    N: int
    eta: float
    chi: np.ndarray = field(init=False, repr=False)
    v1: np.ndarray = field(init=False, repr=False)
    v2: np.ndarray = field(init=False, repr=False)
    i_pi: int = field(init=False)

    def __post_init__(self):
        N = self.N
        if N < 8 or N % 2:
            raise ValueError("N must be even and >= 8")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        h = self.h
        x = h * np.arange(N)
        i_pi = N // 2
        chi = np.zeros(N)
        chi[i_pi:] = 1.0
        chi[0] = 1.0  # x = 0 is the point 2 pi of the closed solid
        v1 = chi * basis_B(1, x - math.pi, "compact")
        v2 = -chi * basis_B(1, np.where(np.arange(N) == 0, 0.0, 2.0 * math.pi - x), "compact")
        for name, val in (("chi", chi), ("v1", v1), ("v2", v2), ("i_pi", i_pi)):
            object.__setattr__(self, name, val)

    @property
    def h(self) -> float:
        return 2.0 * math.pi / self.N

    def d1(self, u) -> float:
        """Centred ``u_x(pi)``."""
        i = self.i_pi
        return (u[i + 1] - u[i - 1]) / (2.0 * self.h)

    def d2(self, u) -> float:
        """Centred ``u_x(2 pi)``."""
        return (u[1] - u[self.N - 1]) / (2.0 * self.h)

    def d_vectors(self):
        d1 = np.zeros(self.N)
        d2 = np.zeros(self.N)
        inv = 1.0 / (2.0 * self.h)
        d1[self.i_pi + 1], d1[self.i_pi - 1] = inv, -inv
        d2[1], d2[self.N - 1] = inv, -inv
        return d1, d2

    def dense(self) -> np.ndarray:
        d1, d2 = self.d_vectors()
        return -(np.diag(self.chi) - np.outer(self.v1, d1) - np.outer(self.v2, d2)) / self.eta


def apply_penalty(op: PenaltyOperator, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (op.N,):
        raise ValueError(f"vector has shape {u.shape}, operator needs ({op.N},)")
    return -(op.chi * u - op.v1 * op.d1(u) - op.v2 * op.d2(u)) / op.eta


def apply_laplacian(u, h) -> np.ndarray:
    return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / (h * h)


@dataclass(frozen=True)
class UpdateOperator:
    """``u -> [I + dt (L + B)] u`` with the 3-point Laplacian ``L``."""

    penalty: PenaltyOperator
    dt: float

    def __call__(self, u):
        return u + self.dt * (apply_laplacian(u, self.penalty.h) + apply_penalty(self.penalty, u))

    def dense(self) -> np.ndarray:
        N, h = self.penalty.N, self.penalty.h
        L = (np.diag(np.full(N - 1, 1.0), 1) + np.diag(np.full(N - 1, 1.0), -1)
             - 2.0 * np.eye(N))
        L[0, -1] = L[-1, 0] = 1.0
        return np.eye(N) + self.dt * (L / h ** 2 + self.penalty.dense())


def analytic_eigen_check(op: PenaltyOperator):
    """``(lambda1, lambda2, residual1, residual2, d1.v1, d2.v2)``."""
    p1 = op.d1(op.v1)
    p2 = op.d2(op.v2)
    lam1 = -(1.0 - p1) / op.eta
    lam2 = -(1.0 - p2) / op.eta
    r1 = float(np.max(np.abs(apply_penalty(op, op.v1) - lam1 * op.v1)))
    r2 = float(np.max(np.abs(apply_penalty(op, op.v2) - lam2 * op.v2)))
    return lam1, lam2, r1, r2, p1, p2


def growth_rate(update, N: int, steps: int, n_vectors: int = 5, seed: int = 0) -> float:
    """Largest asymptotic per-step amplification over random unit starts.

    Iterates are renormalised every step. The rate is the geometric mean of
    the per-step factors over the second half of the run, which discards the
    transient growth of the non-normal operator. Non-finite iterates count
    as infinite growth.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    burn = steps // 2
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_vectors):
            u = rng.standard_normal(N)
            u /= np.linalg.norm(u)
            logsum = 0.0
            for n in range(steps):
                u = update(u)
                nrm = np.linalg.norm(u)
                if not np.isfinite(nrm) or nrm == 0.0:
                    if nrm == 0.0:
                        return 0.0 if worst == 0.0 else worst
                    return math.inf
                if n >= burn:
                    logsum += math.log(nrm)
                u /= nrm
            worst = max(worst, math.exp(logsum / (steps - burn)))
    return worst


STABLE_TOL = 1e-6


def boundedness_scan(N_list, eta_list, dt_rule=rule_dt, steps=None, n_vectors: int = 5,
                     seed: int = 0) -> ResultTable:
    """Rows ``(N, eta, dt, rho_est, stable)``.

    ``dt_rule`` is a callable ``(N, eta) -> dt`` or a fixed number. ``steps``
    defaults to ``10 N``.
    """
    table = ResultTable(["N", "eta", "dt", "rho_est", "stable"],
                        provenance={"experiment": "stability", "seed": seed})
    for N in N_list:
        nsteps = steps if steps is not None else 10 * N
        if nsteps < 10 * N:
            raise ValueError("steps must be >= 10 N")
        for eta in eta_list:
            dt = dt_rule(N, eta) if callable(dt_rule) else float(dt_rule)
            upd = UpdateOperator(PenaltyOperator(N, eta), dt)
            rho = growth_rate(upd, N, nsteps, n_vectors, seed)
            table.add(int(N), float(eta), float(dt), rho, bool(rho <= 1.0 + STABLE_TOL))
    return table


def critical_dt(N: int, eta: float, lo: float = 0.0, hi: float | None = None,
                rel_tol: float = 1e-3, steps: int | None = None, seed: int = 0) -> float:
    """Bisect for the smallest unstable time step."""
    steps = steps or 10 * N
    op = PenaltyOperator(N, eta)
    hi = hi if hi is not None else 4.0 * eta + op.h ** 2

    def unstable(dt):
        return growth_rate(UpdateOperator(op, dt), N, steps, 2, seed) > 1.0 + STABLE_TOL

    if not unstable(hi):
        raise ValueError("upper bracket is stable")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            hi = mid
        else:
            lo = mid
    return hi
