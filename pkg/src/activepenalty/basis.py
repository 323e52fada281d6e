"""Derivative-matching basis functions ``B_j`` on ``[0, inf)``.

Each ``B_j`` is a weighted sum of stretched copies ``g(a x)``, ``a = 1, 2, 3``
of a single profile ``g``. ``B_j`` has unit ``j``-th derivative at zero and
vanishing ``i``-th derivatives for the other ``i <= k_max``.

Families
--------
compact
    ``g = bump_h``, which is identically zero for ``x >= 1``.
exponential
    ``g(x) = exp(-x)``.
compact1
    Two-term compact family matching only value and slope (``k_max = 1``).
    Its ``B_1`` has non-zero curvature at the origin, unlike the three-term
    compact ``B_1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CLAMP = 1e-12

# {family: (scales, {j: coefficients})}
TABLES = {
    "compact": (
        (1.0, 2.0, 3.0),
        {0: (3.0, -3.0, 1.0), 1: (2.5, -4.0, 1.5), 2: (-0.5, 1.0, -0.5)},
    ),
    "exponential": (
        (1.0, 2.0, 3.0),
        {0: (3.0, -3.0, 1.0), 1: (2.5, -4.0, 1.5), 2: (0.5, -1.0, 0.5)},
    ),
    "compact1": (
        (1.0, 2.0),
        {0: (2.0, -1.0), 1: (1.0, -1.0)},
    ),
}


def k_max_of(family: str) -> int:
    try:
        return max(TABLES[family][1])
    except KeyError:
        raise ValueError(f"unknown basis family {family!r}") from None


@dataclass(frozen=True)
class BumpBasis:
    family: str = "compact"
    k_max: int = 2

    def __post_init__(self):
        top = k_max_of(self.family)
        if not 0 <= self.k_max <= top:
            raise ValueError(f"k_max for family {self.family!r} must be in [0, {top}]")

    def __call__(self, j, x):
        if j > self.k_max:
            raise ValueError(f"j={j} exceeds k_max={self.k_max}")
        return basis_B(j, x, self.family)

    def derivative(self, j, x, order):
        if j > self.k_max:
            raise ValueError(f"j={j} exceeds k_max={self.k_max}")
        return basis_derivative(j, x, self.family, order)


def bump_h(x):
    """``exp(1 - 1/(1-x))`` on ``[0, 1)``, zero elsewhere (and within 1e-12 of 1)."""
    x = np.asarray(x, dtype=np.float64)
    inside = (x >= 0.0) & (1.0 - x > CLAMP)
    safe = np.where(inside, x, 0.0)
    out = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe)), 0.0)
    return out[()] if out.ndim == 0 else out


def bump_h_derivative(x, order):
    """Analytic derivatives of :func:`bump_h` up to order 3."""
    x = np.asarray(x, dtype=np.float64)
    inside = (x >= 0.0) & (1.0 - x > CLAMP)
    r = 1.0 / (1.0 - np.where(inside, x, 0.0))
    hv = np.where(inside, np.exp(1.0 - r), 0.0)
    # q = 1 - r, q' = -r^2, q'' = -2 r^3, q''' = -6 r^4
    q1, q2, q3 = -r ** 2, -2.0 * r ** 3, -6.0 * r ** 4
    if order == 0:
        poly = 1.0
    elif order == 1:
        poly = q1
    elif order == 2:
        poly = q1 ** 2 + q2
    elif order == 3:
        poly = q1 ** 3 + 3.0 * q1 * q2 + q3
    else:
        raise ValueError("order must be <= 3")
    out = np.where(inside, hv * poly, 0.0)
    return out[()] if out.ndim == 0 else out


def _profile(family, x, order):
    if family.startswith("compact"):
        return bump_h_derivative(x, order)
    x = np.asarray(x, dtype=np.float64)
    pos = x >= 0.0
    out = np.where(pos, (-1.0) ** order * np.exp(-np.where(pos, x, 0.0)), 0.0)
    return out[()] if out.ndim == 0 else out


def _table(j, family):
    try:
        scales, coefs = TABLES[family]
    except KeyError:
        raise ValueError(f"unknown basis family {family!r}") from None
    if j not in coefs:
        raise ValueError(f"j={j} out of range for family {family!r} (k_max={max(coefs)})")
    return scales, coefs[j]


def basis_B(j: int, x, family: str = "compact"):
    """Evaluate ``B_j(x)``; zero for ``x < 0``."""
    return basis_derivative(j, x, family, 0)


def basis_derivative(j: int, x, family: str = "compact", order: int = 1):
    """Analytic ``order``-th derivative of ``B_j``."""
    scales, coefs = _table(j, family)
    x = np.asarray(x, dtype=np.float64)
    total = np.zeros_like(x)
    for a, c in zip(scales, coefs):
        total = total + c * a ** order * _profile(family, a * x, order)
    return total[()] if total.ndim == 0 else total


def _one_sided(fn, step, order):
    """Second-order forward differences at 0 using only samples with x >= 0."""
    f = [float(fn(m * step)) for m in range(4)]
    if order == 0:
        return f[0]
    if order == 1:
        return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * step)
    if order == 2:
        return (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / step ** 2
    raise ValueError("order must be <= 2")


def verify_kronecker(family: str = "compact", k_max: int | None = None,
                     fd_step: float = 1e-4, analytic: bool | None = None) -> np.ndarray:
    """Residual matrix ``|d^i B_j(0) - delta_ij|`` for ``0 <= i, j <= k_max``.

    Derivatives come from one-sided finite differences unless ``analytic``
    (default: analytic for the exponential family only).
    """
    if k_max is None:
        k_max = k_max_of(family)
    if not 0.0 < fd_step <= 1e-2:
        raise ValueError("fd_step must lie in (0, 1e-2]")
    if analytic is None:
        analytic = family == "exponential"
    res = np.zeros((k_max + 1, k_max + 1))
    for j in range(k_max + 1):
        for i in range(k_max + 1):
            if analytic:
                d = float(basis_derivative(j, 0.0, family, i))
            else:
                d = _one_sided(lambda t, j=j: basis_B(j, t, family), fd_step, i)
            res[i, j] = abs(d - (1.0 if i == j else 0.0))
    return res
