"""Expectation bands shipped as data.

Each band names a quantity produced by an experiment and the interval it
must fall in. ``--check`` on the command line and the acceptance tests read
the same table, so a band is edited in one place only.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Band:
    name: str
    lo: float
    hi: float
    note: str = ""

    def contains(self, value) -> bool:
        try:
            v = float(value)
        except (TypeError, ValueError):
            return False
        return self.lo <= v <= self.hi

    def describe(self, value) -> str:
        verdict = "PASS" if self.contains(value) else "FAIL"
        return f"{verdict} {self.name} = {float(value):.6g} (band [{self.lo:g}, {self.hi:g}])"


def _pm(name, centre, tol, note=""):
    return Band(name, centre - tol, centre + tol, note)


BANDS = {
    # basis
    "kronecker_compact": Band("kronecker residual (compact)", 0.0, 1e-3),
    "kronecker_exponential": Band("kronecker residual (exponential)", 0.0, 1e-6),
    # steady model problem
    "model1d:matched-k0": _pm("model slope k=0", 0.5, 0.1),
    "model1d:matched-k1": _pm("model slope k=1", 1.0, 0.1),
    "model1d:matched-k2-minus": _pm("model slope k=2 (minus)", 1.5, 0.1),
    "model1d:plus_constant": Band("error / eta, exponential plus", 1.5, 2.2),
    "model1d:minus_constant": Band("error / eta^1.5, exponential minus", 8.0, 14.0),
    # stability
    "stability:d2v2": _pm("d2 . v2 at N=512", 0.5, 0.05),
    # heat
    "heat1d:k0": _pm("heat 1D order k=0", 1.0, 0.3),
    "heat1d:k1": _pm("heat 1D order k=1", 2.0, 0.3),
    "heat1d:k2": _pm("heat 1D order k=2", 3.0, 0.4),
    "heat2d:k0": _pm("heat 2D eta slope k=0", 0.5, 0.15),
    "heat2d:k1": _pm("heat 2D eta slope k=1", 1.0, 0.2),
    "heat2d:k2": _pm("heat 2D eta slope k=2", 1.5, 0.25),
    # Navier-Stokes
    "ns-mms:err_u_inf": _pm("NS velocity Linf order", 2.0, 0.3),
    "ns-mms:err_p_inf": _pm("NS pressure Linf order", 1.0, 0.3),
    "ns-mms:div_l2": Band("NS divergence L2 order", 1.6, float("inf")),
    "cylinder:re40_final": Band("RE=40 final drag", 1.6, 2.2),
    "cylinder:re550_peak": _pm("RE=550 drag peak time", 3.05, 0.5),
}


def band(key: str) -> Band:
    try:
        return BANDS[key]
    except KeyError:
        raise KeyError(f"no expectation band {key!r}") from None


def check(key: str, value):
    """``(passed, message)`` for one quantity."""
    b = band(key)
    return b.contains(value), b.describe(value)
