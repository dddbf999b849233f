"""Bounded-variable LP solver and quadratic-cost linearization.

One solver serves both linear and quadratic cost curves: quadratics are
convexified into piecewise-linear segments, so the dispatch problem stays a
single LP whichever wind cost function is in play.

Two interchangeable kernels exist: a compiled Cython core
(``gridrisk.lp._core``) and a pure NumPy fallback (``gridrisk.lp._pure``).
The compiled one is picked at import when available; set
``GRIDRISK_LP_BACKEND=python`` or ``=c`` to force a choice.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _pure
from ._pure import (AT_LOWER, AT_UPPER, BASIC, FREE,  # noqa: F401
                    INFEASIBLE, OPTIMAL, STALLED, UNBOUNDED)

_STATUS_NAMES = {0: "optimal", 1: "infeasible", 2: "unbounded", 3: "stalled"}

EPS_FEAS = 1e-7
EPS_OPT = 1e-9
DEFAULT_SEGMENTS = 10


class LpError(ValueError):
    """Structurally invalid linear program (dimension/bound defects)."""


def _select_backend():
    requested = os.environ.get("GRIDRISK_LP_BACKEND", "auto").lower()
    if requested not in ("auto", "c", "python"):
        raise LpError(f"GRIDRISK_LP_BACKEND must be auto|c|python, got {requested!r}")
    if requested == "python":
        return _pure.solve_kernel, "python"
    try:
        from . import _core
        return _core.solve_kernel, "c"
    except ImportError:
        if requested == "c":
            raise LpError("compiled LP kernel requested but not built") from None
        return _pure.solve_kernel, "python"


solve_kernel, _BACKEND_NAME = _select_backend()


def backend_name() -> str:
    """Identifier of the active LP kernel ("c" or "python")."""
    return _BACKEND_NAME


def available_backends() -> dict:
    """All importable kernels, for cross-checking tests and benchmarks."""
    backends = {"python": _pure.solve_kernel}
    try:
        from . import _core
        backends["c"] = _core.solve_kernel
    except ImportError:
        pass
    return backends


@dataclass
class LinearProgram:
    """min c'x  s.t.  a_eq x = b_eq,  lower <= x <= upper."""

    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.c = np.ascontiguousarray(self.c, dtype=np.float64)
        self.a_eq = np.ascontiguousarray(self.a_eq, dtype=np.float64)
        self.b_eq = np.ascontiguousarray(self.b_eq, dtype=np.float64)
        self.lower = np.ascontiguousarray(self.lower, dtype=np.float64)
        self.upper = np.ascontiguousarray(self.upper, dtype=np.float64)
        n = self.c.shape[0]
        if self.a_eq.ndim != 2:
            raise LpError("a_eq must be a 2-D matrix")
        m = self.a_eq.shape[0]
        if self.a_eq.shape[1] != n and m > 0:
            raise LpError(f"a_eq has {self.a_eq.shape[1]} columns, expected {n}")
        if self.b_eq.shape[0] != m:
            raise LpError(f"b_eq has {self.b_eq.shape[0]} entries, expected {m}")
        if self.lower.shape[0] != n or self.upper.shape[0] != n:
            raise LpError("bound vectors must match the variable count")
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise LpError(f"lower > upper for variable {bad}")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.a_eq.shape[0]


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    objective_value: float
    iterations: int
    basis: np.ndarray          # basic variable indices (>= n means artificial)
    vstatus: np.ndarray        # per-variable AT_LOWER/AT_UPPER/BASIC/FREE
    max_infeasibility: float

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(lp: LinearProgram, basis0=None, vstatus0=None,
             eps_feas: float = EPS_FEAS, eps_opt: float = EPS_OPT) -> LpSolution:
    """Solve an LP with the active kernel, deterministically."""
    status, x, obj, iters, basis, vstat, infeas = solve_kernel(
        lp.c, lp.a_eq, lp.b_eq, lp.lower, lp.upper,
        basis0=basis0, vstatus0=vstatus0, eps_feas=eps_feas, eps_opt=eps_opt)
    return LpSolution(status=_STATUS_NAMES[status], x=x, objective_value=obj,
                      iterations=iters, basis=basis, vstatus=vstat,
                      max_infeasibility=infeas)


@dataclass
class PiecewiseSegments:
    """Equal-width secant linearization of a convex cost curve."""

    breakpoints: np.ndarray  # k+1 increasing MW values
    slopes: np.ndarray       # k nondecreasing $/MWh secant slopes

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=np.float64)
        self.slopes = np.asarray(self.slopes, dtype=np.float64)
        if self.breakpoints.shape[0] != self.slopes.shape[0] + 1:
            raise LpError("segment count must be breakpoint count - 1")
        if np.any(np.diff(self.breakpoints) <= 0):
            raise LpError("breakpoints must be strictly increasing")
        if np.any(np.diff(self.slopes) < 0):
            raise LpError("segment slopes must be nondecreasing (convexity)")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def value(self, p: float) -> float:
        """Piecewise value above the curve's value at the first breakpoint."""
        total = 0.0
        for width, slope, start in zip(self.widths, self.slopes, self.breakpoints):
            step = min(max(p - start, 0.0), width)
            total += slope * step
        return total


def piecewise_linearize(curve, p_min: float, p_max: float,
                        k: int = DEFAULT_SEGMENTS) -> PiecewiseSegments:
    """Secant linearization of curve on [p_min, p_max] with k segments.

    Segment j's slope is the secant slope between breakpoints j and j+1,
    which for a*P^2 + b*P + c is a*(x_j + x_{j+1}) + b; with a >= 0 the
    slopes are automatically nondecreasing, and a linear curve (a = 0) is
    reproduced exactly.
    """
    if k < 1:
        raise LpError(f"segment count must be >= 1, got {k}")
    if not p_min < p_max:
        raise LpError(f"need p_min < p_max, got [{p_min}, {p_max}]")
    if curve.a < 0:
        raise LpError("cost curve must be convex (a >= 0)")
    breakpoints = np.linspace(p_min, p_max, k + 1)
    slopes = curve.a * (breakpoints[:-1] + breakpoints[1:]) + curve.b
    return PiecewiseSegments(breakpoints=breakpoints, slopes=slopes)
