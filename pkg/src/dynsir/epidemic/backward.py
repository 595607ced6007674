"""Backward infection-time process on a time-marked union graph.

Phase 1 walks the union graph from the target, discarding edges whose
transmission time is not below the far endpoint's recovery time and, for a
finite radius, restricting to the radius ball around the target.  Phase 2
evaluates every surviving self-avoiding path from an initially infected
vertex: the transmission clock on each edge starts at the predecessor's
infection time when the edge is ON then, else at its next activation, and
the candidate time must precede the predecessor's recovery and land inside
an ON interval.  The target's infection time is the minimum over paths.

Enumeration is exact but budgeted; exhausting the budget raises
``PathBudgetExceeded`` rather than returning a wrong answer.
"""

from __future__ import annotations

import numpy as np

from .. import engine
from ..graphs import TimeMarkedUnionGraph
from .curves import EpidemicCurve, curve_from_samples, default_grid
from .marks import EpidemicMarks

DEFAULT_PATH_CAP = 10**6


def backward_times(
    union: TimeMarkedUnionGraph,
    marks: EpidemicMarks,
    roots=None,
    radius=None,
    cap: int = DEFAULT_PATH_CAP,
    impl=None,
    prepared=None,
) -> np.ndarray:
    """Infection times for all roots (default: every vertex)."""
    if prepared is None:
        marks.validate(union)
        prepared = engine.prepare(union, marks)
    if roots is None:
        roots = np.arange(union.n, dtype=np.int64)
    return engine.run_backward(prepared, roots, radius, cap, impl=impl)


def backward_infection_time(
    union: TimeMarkedUnionGraph,
    marks: EpidemicMarks,
    v: int,
    radius=None,
    cap: int = DEFAULT_PATH_CAP,
    impl=None,
) -> float:
    if not (0 <= v < union.n):
        raise ValueError(f"vertex {v} outside [0, {union.n})")
    return float(backward_times(union, marks, [v], radius, cap, impl)[0])


def backward_curve(
    union: TimeMarkedUnionGraph,
    marks: EpidemicMarks,
    radius=None,
    grid=None,
    roots=None,
    cap: int = DEFAULT_PATH_CAP,
    impl=None,
) -> EpidemicCurve:
    """Curve s(t) = frac{t < T(v)}, r(t) = frac{t > T(v)+R_v}, i = 1-s-r."""
    if grid is None:
        grid = default_grid(union.horizon)
    grid = np.asarray(grid, dtype=np.float64)
    if len(grid) and (grid[0] < 0 or grid[-1] > union.horizon):
        raise ValueError("grid outside [0, T]")
    if roots is None:
        roots = np.arange(union.n, dtype=np.int64)
    roots = np.asarray(roots, dtype=np.int64)
    times = backward_times(union, marks, roots, radius, cap, impl)
    return curve_from_samples(times, marks.recovery[roots], grid)
