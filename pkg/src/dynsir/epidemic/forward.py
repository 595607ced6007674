"""Event-driven forward SIR simulation on a dynamic graph.

Transmission over an edge is attempted once per (infector, edge): the clock
starts at the infector's infection time if the edge is ON then, otherwise at
the edge's next activation; the attempt succeeds iff start + C(e) falls
before the infector recovers and inside some ON interval of the edge.
Attempt arrival times never precede the infector's infection time, so a
single time-ordered event queue yields every vertex's minimal infection time.
"""

from __future__ import annotations

import heapq

import numpy as np

from ..graphs import DynamicGraph, TimeMarkedUnionGraph, union_graph
from .curves import EpidemicCurve, InfectionTimes, curve_from_samples, default_grid
from .marks import EpidemicMarks


def forward_simulate(
    g, marks: EpidemicMarks, grid=None
) -> tuple[InfectionTimes, EpidemicCurve]:
    union = g if isinstance(g, TimeMarkedUnionGraph) else union_graph(g)
    marks.validate(union)
    if grid is None:
        grid = default_grid(union.horizon)
    grid = np.asarray(grid, dtype=np.float64)
    if len(grid) and (grid[0] < 0 or grid[-1] > union.horizon):
        raise ValueError("grid outside [0, T]")

    times = np.full(union.n, np.inf)
    heap: list[tuple[float, int, int]] = []

    def schedule_from(v: int, tau: float) -> None:
        rv = marks.recovery[v]
        for u, eid in union.adjacency[v]:
            if np.isfinite(times[u]):
                continue
            ms = union.edge_marks[eid]
            start = tau if ms.contains(tau) else ms.next_on_after(tau)
            if start is None:
                continue
            arrive = start + marks.transmission[eid]
            if arrive > tau + rv or not ms.contains(arrive):
                continue
            heapq.heappush(heap, (arrive, u, eid))

    for v in np.flatnonzero(marks.initially_infected):
        times[v] = 0.0
    for v in np.flatnonzero(marks.initially_infected):
        schedule_from(int(v), 0.0)

    while heap:
        t, u, _eid = heapq.heappop(heap)
        if np.isfinite(times[u]):
            continue
        times[u] = t
        schedule_from(u, t)

    curve = curve_from_samples(times, marks.recovery, grid, runs=1)
    return InfectionTimes(times, marks.recovery.copy()), curve
