"""Brute-force reference for the backward infection-time process.

Independent of the engine implementations: plain recursion over every
self-avoiding path from an initially infected vertex to the target, each
evaluated in full, no pruning, no budgets, no shared code with the kernels.
Only usable on tiny graphs; exists to validate the engines exactly.
"""

from __future__ import annotations

import math

from .graphs import TimeMarkedUnionGraph
from .epidemic.marks import EpidemicMarks


def _start_time(ms, t):
    if ms.contains(t):
        return t
    nxt = ms.next_on_after(t)
    return math.inf if nxt is None else nxt


def _path_value(union, marks, path):
    """Phase-2 evaluation of one path (seed first, target last)."""
    t = 0.0
    for a, b in zip(path, path[1:]):
        eid = union.edge_index[(a, b) if a < b else (b, a)]
        ms = union.edge_marks[eid]
        s0 = _start_time(ms, t)
        if math.isinf(s0):
            return math.inf
        cand = s0 + marks.transmission[eid]
        if cand > t + marks.recovery[a] or not ms.contains(cand):
            return math.inf
        t = cand
    return t


def backward_time_bruteforce(
    union: TimeMarkedUnionGraph,
    marks: EpidemicMarks,
    v: int,
    radius=None,
) -> float:
    """min over feasible self-avoiding paths of the phase-2 value at v.

    Phase 1 keeps an edge traversed away from the target only when its
    transmission time is strictly below the far endpoint's recovery time;
    finite radius confines paths to the radius ball around v.
    """
    if marks.initially_infected[v]:
        return 0.0
    allowed = None
    if radius is not None:
        allowed = {v}
        frontier = [v]
        for _ in range(radius):
            nxt = []
            for x in frontier:
                for w, _e in union.adjacency[x]:
                    if w not in allowed:
                        allowed.add(w)
                        nxt.append(w)
            frontier = nxt

    best = math.inf

    def extend(path_rev):
        nonlocal best
        u = path_rev[-1]
        for w, eid in union.adjacency[u]:
            if w in path_rev:
                continue
            if allowed is not None and w not in allowed:
                continue
            if not (marks.transmission[eid] < marks.recovery[w]):
                continue
            path_rev.append(w)
            if marks.initially_infected[w]:
                val = _path_value(union, marks, list(reversed(path_rev)))
                if val < best:
                    best = val
            extend(path_rev)
            path_rev.pop()

    extend([v])
    return best
