"""Dynamic graphs, time-marked union graphs and rooted balls.

A dynamic graph keeps a fixed vertex set ``0..n-1`` and, per edge, the sorted
sequence of closed ON intervals observed over the horizon ``[0, T]``.  The
time-marked union graph is the static graph of all ever-ON edges with each
edge carrying its interval sequence.  Intervals are closed at both ends; ties
at endpoints count as ON.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np


class GraphFormatError(ValueError):
    pass


def normalize_pair(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise ValueError(f"self-loop ({u},{v}) not allowed")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class MarkSeq:
    """Sorted ON intervals of one edge: on[i] <= off[i] < on[i+1]."""

    on: tuple[float, ...]
    off: tuple[float, ...]

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[float, float]]) -> "MarkSeq":
        pairs = list(pairs)
        return MarkSeq(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def n_intervals(self) -> int:
        return len(self.on)

    @property
    def pairs(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.on, self.off))

    def validate(self, horizon: float) -> None:
        if len(self.on) != len(self.off) or not self.on:
            raise GraphFormatError("mark sequence must hold >= 1 interval")
        prev_off = None
        for s, e in zip(self.on, self.off):
            if not (0.0 <= s <= e <= horizon):
                raise GraphFormatError(f"interval ({s},{e}) outside [0,{horizon}]")
            if prev_off is not None and not (prev_off < s):
                raise GraphFormatError("intervals must be strictly interleaved")
            prev_off = e

    def contains(self, t: float) -> bool:
        """True iff t lies in some closed interval."""
        i = bisect_right(self.on, t) - 1
        return i >= 0 and t <= self.off[i]

    def next_on_after(self, t: float) -> Optional[float]:
        """Smallest ON-switch time strictly greater than t, if any."""
        i = bisect_right(self.on, t)
        return self.on[i] if i < len(self.on) else None

    @staticmethod
    def union(intervals: Iterable[tuple[float, float]]) -> "MarkSeq":
        """Merge possibly overlapping closed intervals into a MarkSeq."""
        ivs = sorted(intervals)
        if not ivs:
            raise ValueError("empty interval set")
        merged = [list(ivs[0])]
        for s, e in ivs[1:]:
            if s <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        return MarkSeq.from_pairs((s, e) for s, e in merged)


@dataclass
class DynamicGraph:
    """Fixed vertex set [0, n) plus per-edge ON-interval log over [0, T]."""

    n: int
    horizon: float
    edges: dict[tuple[int, int], MarkSeq]
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def validate(self) -> None:
        if self.n <= 0 or self.horizon < 0:
            raise GraphFormatError("need n > 0 and T >= 0")
        for (u, v), ms in self.edges.items():
            if not (0 <= u < v < self.n):
                raise GraphFormatError(f"bad edge ({u},{v}) for n={self.n}")
            ms.validate(self.horizon)


@dataclass
class TimeMarkedUnionGraph:
    """Static graph of all ever-ON edges, each carrying its mark sequence.

    Edges are stored sorted by vertex pair; ``edge_index`` maps a pair to its
    position, which is also the index epidemic marks use for transmission
    times.  ``csr()`` exposes flat arrays for the compiled engine.
    """

    n: int
    horizon: float
    edge_pairs: list[tuple[int, int]]
    edge_marks: list[MarkSeq]
    edge_index: dict[tuple[int, int], int] = field(repr=False, default_factory=dict)
    adjacency: list[list[tuple[int, int]]] = field(repr=False, default_factory=list)
    _csr: Optional[tuple] = field(repr=False, default=None, compare=False)

    @staticmethod
    def build(n: int, horizon: float, edges: dict[tuple[int, int], MarkSeq]) -> "TimeMarkedUnionGraph":
        pairs = sorted(edges)
        marks = [edges[p] for p in pairs]
        index = {p: i for i, p in enumerate(pairs)}
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for eid, (u, v) in enumerate(pairs):
            adjacency[u].append((v, eid))
            adjacency[v].append((u, eid))
        return TimeMarkedUnionGraph(n, horizon, pairs, marks, index, adjacency)

    @property
    def n_edges(self) -> int:
        return len(self.edge_pairs)

    def neighbors(self, v: int) -> list[tuple[int, int]]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def csr(self) -> tuple:
        """(adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off) as numpy arrays."""
        if self._csr is None:
            deg = np.array([len(a) for a in self.adjacency], dtype=np.int64)
            adj_ptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(deg, out=adj_ptr[1:])
            adj_v = np.empty(int(adj_ptr[-1]), dtype=np.int64)
            adj_e = np.empty(int(adj_ptr[-1]), dtype=np.int64)
            pos = adj_ptr[:-1].copy()
            for u, nbrs in enumerate(self.adjacency):
                for w, eid in nbrs:
                    adj_v[pos[u]] = w
                    adj_e[pos[u]] = eid
                    pos[u] += 1
            counts = np.array([m.n_intervals for m in self.edge_marks], dtype=np.int64)
            ivl_ptr = np.zeros(self.n_edges + 1, dtype=np.int64)
            np.cumsum(counts, out=ivl_ptr[1:])
            ivl_on = np.empty(int(ivl_ptr[-1]), dtype=np.float64)
            ivl_off = np.empty(int(ivl_ptr[-1]), dtype=np.float64)
            for eid, m in enumerate(self.edge_marks):
                a, b = int(ivl_ptr[eid]), int(ivl_ptr[eid + 1])
                ivl_on[a:b] = m.on
                ivl_off[a:b] = m.off
            self._csr = (adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off)
        return self._csr

    def validate(self) -> None:
        for (u, v), eid in self.edge_index.items():
            if not (0 <= u < v < self.n):
                raise GraphFormatError(f"bad edge ({u},{v})")
            self.edge_marks[eid].validate(self.horizon)


@dataclass
class RootedBall:
    """Ball of radius r around a root, relabelled in BFS order (root = 0).

    ``dist[i]`` is the graph distance of local vertex i from the root;
    ``marks[k]`` is the MarkSeq of ``edges[k]`` or None when extracted
    without marks.
    """

    radius: int
    dist: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    marks: tuple[Optional[MarkSeq], ...]

    @property
    def n(self) -> int:
        return len(self.dist)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj


def union_graph(g) -> TimeMarkedUnionGraph:
    """Time-marked union graph of a dynamic graph (pure restructuring).

    Accepts a DynamicGraph or an existing union graph, so re-extraction is
    idempotent.
    """
    if isinstance(g, TimeMarkedUnionGraph):
        return TimeMarkedUnionGraph.build(
            g.n, g.horizon, dict(zip(g.edge_pairs, g.edge_marks))
        )
    g.validate()
    return TimeMarkedUnionGraph.build(g.n, g.horizon, g.edges)


def edge_status(g: DynamicGraph, e: tuple[int, int], s: float) -> bool:
    """ON/OFF status of a pair at time s (OFF when the pair is unstored)."""
    if not (0.0 <= s <= g.horizon):
        raise ValueError(f"time {s} outside [0, {g.horizon}]")
    ms = g.edges.get(normalize_pair(*e))
    return ms is not None and ms.contains(s)


def snapshot(g: DynamicGraph, s: float) -> set[tuple[int, int]]:
    """Edge set at time s."""
    if not (0.0 <= s <= g.horizon):
        raise ValueError(f"time {s} outside [0, {g.horizon}]")
    return {p for p, ms in g.edges.items() if ms.contains(s)}


def rooted_ball(u: TimeMarkedUnionGraph, v: int, r: int, with_marks: bool = False) -> RootedBall:
    """BFS ball of radius r around v in the union graph."""
    if not (0 <= v < u.n):
        raise ValueError(f"vertex {v} outside [0, {u.n})")
    if r < 0:
        raise ValueError("radius must be >= 0")
    order = [v]
    dist = {v: 0}
    head = 0
    while head < len(order):
        x = order[head]
        head += 1
        if dist[x] == r:
            continue
        for w, _eid in sorted(u.adjacency[x]):
            if w not in dist:
                dist[w] = dist[x] + 1
                order.append(w)
    local = {x: i for i, x in enumerate(order)}
    edges = []
    marks = []
    for x in order:
        for w, eid in u.adjacency[x]:
            if w in local and local[x] < local[w]:
                edges.append((local[x], local[w]))
                marks.append(u.edge_marks[eid] if with_marks else None)
    ordered = sorted(range(len(edges)), key=lambda k: edges[k])
    return RootedBall(
        radius=r,
        dist=tuple(dist[x] for x in order),
        edges=tuple(edges[k] for k in ordered),
        marks=tuple(marks[k] for k in ordered),
    )


def ball_vertices(u: TimeMarkedUnionGraph, v: int, r: int) -> dict[int, int]:
    """Vertices of B_r(v) mapped to their distance from v (original labels)."""
    dist = {v: 0}
    frontier = [v]
    d = 0
    while frontier and d < r:
        nxt = []
        for x in frontier:
            for w, _ in u.adjacency[x]:
                if w not in dist:
                    dist[w] = d + 1
                    nxt.append(w)
        frontier = nxt
        d += 1
    return dist


# ---------------------------------------------------------------------------
# Serialization: line-oriented text, bit-exact float round trip via repr().
# Header `n T`; one edge per line `u v k s1 e1 ... sk ek`; leading `#` lines
# are comments.
# ---------------------------------------------------------------------------


def dump_graph(g, path=None, header_comments: Iterable[str] = ()) -> str:
    if isinstance(g, TimeMarkedUnionGraph):
        items = list(zip(g.edge_pairs, g.edge_marks))
    else:
        items = sorted(g.edges.items())
    lines = [f"# {c}" for c in header_comments]
    lines.append(f"{g.n} {g.horizon!r}")
    for (u, v), ms in items:
        flat = " ".join(f"{s!r} {e!r}" for s, e in zip(ms.on, ms.off))
        lines.append(f"{u} {v} {ms.n_intervals} {flat}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_graph(source) -> DynamicGraph:
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            with open(source) as fh:
                text = fh.read()
        except (OSError, ValueError):
            text = source
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise GraphFormatError("empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise GraphFormatError(f"bad header {lines[0]!r}")
    n, horizon = int(head[0]), float(head[1])
    edges: dict[tuple[int, int], MarkSeq] = {}
    for ln in lines[1:]:
        parts = ln.split()
        u, v, k = int(parts[0]), int(parts[1]), int(parts[2])
        vals = [float(x) for x in parts[3:]]
        if len(vals) != 2 * k:
            raise GraphFormatError(f"edge line with k={k} but {len(vals)} times")
        pair = normalize_pair(u, v)
        if pair in edges:
            raise GraphFormatError(f"duplicate edge {pair}")
        edges[pair] = MarkSeq.from_pairs(zip(vals[0::2], vals[1::2]))
    g = DynamicGraph(n=n, horizon=horizon, edges=edges)
    g.validate()
    return g


def load_union_graph(source) -> TimeMarkedUnionGraph:
    return union_graph(load_graph(source))
