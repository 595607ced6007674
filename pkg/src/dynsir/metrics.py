"""Rooted-graph isomorphism, the rooted/marked metrics, and ball histograms.

Canonical forms are computed by iterated neighbourhood refinement with the
root individualised, falling back to branching over refinement ties
(individualisation-refinement), so equal canonical byte strings hold exactly
when the rooted balls are isomorphic.  Edge and vertex labels participate in
the refinement, which gives canonical forms of quantised-mark balls for the
empirical histograms.

Distances:

* ``dist_rooted``: 1/(R*+1) with R* the largest radius at which the two
  rooted balls are isomorphic (0 when isomorphic through the cap).
* ``mark_seq_distance``: |N - N'| plus the summed absolute ON/OFF time
  differences over the shorter sequence.
* ``marked_dist``: as dist_rooted but the isomorphism at radius r must also
  match every edge (and optionally vertex) mark to within 1/r.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .graphs import MarkSeq, RootedBall, TimeMarkedUnionGraph, rooted_ball
from .limits import LimitTree
from .rng import derive_seed

DEFAULT_BALL_CAP = 10**4
DEFAULT_R_MAX = 16


class BallSizeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Canonical forms
# ---------------------------------------------------------------------------


def _refine(n, adj, colors):
    """Stable colouring under (colour, multiset of (edge label, colour))."""
    while True:
        sigs = []
        for v in range(n):
            nb = sorted((lbl, colors[u]) for u, lbl in adj[v])
            sigs.append((colors[v], tuple(nb)))
        order = sorted(set(sigs))
        remap = {s: i for i, s in enumerate(order)}
        new = [remap[s] for s in sigs]
        if len(order) == len(set(colors)) and new == colors:
            return new
        if new == colors:
            return new
        colors = new


def _encode(n, adj, colors):
    perm = sorted(range(n), key=lambda v: colors[v])
    pos = {v: i for i, v in enumerate(perm)}
    edges = sorted(
        (min(pos[v], pos[u]), max(pos[v], pos[u]), lbl)
        for v in range(n)
        for u, lbl in adj[v]
        if pos[v] < pos[u]
    )
    return repr((n, edges)).encode()


def _canonical(n, adj, colors):
    colors = _refine(n, adj, colors)
    classes: dict[int, list[int]] = {}
    for v in range(n):
        classes.setdefault(colors[v], []).append(v)
    target = None
    for c in sorted(classes):
        if len(classes[c]) > 1:
            target = classes[c]
            break
    if target is None:
        return _encode(n, adj, colors)
    best = None
    fresh = n + 1
    for v in target:
        branched = list(colors)
        branched[v] = fresh
        enc = _canonical(n, adj, branched)
        if best is None or enc < best:
            best = enc
    return best


def _ball_adjacency(ball: RootedBall, edge_labels=None):
    adj = [[] for _ in range(ball.n)]
    for k, (a, b) in enumerate(ball.edges):
        lbl = edge_labels[k] if edge_labels is not None else 0
        adj[a].append((b, lbl))
        adj[b].append((a, lbl))
    return adj


def _label_ids(labels):
    order = {lbl: i for i, lbl in enumerate(sorted(set(labels)))}
    return [order[lbl] for lbl in labels]


def canonical_form(
    ball: RootedBall,
    edge_labels=None,
    vertex_labels=None,
    size_cap: int = DEFAULT_BALL_CAP,
) -> bytes:
    """Canonical byte string; equal forms iff rooted isomorphic (with labels)."""
    if ball.n > size_cap:
        raise BallSizeError(f"ball has {ball.n} vertices (cap {size_cap})")
    if edge_labels is not None:
        edge_labels = _label_ids(list(edge_labels))
    adj = _ball_adjacency(ball, edge_labels)
    if vertex_labels is not None:
        vids = _label_ids(list(vertex_labels))
        colors = [2 + 2 * vids[v] + (1 if v == 0 else 0) for v in range(ball.n)]
        colors[0] = 1 + 2 * vids[0]
    else:
        colors = [1 if v == 0 else 2 for v in range(ball.n)]
    return _canonical(ball.n, adj, colors)


def canonical_hash(form: bytes) -> str:
    return hashlib.blake2b(form, digest_size=16).hexdigest()


def rooted_isomorphic(a: RootedBall, b: RootedBall, size_cap: int = DEFAULT_BALL_CAP) -> bool:
    """Structure-only rooted isomorphism via canonical forms."""
    if a.n != b.n or len(a.edges) != len(b.edges):
        return False
    return canonical_form(a, size_cap=size_cap) == canonical_form(b, size_cap=size_cap)


def brute_force_rooted_isomorphic(a: RootedBall, b: RootedBall) -> bool:
    """Permutation search over root-preserving bijections (test oracle)."""
    if a.n != b.n or len(a.edges) != len(b.edges):
        return False
    ea = set(a.edges)
    for perm in permutations(range(1, a.n)):
        mapping = (0,) + perm
        eb = {tuple(sorted((mapping[x], mapping[y]))) for x, y in b.edges}
        if eb == ea:
            return True
    return False


# ---------------------------------------------------------------------------
# Rooted views (ball families)
# ---------------------------------------------------------------------------


class RootedView:
    """Ball family of a root vertex in a time-marked union graph."""

    def __init__(self, graph, root: int = 0, with_marks: bool = True):
        if isinstance(graph, LimitTree):
            graph = graph.to_union_graph()
        if not isinstance(graph, TimeMarkedUnionGraph):
            raise TypeError("need a TimeMarkedUnionGraph or LimitTree")
        self.graph = graph
        self.root = root
        self.with_marks = with_marks

    def ball(self, r: int) -> RootedBall:
        return rooted_ball(self.graph, self.root, r, with_marks=self.with_marks)


class EpidemicRootedView(RootedView):
    """Ball family whose edges carry (MarkSeq, C) and vertices (R, status)."""

    def __init__(self, graph, marks, root: int = 0):
        super().__init__(graph, root, with_marks=True)
        self.marks = marks

    def ball(self, r: int) -> RootedBall:
        raise NotImplementedError("use payloads()")

    def payloads(self, r: int):
        ball, vmap, emap = _ball_with_maps(self.graph, self.root, r)
        edge_payload = [
            (self.graph.edge_marks[e], float(self.marks.transmission[e])) for e in emap
        ]
        vertex_payload = [
            (float(self.marks.recovery[v]), bool(self.marks.initially_infected[v]))
            for v in vmap
        ]
        return ball, edge_payload, vertex_payload


def _ball_with_maps(u: TimeMarkedUnionGraph, v: int, r: int):
    """RootedBall plus local->original vertex ids and edge ids."""
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
    edges, eids = [], []
    for x in order:
        for w, eid in u.adjacency[x]:
            if w in local and local[x] < local[w]:
                edges.append((local[x], local[w]))
                eids.append(eid)
    idx = sorted(range(len(edges)), key=lambda k: edges[k])
    ball = RootedBall(
        radius=r,
        dist=tuple(dist[x] for x in order),
        edges=tuple(edges[k] for k in idx),
        marks=tuple(u.edge_marks[eids[k]] for k in idx),
    )
    return ball, order, [eids[k] for k in idx]


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


def _as_view(x) -> RootedView:
    if isinstance(x, RootedView):
        return x
    if isinstance(x, (TimeMarkedUnionGraph, LimitTree)):
        return RootedView(x, 0)
    if isinstance(x, tuple) and len(x) == 2:
        return RootedView(x[0], x[1])
    raise TypeError(f"cannot interpret {type(x)} as a rooted view")


def _ball_saturated(ball: RootedBall, r: int) -> bool:
    return all(d < r for d in ball.dist)


def dist_rooted(a, b, r_max: int = DEFAULT_R_MAX) -> float:
    """1/(R*+1) with R* = sup{r : B_r isomorphic}; 0 if isomorphic to r_max."""
    a, b = _as_view(a), _as_view(b)
    for r in range(r_max + 1):
        ba, bb = a.ball(r), b.ball(r)
        if not rooted_isomorphic(ba, bb):
            return 1.0 / r if r > 0 else 1.0
        if _ball_saturated(ba, r) and _ball_saturated(bb, r):
            return 0.0  # both balls stopped growing: isomorphic at all radii
    return 0.0


def mark_seq_distance(m1: MarkSeq, m2: MarkSeq) -> float:
    """|N - N'| + sum over the shorter length of |d on| + |d off|."""
    k = min(m1.n_intervals, m2.n_intervals)
    d = float(abs(m1.n_intervals - m2.n_intervals))
    for i in range(k):
        d += abs(m1.on[i] - m2.on[i]) + abs(m1.off[i] - m2.off[i])
    return d


def epidemic_edge_distance(p1, p2) -> float:
    """d on (Lambda x Xi) edge marks: max(|C - C'|, d_Xi(markseqs))."""
    (ms1, c1), (ms2, c2) = p1, p2
    return max(abs(c1 - c2), mark_seq_distance(ms1, ms2))


def epidemic_vertex_distance(p1, p2) -> float:
    """d_Lambda on vertex marks (recovery time, initial status)."""
    (r1, s1), (r2, s2) = p1, p2
    return max(abs(r1 - r2), 0.0 if s1 == s2 else 1.0)


def _exists_marked_iso(ball_a, pay_ea, pay_va, ball_b, pay_eb, pay_vb, thr,
                       edge_metric, vertex_metric):
    """Backtracking search for a rooted isomorphism with all mark distances <= thr."""
    n = ball_a.n
    adj_a = [[] for _ in range(n)]
    for k, (x, y) in enumerate(ball_a.edges):
        adj_a[x].append((y, k))
        adj_a[y].append((x, k))
    adj_b = [[] for _ in range(n)]
    eidx_b = {}
    for k, (x, y) in enumerate(ball_b.edges):
        adj_b[x].append((y, k))
        adj_b[y].append((x, k))
        eidx_b[(x, y)] = k
        eidx_b[(y, x)] = k
    deg_a = [len(adj_a[v]) for v in range(n)]
    deg_b = [len(adj_b[v]) for v in range(n)]
    if sorted(deg_a) != sorted(deg_b) or sorted(ball_a.dist) != sorted(ball_b.dist):
        return False
    if vertex_metric is not None:
        if vertex_metric(pay_va[0], pay_vb[0]) > thr:
            return False
    order = sorted(range(1, n), key=lambda v: (ball_a.dist[v], -deg_a[v]))
    mapping = [-1] * n
    used = [False] * n
    mapping[0] = 0
    used[0] = True

    def ok_vertex(v, w):
        if deg_a[v] != deg_b[w] or ball_a.dist[v] != ball_b.dist[w]:
            return False
        if vertex_metric is not None and vertex_metric(pay_va[v], pay_vb[w]) > thr:
            return False
        for u, k in adj_a[v]:
            mu = mapping[u]
            if mu >= 0:
                kb = eidx_b.get((w, mu))
                if kb is None:
                    return False
                if edge_metric(pay_ea[k], pay_eb[kb]) > thr:
                    return False
        return True

    def rec(i):
        if i == len(order):
            return True
        v = order[i]
        for w in range(n):
            if not used[w] and ok_vertex(v, w):
                mapping[v] = w
                used[w] = True
                if rec(i + 1):
                    return True
                mapping[v] = -1
                used[w] = False
        return False

    return rec(0)


def marked_dist(
    a,
    b,
    r_max: int = DEFAULT_R_MAX,
    edge_metric=mark_seq_distance,
    vertex_metric=None,
    size_cap: int = 10**3,
) -> float:
    """Marked rooted distance 1/(R*+1); marks must match to 1/r at radius r.

    Returns 0 when the constraint holds through r_max (reported distance is
    then at most 1/(r_max+1)).  Note that unlike the structure-only metric,
    saturated balls do not end the search early: the mark threshold keeps
    tightening as r grows.
    """

    def payloads(view, r):
        if isinstance(view, EpidemicRootedView):
            return view.payloads(r)
        ball = view.ball(r)
        return ball, list(ball.marks), None

    a, b = _as_view(a), _as_view(b)
    r_star = 0
    for r in range(1, r_max + 1):
        ball_a, pe_a, pv_a = payloads(a, r)
        ball_b, pe_b, pv_b = payloads(b, r)
        if ball_a.n > size_cap or ball_b.n > size_cap:
            raise BallSizeError(f"marked_dist ball exceeds cap {size_cap}")
        if ball_a.n != ball_b.n or len(ball_a.edges) != len(ball_b.edges):
            return 1.0 / (r_star + 1.0)
        vm = vertex_metric if pv_a is not None else None
        if not _exists_marked_iso(
            ball_a, pe_a, pv_a, ball_b, pe_b, pv_b, 1.0 / r, edge_metric, vm
        ):
            return 1.0 / (r_star + 1.0)
        r_star = r
    return 0.0


def epidemic_marked_dist(a: EpidemicRootedView, b: EpidemicRootedView, r_max: int = DEFAULT_R_MAX) -> float:
    """Marked distance under the joint epidemic/time-mark metric."""
    return marked_dist(
        a,
        b,
        r_max=r_max,
        edge_metric=epidemic_edge_distance,
        vertex_metric=epidemic_vertex_distance,
    )


# ---------------------------------------------------------------------------
# Empirical ball distribution and convergence diagnostics
# ---------------------------------------------------------------------------


@dataclass
class BallHistogram:
    radius: int
    counts: dict[bytes, int]
    total: int
    examples: dict[bytes, RootedBall]

    def frequencies(self) -> dict[bytes, float]:
        return {k: c / self.total for k, c in self.counts.items()}

    def tv_distance(self, other: "BallHistogram") -> float:
        pa, pb = self.frequencies(), other.frequencies()
        keys = set(pa) | set(pb)
        return 0.5 * sum(abs(pa.get(k, 0.0) - pb.get(k, 0.0)) for k in keys)

    def to_csv(self, path=None) -> str:
        rows = ["canonical_hash,frequency,example_ball_file"]
        freq = self.frequencies()
        for k in sorted(freq, key=lambda k: (-freq[k], k)):
            rows.append(f"{canonical_hash(k)},{freq[k]!r},")
        text = "\n".join(rows) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def quantize_marks(ms: MarkSeq, step: float) -> tuple:
    return tuple((round(s / step), round(e / step)) for s, e in zip(ms.on, ms.off))


def empirical_ball_distribution(
    union: TimeMarkedUnionGraph,
    r: int,
    mark_quantization: float | None = None,
    structure_only: bool = False,
    roots=None,
    size_cap: int = DEFAULT_BALL_CAP,
    max_oversize_fraction: float = 0.01,
) -> BallHistogram:
    """Histogram of canonical r-ball forms over root choices (default all)."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    step = mark_quantization
    if step is None:
        step = union.horizon / 64.0 if union.horizon > 0 else 1.0
    if roots is None:
        roots = range(union.n)
    counts: dict[bytes, int] = {}
    examples: dict[bytes, RootedBall] = {}
    oversize = 0
    total = 0
    for v in roots:
        ball = rooted_ball(union, int(v), r, with_marks=not structure_only)
        if ball.n > size_cap:
            oversize += 1
            continue
        labels = None
        if not structure_only:
            labels = [quantize_marks(ms, step) for ms in ball.marks]
        key = canonical_form(ball, edge_labels=labels, size_cap=size_cap)
        counts[key] = counts.get(key, 0) + 1
        examples.setdefault(key, ball)
        total += 1
    n_roots = total + oversize
    if n_roots == 0 or oversize > max_oversize_fraction * n_roots:
        raise BallSizeError(
            f"{oversize}/{n_roots} balls exceeded the size cap {size_cap}"
        )
    return BallHistogram(radius=r, counts=counts, total=total, examples=examples)


def limit_ball_histogram(
    limit_sampler,
    r: int,
    samples: int,
    seed,
    horizon: float,
    mark_quantization: float | None = None,
    structure_only: bool = False,
) -> BallHistogram:
    """Monte Carlo histogram of the limit law's r-ball canonical forms."""
    step = mark_quantization
    if step is None:
        step = horizon / 64.0 if horizon > 0 else 1.0
    counts: dict[bytes, int] = {}
    examples: dict[bytes, RootedBall] = {}
    for i in range(samples):
        tree = limit_sampler(i)
        union = tree.to_union_graph() if isinstance(tree, LimitTree) else tree
        ball = rooted_ball(union, 0, r, with_marks=not structure_only)
        labels = None
        if not structure_only:
            labels = [quantize_marks(ms, step) for ms in ball.marks]
        key = canonical_form(ball, edge_labels=labels)
        counts[key] = counts.get(key, 0) + 1
        examples.setdefault(key, ball)
    return BallHistogram(radius=r, counts=counts, total=samples, examples=examples)


@dataclass
class DiagnosticRow:
    n: int
    r: int
    tv_distance: float
    se: float


def tv_standard_error(h1: BallHistogram, h2: BallHistogram) -> float:
    pa, pb = h1.frequencies(), h2.frequencies()
    keys = set(pa) | set(pb)
    var = 0.0
    for k in keys:
        p, q = pa.get(k, 0.0), pb.get(k, 0.0)
        var += 0.25 * (p * (1 - p) / h1.total + q * (1 - q) / h2.total)
    return math.sqrt(var)


def convergence_diagnostic(
    graphs,
    limit_sampler,
    r: int,
    samples: int,
    seed=0,
    mark_quantization: float | None = None,
    structure_only: bool = False,
    roots_per_graph: int | None = None,
) -> list[DiagnosticRow]:
    """TV distance between each graph's ball histogram and the limit's."""
    if not graphs:
        raise ValueError("need at least one graph")
    horizon = graphs[0].horizon
    ref = limit_ball_histogram(
        limit_sampler, r, samples, seed, horizon, mark_quantization, structure_only
    )
    rows = []
    for u in graphs:
        roots = None
        if roots_per_graph is not None and roots_per_graph < u.n:
            rng = np.random.default_rng(derive_seed(seed, "diagnostic-roots", u.n))
            roots = rng.choice(u.n, size=roots_per_graph, replace=False)
        h = empirical_ball_distribution(
            u,
            r,
            mark_quantization=mark_quantization,
            structure_only=structure_only,
            roots=roots,
        )
        rows.append(
            DiagnosticRow(
                n=u.n, r=r, tv_distance=h.tv_distance(ref), se=tv_standard_error(h, ref)
            )
        )
    return rows


def diagnostic_csv(rows: list[DiagnosticRow], path=None) -> str:
    text = "n,r,tv_distance,se\n" + "".join(
        f"{r.n},{r.r},{r.tv_distance!r},{r.se!r}\n" for r in rows
    )
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
