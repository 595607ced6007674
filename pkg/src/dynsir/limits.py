"""Samplers for the dynamic local limit objects and the limit epidemic curve.

Limit objects:

* Dynamic Erdos-Renyi: Galton-Watson tree with Poisson(gamma(1+T)) offspring
  and one i.i.d. (t_on, t_off) mark per edge with joint CDF
  F_T(s1, s2) = (1 - exp(-(s2-s1)) + s1) / (1+T); sampled as the mixture
  "t_on = 0 w.p. 1/(1+T), else uniform on (0,T]; t_off = min(t_on+Exp(1), T)".
* Dynamic random intersection graph: alternating bipartite GW tree (vertex
  offspring mixed Poisson(W zeta (1+T)), group sizes size-biased) followed by
  the community projection that replaces each group by a clique sharing the
  group's mark.
* Rewired configuration model: GW tree with base offspring q (root) and
  q~_k = (k+1) q_{k+1} / E[D] (later generations), augmented per vertex of
  base degree k by Poisson(4 alpha k T / 3) extra edges created at the times
  of a rate-(4 alpha k / 3) Poisson process; original edges are marked
  (0, T) (documented simplification), created edges (t, T).

``limit_epidemic_estimate`` runs the backward process at the root of freshly
sampled depth-l trees.  For the DER limit the tree is sampled lazily inside
the engine kernel (depth-5 trees at the paper's parameters hold millions of
vertices, almost all of which the pruned search never visits); the
materialising sampler here uses the same per-node random streams, so both
views of a given seed agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .epidemic.backward import backward_times
from .epidemic.curves import EpidemicCurve, curve_from_samples, default_grid
from .epidemic.marks import Dist, EpidemicMarks, sample_marks
from .graphs import MarkSeq, TimeMarkedUnionGraph
from .rng import (
    SplitMix64,
    child_handle,
    derive_seed,
    epi_stream,
    root_handle,
    spawn_rng,
    struct_stream,
)

DEFAULT_MAX_TREE_NODES = 2_000_000


@dataclass(frozen=True)
class OnOffMarkLaw:
    """Joint law of a limit edge's single (t_on, t_off) interval on [0, T]."""

    horizon: float

    @property
    def prob_on_at_zero(self) -> float:
        return 1.0 / (1.0 + self.horizon)

    def cdf(self, s1: float, s2: float) -> float:
        """F_T(s1, s2) for 0 <= s1 <= s2 <= inf (s2 may exceed the horizon).

        The closed form describes the pair before truncation of t_off at T;
        the truncated sample's atom at t_off = T corresponds to s2 = inf.
        """
        if s1 < 0 or s2 < s1:
            raise ValueError("need 0 <= s1 <= s2")
        s1 = min(s1, self.horizon)
        return (1.0 - math.exp(-(s2 - s1)) + s1) / (1.0 + self.horizon)

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        T = self.horizon
        at_zero = rng.random(size) < self.prob_on_at_zero
        t_on = np.where(at_zero, 0.0, T * (1.0 - rng.random(size)))
        t_off = np.minimum(t_on + rng.exponential(1.0, size), T)
        return t_on, t_off


def sample_on_off_mark(law: OnOffMarkLaw, seed) -> tuple[float, float]:
    t_on, t_off = law.sample(spawn_rng(seed, "onoff-mark"), 1)
    return float(t_on[0]), float(t_off[0])


def _stream_mark(ss: SplitMix64, horizon: float) -> tuple[float, float]:
    # mirrors the draw order of the lazy kernels
    if ss.uniform() <= 1.0 / (1.0 + horizon):
        t_on = 0.0
    else:
        t_on = horizon * ss.uniform()
    t_off = t_on + ss.exponential(1.0)
    return t_on, min(t_off, horizon)


@dataclass
class LimitTree:
    """Rooted marked limit object truncated at a finite depth.

    Vertices are 0..n-1 with vertex 0 the root; ``generation`` counts hops
    from the root in the projected graph.  Edges carry single-interval marks.
    For the RIG limit, ``groups`` lists (members, mark) per sampled group so
    the pre-projection structure stays inspectable.
    """

    kind: str
    horizon: float
    depth: int
    generation: list[int]
    edges: list[tuple[int, int]]
    edge_marks: list[tuple[float, float]]
    node_handles: list[int] | None = None
    groups: list[dict] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.generation)

    def to_union_graph(self) -> TimeMarkedUnionGraph:
        marks = {}
        for (u, v), (a, b) in zip(self.edges, self.edge_marks):
            pair = (u, v) if u < v else (v, u)
            marks[pair] = MarkSeq.from_pairs([(a, b)])
        return TimeMarkedUnionGraph.build(self.n, self.horizon, marks)


# ---------------------------------------------------------------------------
# Dynamic Erdos-Renyi limit
# ---------------------------------------------------------------------------


def sample_der_limit(
    gamma: float,
    horizon: float,
    depth: int,
    seed,
    max_nodes: int = DEFAULT_MAX_TREE_NODES,
) -> LimitTree:
    """Materialised Poisson(gamma(1+T)) GW tree with i.i.d. interval marks.

    Uses the same per-node streams as the lazy kernel: node draws are (mark,
    offspring count) from the structural stream, so truncations of one seed
    at different depths are coupled.
    """
    if gamma <= 0 or depth < 0:
        raise ValueError("need gamma > 0 and depth >= 0")
    lam = gamma * (1.0 + horizon)
    h0 = root_handle(derive_seed(seed) if not isinstance(seed, (int, np.integer)) else int(seed))
    generation = [0]
    handles = [h0]
    edges: list[tuple[int, int]] = []
    edge_marks: list[tuple[float, float]] = []
    frontier = [(0, h0, 0)]
    while frontier:
        nxt = []
        for vid, h, g in frontier:
            if g >= depth:
                continue
            # a node's structural stream yields its edge mark (consumed at
            # creation, below) followed by its offspring count
            ss = struct_stream(h)
            if g > 0:
                _stream_mark(ss, horizon)
            k = ss.poisson(lam)
            for i in range(k):
                hc = child_handle(h, i)
                css = struct_stream(hc)
                mark = _stream_mark(css, horizon)
                cid = len(generation)
                if cid >= max_nodes:
                    raise MemoryError(
                        f"limit tree exceeds {max_nodes} nodes; lower depth or gamma"
                    )
                generation.append(g + 1)
                handles.append(hc)
                edges.append((vid, cid))
                edge_marks.append(mark)
                nxt.append((cid, hc, g + 1))
        frontier = nxt
    return LimitTree(
        kind="der",
        horizon=horizon,
        depth=depth,
        generation=generation,
        edges=edges,
        edge_marks=edge_marks,
        node_handles=handles,
        meta={"gamma": gamma, "offspring_mean": lam},
    )


def der_limit_marks(tree: LimitTree, rho: float, d_i, d_r) -> EpidemicMarks:
    """Epidemic marks on a materialised DER limit tree from its node streams.

    Matches the lazy kernel draw for draw, which makes the materialised tree
    plus the finite-graph engine an independent cross-check of the fused
    sampler.
    """
    if tree.node_handles is None:
        raise ValueError("tree was not sampled with node handles")
    d_i = Dist.from_spec(d_i)
    d_r = Dist.from_spec(d_r)
    n = tree.n
    status = np.zeros(n, dtype=bool)
    recovery = np.zeros(n)
    c_by_pair = {}

    def draw(stream, dist):
        if dist.kind == "exp":
            return stream.exponential(dist.a)
        if dist.kind == "uniform":
            return dist.a + (dist.b - dist.a) * stream.uniform()
        return dist.a

    for v, h in enumerate(tree.node_handles):
        es = epi_stream(h)
        if v > 0:
            c = draw(es, d_i)
            u, w = tree.edges[v - 1]  # edge to parent created with vertex v
            pair = (u, w) if u < w else (w, u)
            c_by_pair[pair] = c
        recovery[v] = draw(es, d_r)
        status[v] = es.bernoulli(rho)
    union = tree.to_union_graph()
    transmission = np.array(
        [c_by_pair[p] for p in union.edge_pairs], dtype=np.float64
    )
    return EpidemicMarks(status, recovery, transmission, rho)


# ---------------------------------------------------------------------------
# Random intersection graph limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightLaw:
    """Limit law of vertex weights; supports constant and finite discrete."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    @staticmethod
    def constant(w: float = 1.0) -> "WeightLaw":
        return WeightLaw((float(w),), (1.0,))

    @staticmethod
    def from_spec(spec) -> "WeightLaw":
        if isinstance(spec, WeightLaw):
            return spec
        if spec is None:
            return WeightLaw.constant(1.0)
        if isinstance(spec, dict):
            if spec.get("kind") == "constant":
                return WeightLaw.constant(spec["value"])
            if spec.get("kind") == "discrete":
                v, p = spec["values"], spec["probs"]
                p = np.asarray(p, dtype=np.float64)
                if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
                    raise ValueError("discrete weight probs must sum to 1")
                return WeightLaw(tuple(float(x) for x in v), tuple(p))
        raise ValueError(f"unsupported weight law {spec!r}")

    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self.probs)))

    def size_biased(self) -> "WeightLaw":
        m = self.mean()
        return WeightLaw(self.values, tuple(v * p / m for v, p in zip(self.values, self.probs)))

    def sample(self, rng: np.random.Generator) -> float:
        if len(self.values) == 1:
            return self.values[0]
        return float(rng.choice(self.values, p=self.probs))


def shifted_size_biased_pmf(pmf: np.ndarray, first_value: int) -> tuple[np.ndarray, int]:
    """pmf of X* - 1 where X has the given pmf starting at first_value."""
    pmf = np.asarray(pmf, dtype=np.float64)
    ks = np.arange(first_value, first_value + len(pmf))
    mean = float((ks * pmf).sum())
    if mean <= 0:
        raise ValueError("pmf must have positive mean")
    biased = ks * pmf / mean
    return biased, first_value - 1


def zeta_of(p_k: np.ndarray) -> float:
    ks = np.arange(2, 2 + len(p_k))
    return float((ks * np.asarray(p_k)).sum())


def sample_rig_limit(
    weight_law,
    p_k,
    horizon: float,
    depth: int,
    seed,
    max_nodes: int = DEFAULT_MAX_TREE_NODES,
) -> LimitTree:
    """Community projection of the bipartite limit tree.

    The root draws W from the weight law and Poisson(W zeta (1+T)) groups;
    each group has size-biased size (the root plus X*-1 fresh members whose
    weights follow the size-biased law), carries one F_T mark, and projects
    to a clique.  Fresh members repeat the construction to the given depth
    (counted in projected hops).
    """
    law = WeightLaw.from_spec(weight_law)
    p = np.asarray(p_k, dtype=np.float64)
    if np.any(p < 0) or p.sum() <= 0:
        raise ValueError("invalid group-size pmf")
    p = p / p.sum()
    zeta = zeta_of(p)
    rng = spawn_rng(seed, "rig-limit")
    mark_law = OnOffMarkLaw(horizon)
    child_pmf, child_first = shifted_size_biased_pmf(p, 2)
    biased_law = law.size_biased()

    generation = [0]
    weights = [law.sample(rng)]
    edges: list[tuple[int, int]] = []
    edge_marks: list[tuple[float, float]] = []
    groups: list[dict] = []
    frontier = [0]
    g = 0
    while frontier and g < depth:
        nxt = []
        for v in frontier:
            n_groups = rng.poisson(weights[v] * zeta * (1.0 + horizon))
            for _ in range(n_groups):
                t_on, t_off = mark_law.sample(rng, 1)
                mark = (float(t_on[0]), float(t_off[0]))
                n_children = child_first + int(rng.choice(len(child_pmf), p=child_pmf))
                members = [v]
                for _c in range(n_children):
                    cid = len(generation)
                    if cid >= max_nodes:
                        raise MemoryError(f"limit tree exceeds {max_nodes} nodes")
                    generation.append(g + 1)
                    weights.append(biased_law.sample(rng))
                    members.append(cid)
                    nxt.append(cid)
                for a in range(len(members)):
                    for b in range(a + 1, len(members)):
                        edges.append((members[a], members[b]))
                        edge_marks.append(mark)
                groups.append({"members": members, "mark": mark})
        frontier = nxt
        g += 1
    return LimitTree(
        kind="rig",
        horizon=horizon,
        depth=depth,
        generation=generation,
        edges=edges,
        edge_marks=edge_marks,
        groups=groups,
        meta={"zeta": zeta, "weight_mean": law.mean(), "vertex_weights": weights},
    )


# ---------------------------------------------------------------------------
# Rewired configuration-model limit
# ---------------------------------------------------------------------------


def size_biased_shift(q_k: np.ndarray) -> np.ndarray:
    """q~_k = (k+1) q_{k+1} / E[D] for a pmf over k = 0, 1, ..."""
    q = np.asarray(q_k, dtype=np.float64)
    ks = np.arange(len(q))
    mean = float((ks * q).sum())
    if mean <= 0:
        raise ValueError("degree pmf must have positive mean")
    out = np.zeros(len(q))
    out[: len(q) - 1] = ks[1:] * q[1:] / mean
    return out


def sample_cm_union_limit(
    q_k,
    alpha: float,
    horizon: float,
    depth: int,
    seed,
    max_nodes: int = DEFAULT_MAX_TREE_NODES,
) -> LimitTree:
    """Augmented GW union-limit tree of the rewired configuration model."""
    q = np.asarray(q_k, dtype=np.float64)
    if np.any(q < 0) or q.sum() <= 0:
        raise ValueError("invalid degree pmf")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    q = q / q.sum()
    qt = size_biased_shift(q)
    rng = spawn_rng(seed, "cm-limit")

    generation = [0]
    base_degree = []
    edges: list[tuple[int, int]] = []
    edge_marks: list[tuple[float, float]] = []
    created_count = 0

    def new_vertex(g: int) -> int:
        cid = len(generation)
        if cid >= max_nodes:
            raise MemoryError(f"limit tree exceeds {max_nodes} nodes")
        generation.append(g)
        return cid

    frontier = []
    k_root = int(rng.choice(len(q), p=q))
    base_degree.append(k_root)
    n_extra = int(rng.poisson(4.0 * alpha * k_root * horizon / 3.0)) if horizon > 0 else 0
    for _ in range(k_root):
        c = new_vertex(1)
        edges.append((0, c))
        edge_marks.append((0.0, horizon))
        frontier.append(c)
    for _ in range(n_extra):
        c = new_vertex(1)
        t = horizon * (1.0 - rng.random())
        edges.append((0, c))
        edge_marks.append((float(t), horizon))
        frontier.append(c)
        created_count += 1

    g = 1
    while frontier and g < depth:
        nxt = []
        for v in frontier:
            kids = int(rng.choice(len(qt), p=qt))
            k_base = kids + 1  # one original half-edge leads to the parent
            base_degree.append(k_base)
            n_extra = (
                int(rng.poisson(4.0 * alpha * k_base * horizon / 3.0)) if horizon > 0 else 0
            )
            for _ in range(kids):
                c = new_vertex(g + 1)
                edges.append((v, c))
                edge_marks.append((0.0, horizon))
                nxt.append(c)
            for _ in range(n_extra):
                c = new_vertex(g + 1)
                t = horizon * (1.0 - rng.random())
                edges.append((v, c))
                edge_marks.append((float(t), horizon))
                nxt.append(c)
                created_count += 1
        frontier = nxt
        g += 1
    return LimitTree(
        kind="cm",
        horizon=horizon,
        depth=depth,
        generation=generation,
        edges=edges,
        edge_marks=edge_marks,
        meta={"alpha": alpha, "created_edges": created_count},
    )


# ---------------------------------------------------------------------------
# Monte Carlo estimate of the limit epidemic curve
# ---------------------------------------------------------------------------


def limit_epidemic_estimate(
    kind: str,
    params: dict,
    horizon: float,
    rho: float,
    d_i,
    d_r,
    depth: int,
    runs: int,
    seed,
    grid=None,
    impl=None,
    cap: int = 10**7,
) -> EpidemicCurve:
    """s_l, i_l, r_l from `runs` independent depth-l limit trees.

    Per run: sample a tree and epidemic marks, run the backward process at
    the root; s_l(t) is the fraction of runs with t < T(root), r_l(t) the
    fraction with t > T(root) + R(root).
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not (0.0 < rho <= 1.0):
        raise ValueError(f"rho={rho} outside (0, 1]")
    d_i = Dist.from_spec(d_i)
    d_r = Dist.from_spec(d_r)
    if grid is None:
        grid = default_grid(horizon)

    if kind == "der":
        run_seeds = np.array(
            [derive_seed(seed, "limit-run", i) for i in range(runs)], dtype=np.uint64
        )
        lam = params["gamma"] * (1.0 + horizon)
        times, recov = engine.run_der_limit(
            run_seeds, depth, lam, horizon, rho, d_i, d_r, cap, impl=impl
        )
        return curve_from_samples(times, recov, grid, runs=runs)

    times = np.empty(runs)
    recov = np.empty(runs)
    for i in range(runs):
        run_seed = derive_seed(seed, "limit-run", i)
        if kind == "rig":
            tree = sample_rig_limit(
                params.get("weight_law"), params["p_k"], horizon, depth, run_seed
            )
        elif kind == "cm":
            tree = sample_cm_union_limit(
                params["q_k"], params["alpha"], horizon, depth, run_seed
            )
        else:
            raise ValueError(f"unknown limit kind {kind!r}")
        union = tree.to_union_graph()
        marks = sample_marks(union, rho, d_i, d_r, derive_seed(run_seed, "marks"))
        times[i] = backward_times(union, marks, [0], None, cap, impl)[0]
        recov[i] = marks.recovery[0]
    return curve_from_samples(times, recov, grid, runs=runs)
