"""Pure-Python backward-process engine (reference implementation).

The compiled module ``dynsir._engine_c`` mirrors this file operation for
operation (same traversal order, same float arithmetic, same per-node random
streams), so both produce bit-identical results.  Engine selection happens in
``dynsir.engine``.

Two entry points:

* ``backward_times``: infection times of selected roots on a finite
  time-marked union graph, by enumeration of feasible self-avoiding paths
  from initially infected vertices (two-phase backward process).
* ``der_root_samples``: root infection time on the lazily sampled
  Galton-Watson limit tree of the dynamic Erdos-Renyi graph, without ever
  materialising the tree.

The enumeration is exact.  It is made tractable by three sound devices:

* a label-setting pass (Dijkstra-style relaxation of the phase-2 recurrence)
  whose labels are values of actual feasible simple paths, hence upper
  bounds on the true minimum used as pruning thresholds;
* a lower bound on any completion of a partial path: every edge on it
  contributes at least its transmission time, and the step over an edge
  lands at or above ``entry(e) = max(first feasible activation, C(e))``;
* the horizon: accepted infection times always land inside ON intervals,
  so no completion can exceed T.

A hard budget on path extensions still guards against pathological
instances; exceeding it raises, never returns a wrong answer.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .rng import child_handle, epi_stream, root_handle, struct_stream

INF = math.inf

DIST_EXP = 0
DIST_UNIFORM = 1
DIST_CONSTANT = 2

IS_COMPILED = False


class PathBudgetExceeded(RuntimeError):
    """Raised when the per-root path-extension budget runs out."""


def _sample_dist(stream, kind: int, a: float, b: float) -> float:
    if kind == DIST_EXP:
        return stream.exponential(a)
    if kind == DIST_UNIFORM:
        return a + (b - a) * stream.uniform()
    return a


# ---------------------------------------------------------------------------
# Finite-graph backward process
# ---------------------------------------------------------------------------


def _transmit(e, I, ivl_ptr, ivl_on, ivl_off, C):
    """One phase-2 step over edge e from a transmitter infected at I.

    Returns the candidate arrival time, or inf when the clock never starts
    or the candidate misses every ON interval.  The recovery gate is the
    caller's job (it needs the transmitter's R).
    """
    a = ivl_ptr[e]
    b = ivl_ptr[e + 1]
    s0 = INF
    for j in range(a, b):
        if ivl_on[j] > I:
            s0 = ivl_on[j]
            break
        if I <= ivl_off[j]:
            s0 = I
            break
    if s0 == INF:
        return INF
    cand = s0 + C[e]
    for j in range(a, b):
        if ivl_on[j] > cand:
            return INF
        if cand <= ivl_off[j]:
            return cand
    return INF


def _eval_path(path_v, path_e, k, ivl_ptr, ivl_on, ivl_off, C, R):
    """Infection time carried to path_v[0] along the reversed path.

    path_v[k] is the initially infected end; the transmitter of edge
    path_e[i] is path_v[i+1].  Returns inf on the first failed step.
    """
    I = 0.0
    for i in range(k - 1, -1, -1):
        e = path_e[i]
        cand = _transmit(e, I, ivl_ptr, ivl_on, ivl_off, C)
        if cand == INF or cand > I + R[path_v[i + 1]]:
            return INF
        I = cand
    return I


def _label_pass(adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                seed_flags, dist, in_scope, scope_stamp, stamp, vertices):
    """Feasible-path labels by label-setting over the phase-2 recurrence.

    Pops run in non-decreasing label order, so predecessor chains are
    acyclic and every finite label is the value of a simple feasible path
    inside the scope; labels upper-bound the true minima.
    """
    heap = []
    for v in vertices:
        if seed_flags[v]:
            dist[v] = 0.0
            heapq.heappush(heap, (0.0, v))
        else:
            dist[v] = INF
    while heap:
        val, u = heapq.heappop(heap)
        if val > dist[u]:
            continue
        ru = R[u]
        for p in range(adj_ptr[u], adj_ptr[u + 1]):
            e = adj_e[p]
            ce = C[e]
            if not (ce < ru):
                continue
            w = adj_v[p]
            if in_scope and stamp[w] != scope_stamp:
                continue
            cand = _transmit(e, val, ivl_ptr, ivl_on, ivl_off, C)
            if cand == INF or cand > val + ru:
                continue
            if cand < dist[w]:
                dist[w] = cand
                heapq.heappush(heap, (cand, w))


def _relaxed_step(e, I, ivl_ptr, ivl_on, ivl_off, C):
    """Smallest possible accepted arrival over e from any time >= I.

    Monotone relaxation of the phase-2 step: the recovery gate is dropped
    and an arrival falling in an OFF gap is bumped to the next interval
    start instead of rejected.  Lower-bounds every real acceptance.
    """
    a = ivl_ptr[e]
    b = ivl_ptr[e + 1]
    s0 = INF
    for j in range(a, b):
        if ivl_on[j] > I:
            s0 = ivl_on[j]
            break
        if I <= ivl_off[j]:
            s0 = I
            break
    if s0 == INF:
        return INF
    c0 = s0 + C[e]
    for j in range(a, b):
        if ivl_on[j] >= c0:
            return ivl_on[j]
        if c0 <= ivl_off[j]:
            return c0
    return INF


def _lower_pass(adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                seed_flags, low, in_scope, scope_stamp, stamp, vertices):
    """Exact minima of the relaxed (monotone) recursion: lower bounds on
    every feasible-path value; inf certifies unreachability."""
    heap = []
    for v in vertices:
        if seed_flags[v]:
            low[v] = 0.0
            heapq.heappush(heap, (0.0, v))
        else:
            low[v] = INF
    while heap:
        val, u = heapq.heappop(heap)
        if val > low[u]:
            continue
        ru = R[u]
        for p in range(adj_ptr[u], adj_ptr[u + 1]):
            e = adj_e[p]
            if not (C[e] < ru):
                continue
            w = adj_v[p]
            if in_scope and stamp[w] != scope_stamp:
                continue
            cand = _relaxed_step(e, val, ivl_ptr, ivl_on, ivl_off, C)
            if cand < low[w]:
                low[w] = cand
                heapq.heappush(heap, (cand, w))


def backward_times(
    adj_ptr,
    adj_v,
    adj_e,
    ivl_ptr,
    ivl_on,
    ivl_off,
    C,
    R,
    seed_flags,
    horizon,
    roots,
    radius,
    cap,
):
    """Backward infection times for each root; radius < 0 means unbounded."""
    n = len(adj_ptr) - 1
    out = np.full(len(roots), INF, dtype=np.float64)

    dist = np.zeros(n, dtype=np.int64)
    stamp = np.zeros(n, dtype=np.int64)
    cur_stamp = 0
    queue = np.zeros(n, dtype=np.int64)
    labels_g = np.full(n, INF, dtype=np.float64)
    low_g = np.full(n, INF, dtype=np.float64)
    labels_b = np.full(n, INF, dtype=np.float64)
    low_b = np.full(n, INF, dtype=np.float64)

    on_path = np.zeros(n, dtype=np.uint8)
    path_v = np.zeros(n + 1, dtype=np.int64)
    path_e = np.zeros(n + 1, dtype=np.int64)
    frame_pos = np.zeros(n + 1, dtype=np.int64)

    have_global = False

    def ensure_global():
        _label_pass(
            adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
            seed_flags, labels_g, False, 0, stamp, range(n),
        )
        _lower_pass(
            adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
            seed_flags, low_g, False, 0, stamp, range(n),
        )

    if radius < 0:
        ensure_global()
        have_global = True

    for ri, root in enumerate(roots):
        v = int(root)
        if seed_flags[v]:
            out[ri] = 0.0
            continue
        if radius == 0:
            continue

        labels, low = labels_g, low_g
        if radius > 0:
            # plain BFS ball: the confined network is B_radius of the union
            # graph, independent of the epidemic marks
            cur_stamp += 1
            stamp[v] = cur_stamp
            dist[v] = 0
            queue[0] = v
            head, tail = 0, 1
            while head < tail:
                x = queue[head]
                head += 1
                dx = dist[x]
                if dx == radius:
                    continue
                for p in range(adj_ptr[x], adj_ptr[x + 1]):
                    w = adj_v[p]
                    if stamp[w] != cur_stamp:
                        stamp[w] = cur_stamp
                        dist[w] = dx + 1
                        queue[tail] = w
                        tail += 1
            if tail == n:
                # the ball covers the graph: per-root labels equal the
                # global ones, computed once and reused
                if not have_global:
                    ensure_global()
                    have_global = True
            else:
                labels, low = labels_b, low_b
                _label_pass(
                    adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                    seed_flags, labels, True, cur_stamp, stamp, queue[:tail],
                )
                _lower_pass(
                    adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                    seed_flags, low, True, cur_stamp, stamp, queue[:tail],
                )

        # the label is the value of an actual feasible path in scope, so it
        # initialises the incumbent; the DFS only has to find improvements
        best = labels[v]
        budget = cap
        if low[v] == INF:
            continue  # certified: no feasible path reaches v in scope
        # iterative DFS over path suffixes rooted at v; a prefix is pruned
        # when composing the relaxed step from low[w] along its edges (a
        # lower bound on any completion's value at v, accounting for every
        # suffix edge's ON windows) reaches the incumbent or the horizon
        sp = 0
        path_v[0] = v
        frame_pos[0] = adj_ptr[v]
        on_path[v] = 1
        while sp >= 0:
            u = path_v[sp]
            p = frame_pos[sp]
            if p >= adj_ptr[u + 1]:
                on_path[u] = 0
                sp -= 1
                continue
            frame_pos[sp] = p + 1
            w = adj_v[p]
            if on_path[w]:
                continue
            if radius > 0 and stamp[w] != cur_stamp:
                continue
            e = adj_e[p]
            if not (C[e] < R[w]):
                continue
            lb = _relaxed_step(e, low[w], ivl_ptr, ivl_on, ivl_off, C)
            i = sp - 1
            while i >= 0 and lb < best and lb <= horizon:
                lb = _relaxed_step(path_e[i], lb, ivl_ptr, ivl_on, ivl_off, C)
                i -= 1
            if lb >= best or lb > horizon:
                continue
            if budget == 0:
                on_path[path_v[: sp + 1]] = 0
                raise PathBudgetExceeded(
                    f"path budget exhausted at root {v} (cap={cap})"
                )
            budget -= 1
            path_e[sp] = e
            path_v[sp + 1] = w
            if seed_flags[w]:
                val = _eval_path(
                    path_v, path_e, sp + 1, ivl_ptr, ivl_on, ivl_off, C, R
                )
                if val < best:
                    best = val
            sp += 1
            frame_pos[sp] = adj_ptr[w]
            on_path[w] = 1

        out[ri] = best
    return out


# ---------------------------------------------------------------------------
# Lazily sampled dynamic Erdos-Renyi limit tree
# ---------------------------------------------------------------------------


def _sample_edge_mark(ss, horizon):
    """One (t_on, t_off) pair from the limit mark law on [0, horizon]."""
    if ss.uniform() <= 1.0 / (1.0 + horizon):
        t_on = 0.0
    else:
        t_on = horizon * ss.uniform()
    t_off = t_on + ss.exponential(1.0)
    if t_off > horizon:
        t_off = horizon
    return t_on, t_off


def _tree_relax(on, off, c, I):
    """Relaxed step over a single-interval edge (no recovery gate)."""
    if I > off:
        return INF
    s0 = I if I > on else on
    c0 = s0 + c
    return c0 if c0 <= off else INF


def _eval_tree_path(pon, poff, pc, pr, m):
    """Like _eval_path but for the unique root path of a tree node."""
    I = 0.0
    for j in range(m, 0, -1):
        if pon[j] <= I <= poff[j]:
            s0 = I
        elif pon[j] > I:
            s0 = pon[j]
        else:
            return INF
        cand = s0 + pc[j]
        if cand > I + pr[j]:
            return INF
        if not (pon[j] <= cand <= poff[j]):
            return INF
        I = cand
    return I


def der_root_samples(
    run_seeds,
    depth,
    offspring_mean,
    horizon,
    rho,
    di_kind,
    di_a,
    di_b,
    dr_kind,
    dr_a,
    dr_b,
    cap,
):
    """(root infection time, root recovery time) per run seed.

    The Galton-Watson tree (offspring Poisson(offspring_mean), one i.i.d.
    interval mark per edge) is explored depth-first with the same pruning as
    the finite engine; subtrees that cannot contain an improving infection
    path are never sampled.  All draws come from per-node splittable streams
    keyed by the run seed, so truncating at different depths yields coupled
    trees.
    """
    n_runs = len(run_seeds)
    t_out = np.full(n_runs, INF, dtype=np.float64)
    r_out = np.zeros(n_runs, dtype=np.float64)

    max_d = depth + 1
    f_handle = [0] * max_d
    f_k = [0] * max_d
    f_next = [0] * max_d
    pon = [0.0] * max_d
    poff = [0.0] * max_d
    pc = [0.0] * max_d
    pr = [0.0] * max_d

    for ri in range(n_runs):
        h0 = root_handle(int(run_seeds[ri]))
        es = epi_stream(h0)  # root has no incoming edge, so no C draw
        r_root = _sample_dist(es, dr_kind, dr_a, dr_b)
        r_out[ri] = r_root
        if es.bernoulli(rho):
            t_out[ri] = 0.0
            continue
        if depth == 0:
            continue

        best = INF
        budget = cap
        ss = struct_stream(h0)
        f_handle[0] = h0
        f_k[0] = ss.poisson(offspring_mean)
        f_next[0] = 0
        sp = 0
        while sp >= 0:
            if f_next[sp] >= f_k[sp]:
                sp -= 1
                continue
            idx = f_next[sp]
            f_next[sp] = idx + 1
            hc = child_handle(f_handle[sp], idx)
            css = struct_stream(hc)
            t_on, t_off = _sample_edge_mark(css, horizon)
            ces = epi_stream(hc)
            c_edge = _sample_dist(ces, di_kind, di_a, di_b)
            r_child = _sample_dist(ces, dr_kind, dr_a, dr_b)
            infected = ces.bernoulli(rho)
            if not (c_edge < r_child):
                continue
            # compose the relaxed step up the fixed root path: lower bound
            # on the value any seed below this child can deliver at the root
            lb = _tree_relax(t_on, t_off, c_edge, 0.0)
            j = sp
            while j >= 1 and lb < best and lb <= horizon:
                lb = _tree_relax(pon[j], poff[j], pc[j], lb)
                j -= 1
            if lb >= best or lb > horizon:
                continue
            if budget == 0:
                raise PathBudgetExceeded(f"path budget exhausted (cap={cap})")
            budget -= 1
            d = sp + 1
            pon[d] = t_on
            poff[d] = t_off
            pc[d] = c_edge
            pr[d] = r_child
            if infected:
                val = _eval_tree_path(pon, poff, pc, pr, d)
                if val < best:
                    best = val
            if d < depth:
                sp += 1
                f_handle[sp] = hc
                f_k[sp] = css.poisson(offspring_mean)
                f_next[sp] = 0
        t_out[ri] = best
    return t_out, r_out
