# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backward-process engine.

Mirror of dynsir._engine_py: identical traversal order, float arithmetic and
random streams, so results are bit-identical to the fallback.  See that
module for the algorithm description.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, log

cnp.import_array()

IS_COMPILED = True

DIST_EXP = 0
DIST_UNIFORM = 1
DIST_CONSTANT = 2


class PathBudgetExceeded(RuntimeError):
    pass


ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 STRUCT_SALT = 0x5354525543545F31ULL
cdef u64 EPI_SALT = 0x4550494D41524B53ULL
cdef u64 ROOT_SALT = 0x524F4F544E4F4445ULL


cdef inline u64 mix64(u64 x) nogil:
    cdef u64 z = x + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 stream_next(u64 *state) nogil:
    state[0] = state[0] + GOLDEN
    cdef u64 z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double stream_uniform(u64 *state) nogil:
    return <double> ((stream_next(state) >> 11) + 1) * (1.0 / 9007199254740992.0)


cdef inline double stream_exponential(u64 *state, double rate) nogil:
    return -log(stream_uniform(state)) / rate


cdef inline long stream_poisson_small(u64 *state, double lam) nogil:
    cdef double limit = exp(-lam)
    cdef long k = 0
    cdef double p = 1.0
    while True:
        p *= stream_uniform(state)
        if p <= limit:
            return k
        k += 1


cdef inline long stream_poisson(u64 *state, double lam) nogil:
    cdef long n = 0
    while lam > 32.0:
        n += stream_poisson_small(state, 32.0)
        lam -= 32.0
    return n + stream_poisson_small(state, lam)


cdef inline double sample_dist(u64 *state, int kind, double a, double b) nogil:
    if kind == 0:
        return stream_exponential(state, a)
    if kind == 1:
        return a + (b - a) * stream_uniform(state)
    return a


cdef inline double transmit(
    long e, double I,
    long[::1] ivl_ptr, double[::1] ivl_on, double[::1] ivl_off, double[::1] C,
) nogil:
    """Candidate arrival of one phase-2 step (inf when it cannot land)."""
    cdef long a = ivl_ptr[e]
    cdef long b = ivl_ptr[e + 1]
    cdef long j
    cdef double s0 = INFINITY
    cdef double cand
    for j in range(a, b):
        if ivl_on[j] > I:
            s0 = ivl_on[j]
            break
        if I <= ivl_off[j]:
            s0 = I
            break
    if s0 == INFINITY:
        return INFINITY
    cand = s0 + C[e]
    for j in range(a, b):
        if ivl_on[j] > cand:
            return INFINITY
        if cand <= ivl_off[j]:
            return cand
    return INFINITY


cdef inline double tree_relax(double on, double off, double c, double I) nogil:
    """Relaxed step over a single-interval edge (no recovery gate)."""
    cdef double s0, c0
    if I > off:
        return INFINITY
    s0 = I if I > on else on
    c0 = s0 + c
    return c0 if c0 <= off else INFINITY


cdef inline double eval_path(
    long *path_v, long *path_e, long k,
    long[::1] ivl_ptr, double[::1] ivl_on, double[::1] ivl_off,
    double[::1] C, double[::1] R,
) nogil:
    cdef double I = 0.0, cand
    cdef long i
    for i in range(k - 1, -1, -1):
        cand = transmit(path_e[i], I, ivl_ptr, ivl_on, ivl_off, C)
        if cand == INFINITY or cand > I + R[path_v[i + 1]]:
            return INFINITY
        I = cand
    return I


# binary min-heap of (value, vertex), lexicographic; lazy deletion
cdef inline void heap_push(double *hval, long *hv, long *size, double val, long v) nogil:
    cdef long i = size[0]
    cdef long parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if hval[parent] < val or (hval[parent] == val and hv[parent] <= v):
            break
        hval[i] = hval[parent]
        hv[i] = hv[parent]
        i = parent
    hval[i] = val
    hv[i] = v


cdef inline void heap_pop(double *hval, long *hv, long *size, double *out_val, long *out_v) nogil:
    out_val[0] = hval[0]
    out_v[0] = hv[0]
    size[0] -= 1
    cdef long n = size[0]
    if n == 0:
        return
    cdef double val = hval[n]
    cdef long v = hv[n]
    cdef long i = 0
    cdef long child
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and (
            hval[child + 1] < hval[child]
            or (hval[child + 1] == hval[child] and hv[child + 1] < hv[child])
        ):
            child += 1
        if hval[child] < val or (hval[child] == val and hv[child] < v):
            hval[i] = hval[child]
            hv[i] = hv[child]
            i = child
        else:
            break
    hval[i] = val
    hv[i] = v


cdef void label_pass(
    long[::1] adj_ptr, long[::1] adj_v, long[::1] adj_e,
    long[::1] ivl_ptr, double[::1] ivl_on, double[::1] ivl_off,
    double[::1] C, double[::1] R, cnp.uint8_t[::1] seed_flags,
    double[::1] dist, bint in_scope, long scope_stamp, long[::1] stamp,
    long[::1] vertices, long n_vertices,
    double *hval, long *hv,
) nogil:
    """Feasible-path labels by label-setting over the phase-2 recurrence."""
    cdef long size = 0
    cdef long i, v, u, w, p, e
    cdef double val, cand, ru, ce
    for i in range(n_vertices):
        v = vertices[i]
        if seed_flags[v]:
            dist[v] = 0.0
            heap_push(hval, hv, &size, 0.0, v)
        else:
            dist[v] = INFINITY
    while size > 0:
        heap_pop(hval, hv, &size, &val, &u)
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
            cand = transmit(e, val, ivl_ptr, ivl_on, ivl_off, C)
            if cand == INFINITY or cand > val + ru:
                continue
            if cand < dist[w]:
                dist[w] = cand
                heap_push(hval, hv, &size, cand, w)


cdef inline double relaxed_step(
    long e, double I,
    long[::1] ivl_ptr, double[::1] ivl_on, double[::1] ivl_off, double[::1] C,
) nogil:
    """Smallest possible accepted arrival over e from any time >= I
    (monotone relaxation: no recovery gate, missed landings bumped)."""
    cdef long a = ivl_ptr[e]
    cdef long b = ivl_ptr[e + 1]
    cdef long j
    cdef double s0 = INFINITY
    cdef double c0
    for j in range(a, b):
        if ivl_on[j] > I:
            s0 = ivl_on[j]
            break
        if I <= ivl_off[j]:
            s0 = I
            break
    if s0 == INFINITY:
        return INFINITY
    c0 = s0 + C[e]
    for j in range(a, b):
        if ivl_on[j] >= c0:
            return ivl_on[j]
        if c0 <= ivl_off[j]:
            return c0
    return INFINITY


cdef void lower_pass(
    long[::1] adj_ptr, long[::1] adj_v, long[::1] adj_e,
    long[::1] ivl_ptr, double[::1] ivl_on, double[::1] ivl_off,
    double[::1] C, double[::1] R, cnp.uint8_t[::1] seed_flags,
    double[::1] low, bint in_scope, long scope_stamp, long[::1] stamp,
    long[::1] vertices, long n_vertices,
    double *hval, long *hv,
) nogil:
    """Exact minima of the relaxed recursion: per-vertex lower bounds."""
    cdef long size = 0
    cdef long i, v, u, w, p, e
    cdef double val, cand, ru
    for i in range(n_vertices):
        v = vertices[i]
        if seed_flags[v]:
            low[v] = 0.0
            heap_push(hval, hv, &size, 0.0, v)
        else:
            low[v] = INFINITY
    while size > 0:
        heap_pop(hval, hv, &size, &val, &u)
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
            cand = relaxed_step(e, val, ivl_ptr, ivl_on, ivl_off, C)
            if cand < low[w]:
                low[w] = cand
                heap_push(hval, hv, &size, cand, w)


def backward_times(
    long[::1] adj_ptr,
    long[::1] adj_v,
    long[::1] adj_e,
    long[::1] ivl_ptr,
    double[::1] ivl_on,
    double[::1] ivl_off,
    double[::1] C,
    double[::1] R,
    cnp.uint8_t[::1] seed_flags,
    double horizon,
    long[::1] roots,
    long radius,
    long cap,
):
    cdef long n = adj_ptr.shape[0] - 1
    cdef long n_half_edges = adj_v.shape[0]
    cdef long n_roots = roots.shape[0]
    out_arr = np.full(n_roots, np.inf, dtype=np.float64)
    cdef double[::1] out = out_arr

    dist_arr = np.zeros(n, dtype=np.int64)
    stamp_arr = np.zeros(n, dtype=np.int64)
    queue_arr = np.zeros(n, dtype=np.int64)
    labels_g_arr = np.full(n, np.inf, dtype=np.float64)
    low_g_arr = np.full(n, np.inf, dtype=np.float64)
    labels_b_arr = np.full(n, np.inf, dtype=np.float64)
    low_b_arr = np.full(n, np.inf, dtype=np.float64)
    on_path_arr = np.zeros(n, dtype=np.uint8)
    path_v_arr = np.zeros(n + 1, dtype=np.int64)
    path_e_arr = np.zeros(n + 1, dtype=np.int64)
    frame_pos_arr = np.zeros(n + 1, dtype=np.int64)
    heap_val_arr = np.zeros(n_half_edges + n + 1, dtype=np.float64)
    heap_v_arr = np.zeros(n_half_edges + n + 1, dtype=np.int64)
    all_verts_arr = np.arange(n, dtype=np.int64)
    cdef long[::1] dist = dist_arr
    cdef long[::1] stamp = stamp_arr
    cdef long[::1] queue = queue_arr
    cdef double[::1] labels_g = labels_g_arr
    cdef double[::1] low_g = low_g_arr
    cdef double[::1] labels_b = labels_b_arr
    cdef double[::1] low_b = low_b_arr
    cdef double[::1] labels = labels_g
    cdef double[::1] low = low_g
    cdef cnp.uint8_t[::1] on_path = on_path_arr
    cdef long[::1] path_v = path_v_arr
    cdef long[::1] path_e = path_e_arr
    cdef long[::1] frame_pos = frame_pos_arr
    cdef double[::1] heap_val = heap_val_arr
    cdef long[::1] heap_v = heap_v_arr
    cdef long[::1] all_verts = all_verts_arr

    cdef long cur_stamp = 0
    cdef long ri, v, head, tail, x, dx, p, w, e, sp, u, i
    cdef long budget
    cdef double best, lb, val
    cdef bint overflow = False
    cdef bint have_global = False
    cdef long bad_root = -1

    with nogil:
        if radius < 0:
            label_pass(
                adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                seed_flags, labels_g, False, 0, stamp, all_verts, n,
                &heap_val[0], &heap_v[0],
            )
            lower_pass(
                adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                seed_flags, low_g, False, 0, stamp, all_verts, n,
                &heap_val[0], &heap_v[0],
            )
            have_global = True
        for ri in range(n_roots):
            v = roots[ri]
            if seed_flags[v]:
                out[ri] = 0.0
                continue
            if radius == 0:
                continue

            labels = labels_g
            low = low_g
            if radius > 0:
                cur_stamp += 1
                stamp[v] = cur_stamp
                dist[v] = 0
                queue[0] = v
                head = 0
                tail = 1
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
                    # full-graph ball: per-root labels equal the global
                    # ones, computed once and reused
                    if not have_global:
                        label_pass(
                            adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                            seed_flags, labels_g, False, 0, stamp, all_verts, n,
                            &heap_val[0], &heap_v[0],
                        )
                        lower_pass(
                            adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                            seed_flags, low_g, False, 0, stamp, all_verts, n,
                            &heap_val[0], &heap_v[0],
                        )
                        have_global = True
                else:
                    labels = labels_b
                    low = low_b
                    label_pass(
                        adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                        seed_flags, labels, True, cur_stamp, stamp, queue, tail,
                        &heap_val[0], &heap_v[0],
                    )
                    lower_pass(
                        adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off, C, R,
                        seed_flags, low, True, cur_stamp, stamp, queue, tail,
                        &heap_val[0], &heap_v[0],
                    )

            # the label is an actual feasible path value in scope, so it
            # initialises the incumbent; the DFS only finds improvements
            best = labels[v]
            budget = cap
            if low[v] == INFINITY:
                continue  # certified: no feasible path reaches v in scope

            # a prefix is pruned when composing the relaxed step from
            # low[w] along its edges (a lower bound on any completion's
            # value at v) reaches the incumbent or the horizon
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
                lb = relaxed_step(e, low[w], ivl_ptr, ivl_on, ivl_off, C)
                i = sp - 1
                while i >= 0 and lb < best and lb <= horizon:
                    lb = relaxed_step(path_e[i], lb, ivl_ptr, ivl_on, ivl_off, C)
                    i -= 1
                if lb >= best or lb > horizon:
                    continue
                if budget == 0:
                    for i in range(sp + 1):
                        on_path[path_v[i]] = 0
                    overflow = True
                    bad_root = v
                    break
                budget -= 1
                path_e[sp] = e
                path_v[sp + 1] = w
                if seed_flags[w]:
                    val = eval_path(&path_v[0], &path_e[0], sp + 1,
                                    ivl_ptr, ivl_on, ivl_off, C, R)
                    if val < best:
                        best = val
                sp += 1
                frame_pos[sp] = adj_ptr[w]
                on_path[w] = 1
            if overflow:
                break
            out[ri] = best

    if overflow:
        raise PathBudgetExceeded(
            f"path budget exhausted at root {bad_root} (cap={cap})"
        )
    return out_arr


def der_root_samples(
    cnp.uint64_t[::1] run_seeds,
    long depth,
    double offspring_mean,
    double horizon,
    double rho,
    int di_kind, double di_a, double di_b,
    int dr_kind, double dr_a, double dr_b,
    long cap,
):
    cdef long n_runs = run_seeds.shape[0]
    t_arr = np.full(n_runs, np.inf, dtype=np.float64)
    r_arr = np.zeros(n_runs, dtype=np.float64)
    cdef double[::1] t_out = t_arr
    cdef double[::1] r_out = r_arr

    cdef long max_d = depth + 1
    fh_arr = np.zeros(max_d, dtype=np.uint64)
    fk_arr = np.zeros(max_d, dtype=np.int64)
    fn_arr = np.zeros(max_d, dtype=np.int64)
    pon_arr = np.zeros(max_d, dtype=np.float64)
    poff_arr = np.zeros(max_d, dtype=np.float64)
    pc_arr = np.zeros(max_d, dtype=np.float64)
    pr_arr = np.zeros(max_d, dtype=np.float64)
    cdef cnp.uint64_t[::1] f_handle = fh_arr
    cdef long[::1] f_k = fk_arr
    cdef long[::1] f_next = fn_arr
    cdef double[::1] pon = pon_arr
    cdef double[::1] poff = poff_arr
    cdef double[::1] pc = pc_arr
    cdef double[::1] pr = pr_arr

    cdef long ri, sp, idx, d, j, budget
    cdef u64 h0, hc, es, ss, css, ces
    cdef double r_root, best, t_on, t_off, c_edge, r_child, lb, val
    cdef double I, s0, cand
    cdef bint infected, failed
    cdef bint overflow = False

    with nogil:
        for ri in range(n_runs):
            h0 = mix64((<u64> run_seeds[ri]) ^ ROOT_SALT)
            es = mix64(h0 ^ EPI_SALT)
            r_root = sample_dist(&es, dr_kind, dr_a, dr_b)
            r_out[ri] = r_root
            if stream_uniform(&es) <= rho:
                t_out[ri] = 0.0
                continue
            if depth == 0:
                continue

            best = INFINITY
            budget = cap
            ss = mix64(h0 ^ STRUCT_SALT)
            f_handle[0] = h0
            f_k[0] = stream_poisson(&ss, offspring_mean)
            f_next[0] = 0
            sp = 0
            while sp >= 0:
                if f_next[sp] >= f_k[sp]:
                    sp -= 1
                    continue
                idx = f_next[sp]
                f_next[sp] = idx + 1
                hc = mix64((<u64> f_handle[sp]) ^ ((<u64> (idx + 1)) * 0xD1B54A32D192ED03ULL))
                css = mix64(hc ^ STRUCT_SALT)
                if stream_uniform(&css) <= 1.0 / (1.0 + horizon):
                    t_on = 0.0
                else:
                    t_on = horizon * stream_uniform(&css)
                t_off = t_on + stream_exponential(&css, 1.0)
                if t_off > horizon:
                    t_off = horizon
                ces = mix64(hc ^ EPI_SALT)
                c_edge = sample_dist(&ces, di_kind, di_a, di_b)
                r_child = sample_dist(&ces, dr_kind, dr_a, dr_b)
                infected = stream_uniform(&ces) <= rho
                if not (c_edge < r_child):
                    continue
                # compose the relaxed step up the fixed root path: lower
                # bound on what any seed below this child delivers at root
                lb = tree_relax(t_on, t_off, c_edge, 0.0)
                j = sp
                while j >= 1 and lb < best and lb <= horizon:
                    lb = tree_relax(pon[j], poff[j], pc[j], lb)
                    j -= 1
                if lb >= best or lb > horizon:
                    continue
                if budget == 0:
                    overflow = True
                    break
                budget -= 1
                d = sp + 1
                pon[d] = t_on
                poff[d] = t_off
                pc[d] = c_edge
                pr[d] = r_child
                if infected:
                    I = 0.0
                    failed = False
                    for j in range(d, 0, -1):
                        if pon[j] <= I and I <= poff[j]:
                            s0 = I
                        elif pon[j] > I:
                            s0 = pon[j]
                        else:
                            failed = True
                            break
                        cand = s0 + pc[j]
                        if cand > I + pr[j]:
                            failed = True
                            break
                        if not (pon[j] <= cand and cand <= poff[j]):
                            failed = True
                            break
                        I = cand
                    if not failed and I < best:
                        best = I
                if d < depth:
                    sp += 1
                    f_handle[sp] = hc
                    f_k[sp] = stream_poisson(&css, offspring_mean)
                    f_next[sp] = 0
            if overflow:
                break
            t_out[ri] = best

    if overflow:
        raise PathBudgetExceeded(f"path budget exhausted (cap={cap})")
    return t_arr, r_arr
