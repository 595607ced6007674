"""Samplers for the four dynamic random-graph models.

All generators return a DynamicGraph over [0, T] whose ``meta`` dict records
event counts and truncations (the serialization sidecar).  Identical seeds
give bit-identical graphs.

Model summaries:

* ``gen_dynamic_er``: every pair is an independent two-state Markov chain,
  OFF->ON rate gamma/(n-gamma), ON->OFF rate 1, started from its stationary
  law (present with probability gamma/n).  Only ever-ON pairs are
  materialised: the number of such pairs is Binomial, and each trajectory is
  drawn conditioned on being ever ON.
* ``gen_alt_dynamic_er``: initial ER(gamma/n) edge set; initial edges
  alternate ON/OFF at rate 1; no other pair ever activates.
* ``gen_dynamic_rig``: groups of size k switch ON at aggregate rate
  lambda0(k) = f(k) e_k(w) / ell^(k-1) with f(k) = k! p_k and hold ON for
  Exp(1); a pair is ON whenever it shares an ON group.  Groups are
  materialised by thinning (initial counts Poisson(lambda0), fresh arrivals a
  Poisson process), never by enumerating subsets.
* ``gen_dynamic_cm``: static configuration-model pairing of half-edges,
  then rewiring events that break two uniform edges and re-pair the four
  half-edges uniformly (3 matchings, probability 1/3 each).  Events occur at
  rate alpha per edge pair slot, i.e. each individual edge is selected at
  rate 2*alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graphs import DynamicGraph, MarkSeq
from .rng import spawn_rng


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------


@dataclass
class DerConfig:
    n: int
    gamma: float
    horizon: float

    def validate(self) -> None:
        if not (0 < self.gamma < self.n):
            raise ValueError(f"need 0 < gamma < n, got gamma={self.gamma}, n={self.n}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")


@dataclass
class RigConfig:
    n: int
    horizon: float
    group_size_pmf: list[float]  # probabilities for sizes k = 2, 3, ...
    weights: object = None  # None (all 1), array, or {"kind": "constant"|...}
    k_max: int = 50
    record_groups: bool = False  # keep per-group members/intervals in meta

    def resolved_weights(self) -> np.ndarray:
        w = self.weights
        if w is None:
            return np.ones(self.n)
        if isinstance(w, dict):
            if w.get("kind") == "constant":
                return np.full(self.n, float(w["value"]))
            raise ValueError(f"unsupported weight spec {w!r}")
        w = np.asarray(w, dtype=np.float64)
        if len(w) != self.n or np.any(w <= 0):
            raise ValueError("need n positive vertex weights")
        return w

    def truncated_pmf(self) -> tuple[np.ndarray, float]:
        """(pmf over k = 2..k_eff, dropped tail mass), renormalised."""
        p = np.asarray(self.group_size_pmf, dtype=np.float64)
        if np.any(p < 0) or p.sum() <= 0:
            raise ValueError("invalid group-size pmf")
        k_eff = min(self.k_max, self.n, len(p) + 1)
        kept = p[: k_eff - 1]
        dropped = p.sum() - kept.sum()
        if kept.sum() <= 0:
            raise ValueError("group-size pmf has no mass on feasible sizes")
        return kept / kept.sum(), float(dropped / p.sum())

    def validate(self) -> None:
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.n < 2:
            raise ValueError("need n >= 2")
        self.resolved_weights()
        self.truncated_pmf()


@dataclass
class CmConfig:
    degrees: list[int]
    alpha: float
    horizon: float

    def validate(self) -> None:
        d = np.asarray(self.degrees)
        if np.any(d < 0):
            raise ValueError("degrees must be >= 0")
        if int(d.sum()) % 2 != 0:
            raise ValueError("degree sum must be even")
        if self.alpha < 0 or self.horizon < 0:
            raise ValueError("alpha and horizon must be >= 0")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _sample_distinct_codes(rng: np.random.Generator, npairs: int, k: int) -> np.ndarray:
    """k distinct integers from [0, npairs), sorted."""
    if k > npairs:
        raise ValueError("more pairs requested than exist")
    codes = np.unique(rng.integers(0, npairs, size=k))
    while len(codes) < k:
        extra = rng.integers(0, npairs, size=k - len(codes))
        codes = np.unique(np.concatenate([codes, extra]))
    return codes


def _codes_to_pairs(codes: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode triangular pair codes to (u, v) with u < v."""
    c = codes.astype(np.float64)
    u = np.floor(((2 * n - 1) - np.sqrt((2 * n - 1) ** 2 - 8 * c)) / 2).astype(np.int64)
    base = u * (2 * n - u - 1) // 2
    # float sqrt can be off by one row near boundaries
    over = base > codes
    while np.any(over):
        u[over] -= 1
        base = u * (2 * n - u - 1) // 2
        over = base > codes
    under = codes - base >= (n - 1 - u)
    while np.any(under):
        u[under] += 1
        base = u * (2 * n - u - 1) // 2
        under = codes - base >= (n - 1 - u)
    v = codes - base + u + 1
    return u, v


def _alternating_intervals(
    rng: np.random.Generator,
    start_on: np.ndarray,
    horizon: float,
    off_to_on_rate: float,
) -> list[list[tuple[float, float]]]:
    """ON/OFF trajectories from given ON-switch times until the horizon.

    Entry i starts ON at start_on[i]; ON holding times are Exp(1), OFF
    holding times Exp(off_to_on_rate).  Returns per-entry interval lists.
    """
    m = len(start_on)
    out: list[list[tuple[float, float]]] = [[] for _ in range(m)]
    idx = np.arange(m)
    t_on = np.asarray(start_on, dtype=np.float64)
    while len(idx):
        raw_off = t_on + rng.exponential(1.0, size=len(idx))
        t_off = np.minimum(raw_off, horizon)
        for j, i in enumerate(idx):
            out[i].append((t_on[j], t_off[j]))
        alive = raw_off < horizon
        if not np.any(alive):
            break
        gaps = rng.exponential(1.0 / off_to_on_rate, size=int(alive.sum()))
        nxt = raw_off[alive] + gaps
        keep = nxt < horizon
        idx = idx[alive][keep]
        t_on = nxt[keep]
    return out


# ---------------------------------------------------------------------------
# Dynamic Erdos-Renyi
# ---------------------------------------------------------------------------


def gen_dynamic_er(cfg: DerConfig, seed) -> DynamicGraph:
    cfg.validate()
    n, gamma, T = cfg.n, cfg.gamma, cfg.horizon
    rng = spawn_rng(seed, "gen-der")
    npairs = n * (n - 1) // 2
    lam_plus = gamma / (n - gamma)
    p0 = gamma / n
    p_act = -math.expm1(-lam_plus * T)
    p_ever = p0 + (1 - p0) * p_act

    k = int(rng.binomial(npairs, p_ever))
    codes = _sample_distinct_codes(rng, npairs, k)
    uu, vv = _codes_to_pairs(codes, n)

    on_at_zero = rng.random(k) < (p0 / p_ever if p_ever > 0 else 0.0)
    start = np.zeros(k)
    n_off = int((~on_at_zero).sum())
    if n_off:
        # first activation conditioned to land in (0, T]
        u = rng.random(n_off)
        start[~on_at_zero] = -np.log1p(-u * p_act) / lam_plus
    trajectories = _alternating_intervals(rng, start, T, lam_plus)

    edges = {
        (int(uu[i]), int(vv[i])): MarkSeq.from_pairs(trajectories[i])
        for i in range(k)
    }
    g = DynamicGraph(n=n, horizon=T, edges=edges)
    g.meta = {
        "model": "der",
        "gamma": gamma,
        "ever_on_pairs": k,
        "initially_on": int(on_at_zero.sum()),
    }
    return g


def gen_alt_dynamic_er(cfg: DerConfig, seed) -> DynamicGraph:
    cfg.validate()
    n, gamma, T = cfg.n, cfg.gamma, cfg.horizon
    rng = spawn_rng(seed, "gen-alt-der")
    npairs = n * (n - 1) // 2
    k = int(rng.binomial(npairs, gamma / n))
    codes = _sample_distinct_codes(rng, npairs, k)
    uu, vv = _codes_to_pairs(codes, n)
    trajectories = _alternating_intervals(rng, np.zeros(k), T, 1.0)
    edges = {
        (int(uu[i]), int(vv[i])): MarkSeq.from_pairs(trajectories[i])
        for i in range(k)
    }
    g = DynamicGraph(n=n, horizon=T, edges=edges)
    g.meta = {"model": "alt_der", "gamma": gamma, "initial_edges": k}
    return g


# ---------------------------------------------------------------------------
# Dynamic random intersection graph
# ---------------------------------------------------------------------------


def elementary_symmetric(values: np.ndarray, k_max: int) -> np.ndarray:
    """e_0..e_k_max of the given values (stable for values <= 1)."""
    e = np.zeros(k_max + 1)
    e[0] = 1.0
    for x in values:
        e[1:] += x * e[:-1]
    return e


def rig_group_rates(cfg: RigConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """(sizes k, aggregate OFF->ON rate lambda0(k), dropped pmf mass)."""
    w = cfg.resolved_weights()
    ell = float(w.sum())
    pmf, dropped = cfg.truncated_pmf()
    sizes = np.arange(2, 2 + len(pmf))
    e = elementary_symmetric(w / ell, int(sizes[-1]))
    lam0 = np.array(
        [math.factorial(int(k)) * pmf[j] * e[int(k)] * ell for j, k in enumerate(sizes)]
    )
    return sizes, lam0, dropped


def gen_dynamic_rig(cfg: RigConfig, seed) -> DynamicGraph:
    cfg.validate()
    n, T = cfg.n, cfg.horizon
    rng = spawn_rng(seed, "gen-rig")
    w = cfg.resolved_weights()
    ell = float(w.sum())
    log_w = np.log(w)
    uniform_weights = bool(np.all(w == w[0]))
    prob = None if uniform_weights else w / ell
    sizes, lam0, dropped = rig_group_rates(cfg)
    pmf, _ = cfg.truncated_pmf()

    # materialise groups: (size, start time, started ON at 0)
    groups: list[tuple[int, float]] = []
    counts_by_size = {}
    for j, k in enumerate(sizes):
        n0 = int(rng.poisson(lam0[j]))
        na = int(rng.poisson(lam0[j] * T)) if T > 0 else 0
        arr = np.sort(T * (1.0 - rng.random(na))) if na else np.zeros(0)
        counts_by_size[int(k)] = n0 + na
        groups.extend((int(k), 0.0) for _ in range(n0))
        groups.extend((int(k), float(t)) for t in arr)

    pair_intervals: dict[tuple[int, int], list[tuple[float, float]]] = {}
    ever_on_membership = np.zeros(n, dtype=np.int64)
    group_log = [] if cfg.record_groups else None
    log_f = {int(k): math.lgamma(int(k) + 1) + math.log(pmf[j]) for j, k in enumerate(sizes)}

    for k, t_start in groups:
        if uniform_weights:
            members = rng.choice(n, size=k, replace=False)
        else:
            members = rng.choice(n, size=k, replace=False, p=prob)
        lam_off = math.exp(
            log_f[k] + float(log_w[members].sum()) - (k - 1) * math.log(ell)
        )
        ivs = []
        t = t_start
        while t <= T:
            off = min(t + rng.exponential(1.0), T)
            ivs.append((t, off))
            if off >= T:
                break
            t = off + rng.exponential(1.0 / lam_off)
        if not ivs:
            continue
        ever_on_membership[members] += 1
        if group_log is not None:
            group_log.append(
                {"members": sorted(int(x) for x in members), "intervals": ivs}
            )
        for a, b in combinations(sorted(int(x) for x in members), 2):
            pair_intervals.setdefault((a, b), []).extend(ivs)

    edges = {
        pair: MarkSeq.union(ivs) for pair, ivs in pair_intervals.items()
    }
    g = DynamicGraph(n=n, horizon=T, edges=edges)
    g.meta = {
        "model": "rig",
        "k_max": int(sizes[-1]) if len(sizes) else cfg.k_max,
        "dropped_pmf_mass": dropped,
        "groups_by_size": counts_by_size,
        "lambda0": {int(k): float(x) for k, x in zip(sizes, lam0)},
        "ever_on_groups_per_vertex": ever_on_membership.tolist(),
    }
    if group_log is not None:
        g.meta["groups"] = group_log
    return g


# ---------------------------------------------------------------------------
# Configuration model with rewiring
# ---------------------------------------------------------------------------


def gen_dynamic_cm(cfg: CmConfig, seed) -> DynamicGraph:
    cfg.validate()
    degrees = np.asarray(cfg.degrees, dtype=np.int64)
    n = len(degrees)
    T = cfg.horizon
    rng = spawn_rng(seed, "gen-cm")
    ell = int(degrees.sum())
    m = ell // 2
    owner = np.repeat(np.arange(n, dtype=np.int64), degrees)

    perm = rng.permutation(ell)
    slots = [(int(perm[2 * i]), int(perm[2 * i + 1])) for i in range(m)]

    counts: dict[tuple[int, int], int] = {}
    open_at: dict[tuple[int, int], float] = {}
    closed: dict[tuple[int, int], list[tuple[float, float]]] = {}
    new_connections = np.zeros(n, dtype=np.int64)

    def pair_of(a: int, b: int):
        ua, ub = int(owner[a]), int(owner[b])
        if ua == ub:
            return None  # self-loops cannot transmit; not tracked
        return (ua, ub) if ua < ub else (ub, ua)

    def apply_delta(delta: dict, t: float) -> None:
        for pair, d in delta.items():
            if d == 0:
                continue
            old = counts.get(pair, 0)
            new = old + d
            counts[pair] = new
            if old == 0 and new > 0:
                open_at[pair] = t
            elif old > 0 and new == 0:
                closed.setdefault(pair, []).append((open_at.pop(pair), t))

    init_delta: dict = {}
    for a, b in slots:
        p = pair_of(a, b)
        if p is not None:
            init_delta[p] = init_delta.get(p, 0) + 1
    apply_delta(init_delta, 0.0)

    n_events = int(rng.poisson(cfg.alpha * m * T)) if m >= 2 else 0
    event_times = np.sort(rng.random(n_events)) * T
    probe_times = [T * f for f in (0.25, 0.5, 0.75)]
    probes_ok: list[bool] = []
    next_probe = 0

    def check_probe() -> None:
        # every half-edge must sit in exactly one slot: the per-instant
        # multigraph degree sequence is then the configured one
        seen = sorted(h for pair in slots for h in pair)
        probes_ok.append(seen == list(range(ell)))

    for t in event_times:
        while next_probe < len(probe_times) and probe_times[next_probe] < t:
            check_probe()
            next_probe += 1
        i = int(rng.integers(m))
        j = int(rng.integers(m - 1))
        if j >= i:
            j += 1
        a, b = slots[i]
        c, d = slots[j]
        matching = int(rng.integers(3))
        if matching == 0:
            new_i, new_j = (a, b), (c, d)
        elif matching == 1:
            new_i, new_j = (a, c), (b, d)
        else:
            new_i, new_j = (a, d), (b, c)
        delta: dict = {}
        for pr in (pair_of(a, b), pair_of(c, d)):
            if pr is not None:
                delta[pr] = delta.get(pr, 0) - 1
        for pr in (pair_of(*new_i), pair_of(*new_j)):
            if pr is not None:
                delta[pr] = delta.get(pr, 0) + 1
        old_partner = {a: b, b: a, c: d, d: c}
        for x, y in (new_i, new_j):
            if old_partner[x] != y:
                new_connections[owner[x]] += 1
            if old_partner[y] != x:
                new_connections[owner[y]] += 1
        slots[i] = new_i
        slots[j] = new_j
        apply_delta(delta, float(t))

    while next_probe < len(probe_times):
        check_probe()
        next_probe += 1

    for pair, start in open_at.items():
        closed.setdefault(pair, []).append((start, T))

    edges = {pair: MarkSeq.from_pairs(ivs) for pair, ivs in closed.items() if ivs}
    g = DynamicGraph(n=n, horizon=T, edges=edges)
    g.meta = {
        "model": "cm",
        "rewiring_events": n_events,
        "edge_slots": m,
        "new_connections_per_vertex": new_connections.tolist(),
        "degrees": degrees.tolist(),
        "degree_sequence_preserved": bool(all(probes_ok)) if probes_ok else True,
    }
    return g


# ---------------------------------------------------------------------------
# Config-block dispatch (JSON-compatible)
# ---------------------------------------------------------------------------


def generate(spec: dict, seed=None) -> DynamicGraph:
    """Generate from a config block {"model": ..., "n": ..., "T": ..., ...}."""
    spec = dict(spec)
    model = spec.get("model")
    if seed is None:
        seed = spec.get("seed", 0)
    if model == "der":
        return gen_dynamic_er(DerConfig(spec["n"], spec["gamma"], spec["T"]), seed)
    if model == "alt_der":
        return gen_alt_dynamic_er(DerConfig(spec["n"], spec["gamma"], spec["T"]), seed)
    if model == "rig":
        cfg = RigConfig(
            n=spec["n"],
            horizon=spec["T"],
            group_size_pmf=spec["p_k"],
            weights=spec.get("weights"),
            k_max=spec.get("k_max", 50),
        )
        return gen_dynamic_rig(cfg, seed)
    if model == "cm":
        return gen_dynamic_cm(CmConfig(spec["degrees"], spec["alpha"], spec["T"]), seed)
    raise ValueError(f"unknown model {model!r}")
