"""Engine selection: compiled kernel when available, pure Python otherwise.

Both implementations share traversal order, float arithmetic and random
streams, so swapping them never changes results, only speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine_py

try:
    from . import _engine_c
except ImportError:  # compiled extension not built
    _engine_c = None

DEFAULT_IMPL = _engine_c if _engine_c is not None else _engine_py
HAVE_COMPILED = _engine_c is not None


class PathBudgetExceeded(RuntimeError):
    """Per-root path-extension budget exhausted (resource error, not a result)."""


def get_impl(name: str | None = None):
    if name in (None, "auto"):
        return DEFAULT_IMPL
    if name in ("c", "compiled"):
        if _engine_c is None:
            raise RuntimeError("compiled engine requested but not built")
        return _engine_c
    if name in ("py", "python"):
        return _engine_py
    raise ValueError(f"unknown engine {name!r}")


@dataclass
class PreparedGraph:
    """Flat arrays consumed by the kernels, adjacency sorted by C per vertex."""

    adj_ptr: np.ndarray
    adj_v: np.ndarray
    adj_e: np.ndarray
    ivl_ptr: np.ndarray
    ivl_on: np.ndarray
    ivl_off: np.ndarray
    C: np.ndarray
    R: np.ndarray
    seed_flags: np.ndarray
    horizon: float
    n: int


def prepare(union, marks) -> PreparedGraph:
    """Bundle a union graph and epidemic marks for the backward kernels.

    Adjacency is re-sorted by ascending transmission time so the search finds
    small-value paths early (an ordering heuristic, no effect on results).
    """
    adj_ptr, adj_v, adj_e, ivl_ptr, ivl_on, ivl_off = union.csr()
    C = np.ascontiguousarray(marks.transmission, dtype=np.float64)
    if len(C) != union.n_edges:
        raise ValueError("marks do not cover the union graph edges")
    seg = np.repeat(np.arange(union.n, dtype=np.int64), np.diff(adj_ptr))
    order = np.lexsort((C[adj_e], seg))
    return PreparedGraph(
        adj_ptr=np.ascontiguousarray(adj_ptr, dtype=np.int64),
        adj_v=np.ascontiguousarray(adj_v[order], dtype=np.int64),
        adj_e=np.ascontiguousarray(adj_e[order], dtype=np.int64),
        ivl_ptr=np.ascontiguousarray(ivl_ptr, dtype=np.int64),
        ivl_on=np.ascontiguousarray(ivl_on, dtype=np.float64),
        ivl_off=np.ascontiguousarray(ivl_off, dtype=np.float64),
        C=C,
        R=np.ascontiguousarray(marks.recovery, dtype=np.float64),
        seed_flags=np.ascontiguousarray(
            marks.initially_infected.astype(np.uint8)
        ),
        horizon=float(union.horizon),
        n=union.n,
    )


def run_backward(prepared: PreparedGraph, roots, radius, cap, impl=None) -> np.ndarray:
    """Infection times T(v) for the given roots; radius None means unbounded."""
    mod = get_impl(impl) if not hasattr(impl, "backward_times") else impl
    r = -1 if radius is None else int(radius)
    roots = np.ascontiguousarray(roots, dtype=np.int64)
    try:
        return mod.backward_times(
            prepared.adj_ptr,
            prepared.adj_v,
            prepared.adj_e,
            prepared.ivl_ptr,
            prepared.ivl_on,
            prepared.ivl_off,
            prepared.C,
            prepared.R,
            prepared.seed_flags,
            prepared.horizon,
            roots,
            r,
            int(cap),
        )
    except mod.PathBudgetExceeded as exc:
        raise PathBudgetExceeded(str(exc)) from None


def run_der_limit(
    run_seeds, depth, offspring_mean, horizon, rho, d_i, d_r, cap, impl=None
):
    """(T_root, R_root) samples on the lazily sampled DER limit tree."""
    mod = get_impl(impl) if not hasattr(impl, "der_root_samples") else impl
    seeds = np.ascontiguousarray(run_seeds, dtype=np.uint64)
    try:
        return mod.der_root_samples(
            seeds,
            int(depth),
            float(offspring_mean),
            float(horizon),
            float(rho),
            d_i.kind_code,
            d_i.a,
            d_i.b,
            d_r.kind_code,
            d_r.a,
            d_r.b,
            int(cap),
        )
    except mod.PathBudgetExceeded as exc:
        raise PathBudgetExceeded(str(exc)) from None
