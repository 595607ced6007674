"""Epidemic marks: initial statuses, recovery times, edge transmission times."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graphs import TimeMarkedUnionGraph
from ..rng import spawn_rng
from .._engine_py import DIST_CONSTANT, DIST_EXP, DIST_UNIFORM


@dataclass(frozen=True)
class Dist:
    """Tiny distribution spec: exp(rate), uniform(lo, hi) or constant."""

    kind: str
    a: float
    b: float = 0.0

    @staticmethod
    def exponential(rate: float) -> "Dist":
        return Dist("exp", float(rate))

    @staticmethod
    def uniform(lo: float, hi: float) -> "Dist":
        return Dist("uniform", float(lo), float(hi))

    @staticmethod
    def constant(value: float) -> "Dist":
        return Dist("constant", float(value))

    @staticmethod
    def from_spec(spec) -> "Dist":
        if isinstance(spec, Dist):
            return spec
        if isinstance(spec, dict):
            kind = spec.get("kind")
            if kind == "exp":
                return Dist.exponential(spec["rate"])
            if kind == "uniform":
                return Dist.uniform(spec["lo"], spec["hi"])
            if kind == "constant":
                return Dist.constant(spec["value"])
        raise ValueError(f"unsupported distribution spec {spec!r}")

    def to_spec(self) -> dict:
        if self.kind == "exp":
            return {"kind": "exp", "rate": self.a}
        if self.kind == "uniform":
            return {"kind": "uniform", "lo": self.a, "hi": self.b}
        return {"kind": "constant", "value": self.a}

    @property
    def kind_code(self) -> int:
        return {"exp": DIST_EXP, "uniform": DIST_UNIFORM, "constant": DIST_CONSTANT}[
            self.kind
        ]

    @property
    def continuous(self) -> bool:
        return self.kind in ("exp", "uniform")

    def mean(self) -> float:
        if self.kind == "exp":
            return 1.0 / self.a
        if self.kind == "uniform":
            return 0.5 * (self.a + self.b)
        return self.a

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "exp":
            return rng.exponential(1.0 / self.a, size=size)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size=size)
        if size is None:
            return self.a
        return np.full(size, self.a)


@dataclass
class EpidemicMarks:
    """Per-vertex status/recovery plus one transmission time per union edge.

    ``transmission[e]`` is shared by both directions of edge ``e`` (indexed
    as in the union graph's sorted edge order).
    """

    initially_infected: np.ndarray
    recovery: np.ndarray
    transmission: np.ndarray
    rho: float

    @property
    def n(self) -> int:
        return len(self.recovery)

    def validate(self, union: TimeMarkedUnionGraph) -> None:
        if self.n != union.n or len(self.transmission) != union.n_edges:
            raise ValueError("marks do not match the graph dimensions")
        if np.any(self.recovery < 0) or np.any(self.transmission < 0):
            raise ValueError("negative times in epidemic marks")


def sample_marks(
    union: TimeMarkedUnionGraph, rho: float, d_i, d_r, seed
) -> EpidemicMarks:
    """Independent draws per vertex/edge; deterministic under the seed."""
    if not (0.0 < rho <= 1.0):
        raise ValueError(f"rho={rho} outside (0, 1]")
    d_i = Dist.from_spec(d_i)
    d_r = Dist.from_spec(d_r)
    if not d_i.continuous:
        raise ValueError("transmission-time distribution must be continuous")
    rng = spawn_rng(seed, "epidemic-marks")
    status = rng.random(union.n) < rho
    recovery = np.asarray(d_r.sample(rng, union.n), dtype=np.float64)
    transmission = np.asarray(d_i.sample(rng, union.n_edges), dtype=np.float64)
    return EpidemicMarks(status, recovery, transmission, float(rho))
