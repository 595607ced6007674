"""Epidemic curves over a time grid, with Monte Carlo error bands."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

CURVE_HEADER = "t,s,i,r,s_se,i_se,r_se"


def default_grid(horizon: float, points: int = 200) -> np.ndarray:
    return np.linspace(0.0, horizon, points)


@dataclass
class InfectionTimes:
    """Per-vertex infection times; inf encodes never infected."""

    times: np.ndarray
    recovery: np.ndarray

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write("v,T,R\n")
        for v, (t, r) in enumerate(zip(self.times, self.recovery)):
            buf.write(f"{v},{'inf' if np.isinf(t) else repr(float(t))},{float(r)!r}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass
class EpidemicCurve:
    grid: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    runs: int
    s_se: np.ndarray
    i_se: np.ndarray
    r_se: np.ndarray

    def validate(self) -> None:
        total = self.s + self.i + self.r
        if np.max(np.abs(total - 1.0)) > 1e-12:
            raise ValueError("s+i+r must equal 1 on the grid")
        if np.any(np.diff(self.s) > 1e-12):
            raise ValueError("s must be non-increasing")
        if np.any(np.diff(self.r) < -1e-12):
            raise ValueError("r must be non-decreasing")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(CURVE_HEADER + "\n")
        for k in range(len(self.grid)):
            buf.write(
                f"{self.grid[k]!r},{self.s[k]!r},{self.i[k]!r},{self.r[k]!r},"
                f"{self.s_se[k]!r},{self.i_se[k]!r},{self.r_se[k]!r}\n"
            )
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @staticmethod
    def from_csv(source) -> "EpidemicCurve":
        if hasattr(source, "read"):
            text = source.read()
        else:
            try:
                with open(source) as fh:
                    text = fh.read()
            except (OSError, ValueError):
                text = source
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if lines[0] != CURVE_HEADER:
            raise ValueError(f"bad curve header {lines[0]!r}")
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
        return EpidemicCurve(
            grid=data[:, 0],
            s=data[:, 1],
            i=data[:, 2],
            r=data[:, 3],
            runs=0,
            s_se=data[:, 4],
            i_se=data[:, 5],
            r_se=data[:, 6],
        )


def sir_fractions(times, recovery, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(s, i, r) fractions: s(t) = frac{t < T}, r(t) = frac{t > T + R}."""
    times = np.asarray(times, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    n = len(times)
    t_sorted = np.sort(times)
    end_sorted = np.sort(times + np.asarray(recovery, dtype=np.float64))
    n_le = np.searchsorted(t_sorted, grid, side="right")  # T <= t
    s = 1.0 - n_le / n
    n_lt = np.searchsorted(end_sorted, grid, side="left")  # T + R < t
    r = n_lt / n
    i = 1.0 - s - r
    return s, i, r


def curve_from_samples(times, recovery, grid, runs=None) -> EpidemicCurve:
    """Curve plus binomial standard errors, treating roots as i.i.d. samples."""
    s, i, r = sir_fractions(times, recovery, grid)
    n = len(np.asarray(times))
    se = lambda p: np.sqrt(np.clip(p * (1.0 - p), 0.0, None) / n)
    return EpidemicCurve(
        grid=np.asarray(grid, dtype=np.float64),
        s=s,
        i=i,
        r=r,
        runs=runs if runs is not None else n,
        s_se=se(s),
        i_se=se(i),
        r_se=se(r),
    )


def average_curves(per_run: list[tuple[np.ndarray, np.ndarray, np.ndarray]], grid) -> EpidemicCurve:
    """Mean curve over independent runs with across-run standard errors."""
    if not per_run:
        raise ValueError("no runs to average")
    ss = np.stack([c[0] for c in per_run])
    ii = np.stack([c[1] for c in per_run])
    rr = np.stack([c[2] for c in per_run])
    nruns = len(per_run)
    sd = lambda arr: (
        arr.std(axis=0, ddof=1) / np.sqrt(nruns) if nruns > 1 else np.zeros(arr.shape[1])
    )
    return EpidemicCurve(
        grid=np.asarray(grid, dtype=np.float64),
        s=ss.mean(axis=0),
        i=ii.mean(axis=0),
        r=rr.mean(axis=0),
        runs=nruns,
        s_se=sd(ss),
        i_se=sd(ii),
        r_se=sd(rr),
    )
