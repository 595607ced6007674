"""Experiment configuration (JSON-compatible) and run manifests."""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path


def default_workers() -> int:
    env = os.environ.get("DYNSIR_WORKERS")
    if env:
        return max(1, int(env))
    return 1


@dataclass
class ExperimentConfig:
    model: dict
    rho: float
    d_i: dict
    d_r: dict
    radius: int | None = 5
    depth: int = 5
    grid_points: int = 200
    runs: int = 200
    seed: int = 0
    method: str = "backward"  # or "forward"
    roots_per_run: int | None = None
    trees_per_run: int = 100
    workers: int | None = None
    cap: int = 10**6
    engine: str | None = None  # None/auto, "c", "py"

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.method not in ("backward", "forward"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def horizon(self) -> float:
        return float(self.model["T"])

    def effective_workers(self) -> int:
        return self.workers if self.workers is not None else default_workers()

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @staticmethod
    def from_json(source) -> "ExperimentConfig":
        if hasattr(source, "read"):
            payload = json.load(source)
        elif isinstance(source, (str, Path)) and os.path.exists(str(source)):
            with open(source) as fh:
                payload = json.load(fh)
        else:
            payload = json.loads(source)
        return ExperimentConfig(**payload)


def write_manifest(out_dir, config: ExperimentConfig | dict, extra: dict | None = None) -> Path:
    from .. import __version__, engine

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": asdict(config) if isinstance(config, ExperimentConfig) else config,
        "version": __version__,
        "engine": "compiled" if engine.HAVE_COMPILED else "python",
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        payload.update(extra)
    path = out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return path
