"""Command-line interface.

Subcommands: generate, epidemic, limit, compare, diagnose, accept.  All
outputs land in a run directory with a manifest recording config, seeds and
versions.  `accept` exits 0/1/2 for pass/fail/error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import generators
from ..epidemic import EpidemicCurve
from ..graphs import dump_graph, union_graph
from .config import ExperimentConfig, default_workers, write_manifest
from .runner import compare, run_graph_experiment, run_limit_experiment
from .svg import render_svg


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def cmd_generate(args) -> int:
    spec = _load_json(args.config)
    g = generators.generate(spec, args.seed if args.seed is not None else spec.get("seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_graph(g, out / "graph.txt")
    with open(out / "meta.json", "w") as fh:
        json.dump(g.meta, fh, indent=2, sort_keys=True)
    write_manifest(out, spec, {"kind": "generate"})
    print(f"wrote {out / 'graph.txt'} ({len(g.edges)} union edges)")
    return 0


def cmd_epidemic(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    curve = run_graph_experiment(cfg, out_dir=args.out)
    if args.svg:
        render_svg([curve], ["graph"], Path(args.out) / "curve.svg")
    print(f"wrote {Path(args.out) / 'curve.csv'} ({cfg.runs} runs, method={cfg.method})")
    return 0


def cmd_limit(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    curve = run_limit_experiment(cfg, out_dir=args.out)
    if args.svg:
        render_svg([curve], ["limit"], Path(args.out) / "curve.svg")
    print(f"wrote {Path(args.out) / 'curve.csv'} ({cfg.runs}x{cfg.trees_per_run} trees)")
    return 0


def cmd_compare(args) -> int:
    a = EpidemicCurve.from_csv(args.curve_a)
    b = EpidemicCurve.from_csv(args.curve_b)
    report = compare(a, b, args.tolerance)
    print(report.to_json())
    if args.svg:
        render_svg([a, b], [Path(args.curve_a).stem, Path(args.curve_b).stem], args.svg)
    return 0 if report.passed else 1


def cmd_diagnose(args) -> int:
    from ..limits import sample_der_limit
    from ..metrics import convergence_diagnostic, diagnostic_csv
    from ..rng import derive_seed

    spec = _load_json(args.config)
    model = spec["model"]
    sizes = spec.get("sizes", [500, 2000])
    r = spec.get("r", 2)
    samples = spec.get("samples", 2000)
    seed = spec.get("seed", 0)
    graphs = []
    for n in sizes:
        m = dict(model)
        m["n"] = n
        graphs.append(union_graph(generators.generate(m, derive_seed(seed, "diag", n))))
    if model["model"] not in ("der", "alt_der"):
        raise SystemExit("diagnose currently supports the DER family")
    sampler = lambda i: sample_der_limit(
        model["gamma"], model["T"], r, derive_seed(seed, "diag-limit", i)
    )
    rows = convergence_diagnostic(
        graphs, sampler, r, samples, seed,
        structure_only=spec.get("structure_only", False),
        roots_per_graph=spec.get("roots_per_graph"),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    diagnostic_csv(rows, out / "diagnostic.csv")
    write_manifest(out, spec, {"kind": "diagnose"})
    for row in rows:
        print(f"n={row.n} r={row.r} tv={row.tv_distance:.4f} se={row.se:.4f}")
    return 0


def cmd_accept(args) -> int:
    from .accept import run_acceptance

    try:
        only = set(int(x) for x in args.only.split(",")) if args.only else None
        results = run_acceptance(workers=args.workers, out_dir=args.out, only=only)
    except Exception as exc:  # noqa: BLE001 - explicit error exit code
        print(f"[ERROR] acceptance suite crashed: {exc}", file=sys.stderr)
        return 2
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = [
            {
                "number": r.number,
                "name": r.name,
                "passed": r.passed,
                "observed": _jsonable(r.observed),
                "bound": _jsonable(r.bound),
                "detail": r.detail,
                "seconds": r.seconds,
            }
            for r in results
        ]
        with open(out / "acceptance_report.json", "w") as fh:
            json.dump(payload, fh, indent=2)
    return 0 if all(r.passed for r in results) else 1


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynsir", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a dynamic graph to a run directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("epidemic", help="Monte Carlo epidemic curve on sampled graphs")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(fn=cmd_epidemic)

    p = sub.add_parser("limit", help="Monte Carlo epidemic curve on limit trees")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(fn=cmd_limit)

    p = sub.add_parser("compare", help="sup-norm comparison of two curve CSVs")
    p.add_argument("curve_a")
    p.add_argument("curve_b")
    p.add_argument("--tolerance", type=float, default=0.03)
    p.add_argument("--svg")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("diagnose", help="neighborhood-distribution convergence diagnostic")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("accept", help="run the acceptance suite (exit 0/1/2)")
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(fn=cmd_accept)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
