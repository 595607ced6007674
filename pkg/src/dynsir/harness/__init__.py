from .config import ExperimentConfig
from .runner import ComparisonReport, compare, run_graph_experiment, run_limit_experiment
from .svg import render_svg

__all__ = [
    "ExperimentConfig",
    "ComparisonReport",
    "compare",
    "run_graph_experiment",
    "run_limit_experiment",
    "render_svg",
]
