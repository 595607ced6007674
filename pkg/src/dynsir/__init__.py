"""SIR epidemics on dynamic random graphs and their time-marked union limits."""

__version__ = "0.1.0"

from .graphs import (
    DynamicGraph,
    MarkSeq,
    RootedBall,
    TimeMarkedUnionGraph,
    dump_graph,
    edge_status,
    load_graph,
    load_union_graph,
    rooted_ball,
    snapshot,
    union_graph,
)
from .engine import HAVE_COMPILED, PathBudgetExceeded

__all__ = [
    "DynamicGraph",
    "MarkSeq",
    "RootedBall",
    "TimeMarkedUnionGraph",
    "dump_graph",
    "edge_status",
    "load_graph",
    "load_union_graph",
    "rooted_ball",
    "snapshot",
    "union_graph",
    "HAVE_COMPILED",
    "PathBudgetExceeded",
    "__version__",
]
