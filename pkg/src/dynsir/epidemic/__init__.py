from .marks import Dist, EpidemicMarks, sample_marks
from .curves import EpidemicCurve, InfectionTimes, default_grid
from .forward import forward_simulate
from .backward import backward_curve, backward_infection_time, backward_times

__all__ = [
    "Dist",
    "EpidemicMarks",
    "sample_marks",
    "EpidemicCurve",
    "InfectionTimes",
    "default_grid",
    "forward_simulate",
    "backward_curve",
    "backward_infection_time",
    "backward_times",
]
