"""Active learning of Mealy-machine models of a QUIC handshake server."""

from .lstar import LearnStats, LearningError, learn
from .mealy import MealyMachine, equivalent, minimize, run, step
from .dot import from_dot, to_dot

__all__ = [
    "LearnStats", "LearningError", "MealyMachine", "equivalent", "from_dot", "learn",
    "minimize", "run", "step", "to_dot",
]
