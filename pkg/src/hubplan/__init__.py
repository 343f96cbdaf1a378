"""Energy-hub low-carbon planning: models, solvers and search heuristics."""

__version__ = "0.1.0"
