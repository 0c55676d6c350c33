from . import aggregate, estimate, experiment, simulate

__all__ = ["estimate", "aggregate", "experiment", "simulate"]
