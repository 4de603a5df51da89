"""Simulation, ABC fitting and model assessment for repulsive spatial point processes."""

__version__ = "0.1.0"
