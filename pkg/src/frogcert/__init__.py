"""Simulation and bound certification for the frog model on regular trees."""

__version__ = "0.1.0"
