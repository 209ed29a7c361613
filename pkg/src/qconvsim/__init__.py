"""Simulation and estimation tools for an on-chip time-bin to path qubit converter."""

__version__ = "0.1.0"
