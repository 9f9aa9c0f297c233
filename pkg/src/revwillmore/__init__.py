"""Willmore flow and minimization for clamped cylindrical surfaces of revolution."""

__version__ = "0.1.0"
