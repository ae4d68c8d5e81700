"""Numerical laboratory for non-intersecting Brownian bridges at a tacnode."""

__version__ = "0.1.0"
