"""Lyapunov-irregular wandering rectangles of planar piecewise expanding maps."""
__version__ = "0.1.0"
