"""Numerical laboratory for scale calculus on weighted coefficient spaces."""

__version__ = "0.1.0"
