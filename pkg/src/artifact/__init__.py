"""Regularized theta lifts on even lattices."""

__version__ = "0.1.0"
