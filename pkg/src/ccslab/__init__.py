"""Chern-Weil, transgression and mod-Z character computations on grid tori."""

__version__ = "0.1.0"
