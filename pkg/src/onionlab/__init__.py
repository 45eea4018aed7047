"""Convex hull peeling of random point sets and its parabolic scaling limit."""

__version__ = "0.1.0"
