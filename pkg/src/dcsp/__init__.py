"""Distributed constraint satisfaction on anonymous synchronous networks."""

__version__ = "0.1.0"
