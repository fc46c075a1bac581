"""Limiting spectral distributions of sparse inhomogeneous random graphs."""

__version__ = "0.1.0"
