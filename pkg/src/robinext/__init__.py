"""Negative Robin eigenvalues on the exterior of planar star-shaped domains."""

__version__ = "0.1.0"
