"""Exact engine for affine Springer fiber counts and orbital integrals."""

__version__ = "0.1.0"
