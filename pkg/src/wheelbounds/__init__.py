"""Exact bounds and optimal wheel assemblages for 2-D three-material composites."""

__version__ = "0.1.0"
