"""Blockmodeling, network evolution, and relative fit to core-cohesive structure."""

__version__ = "0.1.0"
