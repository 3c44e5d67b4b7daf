"""Randers and Fermat metrics: geodesics, non-symmetric distances and causal sets."""

__version__ = "0.1.0"
