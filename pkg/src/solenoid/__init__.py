"""Exactly divergence-free fields by convex integration, with Born-Infeld
initial data and machine-checkable certificates."""

__version__ = "0.1.0"
