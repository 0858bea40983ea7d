"""Weighted random permutations with restricted cycle lengths."""

__version__ = "0.1.0"
