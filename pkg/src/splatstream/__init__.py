"""Splat-native scene streaming and visualization toolkit."""

__version__ = "0.1.0"
