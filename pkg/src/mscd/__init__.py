"""Multi-scale overlapping community detection by local fitness optimization."""

__version__ = "0.1.0"
