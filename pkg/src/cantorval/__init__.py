"""Exact geometry of the Cantorval E_s and the laws of random redundant-digit sums."""

__version__ = "0.1.0"
