"""Closed-loop traffic behavior simulation and evaluation toolkit."""

__version__ = "0.1.0"
