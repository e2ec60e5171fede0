"""Bilevel day-ahead retail pricing with household demand response."""

__version__ = "0.1.0"
