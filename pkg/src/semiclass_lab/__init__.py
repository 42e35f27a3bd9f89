"""Numerical laboratory for semiclassical quantizations of mixing-zone symbols."""

__version__ = "0.1.0"
