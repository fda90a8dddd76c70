"""Quasi-Poisson moduli spaces of marked surfaces, checked in exact arithmetic."""

__version__ = "0.1.0"
