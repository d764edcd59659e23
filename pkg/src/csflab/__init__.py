"""Curve shortening flow with radial ends: simulation, exact solutions and verification."""

__version__ = "0.1.0"
