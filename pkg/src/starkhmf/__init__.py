"""Numerical checks relating Stark units to period integrals of weight one Hilbert modular forms."""

__version__ = "0.1.0"
