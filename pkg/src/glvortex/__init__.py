"""Ginzburg-Landau vortices, renormalized energy and conformal frame flows on planar domains."""

__version__ = "0.1.0"
