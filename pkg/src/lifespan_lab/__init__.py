"""Numerical laboratory for lifespans of small-data radial 2-D quasilinear waves."""

__version__ = "0.1.0"
