"""Numerical laboratory for conformal Gauss maps and Bryant's quartic of surfaces in R³."""

__version__ = "1.0.0"
