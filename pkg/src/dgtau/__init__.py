"""Anisotropic truncation-error estimation for a 2D Navier-Stokes DGSEM solver."""

__version__ = "0.1.0"
