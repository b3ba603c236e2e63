"""Numerical verification toolkit for collision-kernel ellipticity
under pressure and moment bounds."""

__version__ = "0.1.0"
