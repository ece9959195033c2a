"""Executable well-roundedness toolkit for lattice point counting in Lie groups."""

__version__ = "0.1.0"
