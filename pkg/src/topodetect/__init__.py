"""Detectability of link and node disconnections in linear dynamical networks."""
__version__ = "0.1.0"
