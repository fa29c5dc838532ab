"""Percolation and random-walk laboratory for nonunimodular transitive graphs."""

__version__ = "0.1.0"
