"""Dyadic laboratory for sparse operators, Orlicz maximal functions, and
weighted weak-type inequalities, with a randomized extremal search."""

__version__ = "0.1.0"
