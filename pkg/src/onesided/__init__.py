"""Exact grid laboratory for one-sided weights, maximal operators and commutators."""

from ._backend import BACKEND

__all__ = ["BACKEND", "__version__"]

__version__ = "0.1.0"
