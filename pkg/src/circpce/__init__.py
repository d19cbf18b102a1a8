"""Stochastic expansions with random inputs on the unit circle."""

__version__ = "0.1.0"
