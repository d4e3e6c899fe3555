"""Stationary densities, generalized inverses and mean hitting times for finite quantum Markov chains."""

__version__ = "0.1.0"
