"""Ergodicity diagnostics for Markov chains.

Exact propagation of finitely supported laws, Monte Carlo path estimators,
transport and weighted total-variation distances, independent couplings, and
verdict-producing checks for lower bound, eventual continuity and uniform
integrability conditions.
"""

__version__ = "0.1.0"
