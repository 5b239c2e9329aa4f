"""Exact uniform-integrability utilities for finite families of random variables.

A family ``{xi_t}`` on a finite probability space is a matrix ``X`` of shape
``(n_t, n_omega)`` with outcome weights ``w``; ``X[t, k]`` is ``xi_t`` on
outcome ``k``.  Marginal laws are given as lists of
:class:`~ergodiag.markov.SparseDistribution` over real values.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..markov import SparseDistribution


def tail_expectation(values, weights, K: float) -> float:
    """``E[|xi|; |xi| >= K]``."""
    v = np.abs(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    return math.fsum((w * np.where(v >= K, v, 0.0)).tolist())


def family_tail(X, weights, K: float) -> float:
    """``sup_t E[|xi_t|; |xi_t| >= K]`` for a coupled family."""
    return max(tail_expectation(row, weights, K) for row in np.atleast_2d(X))


def law_tail(laws: Sequence[SparseDistribution], K: float) -> float:
    """Same supremum from marginal laws over real values."""
    return max(math.fsum(w * abs(s) for s, w in law.items() if abs(s) >= K) for law in laws)


def tail_curve(laws: Sequence[SparseDistribution], K_grid) -> np.ndarray:
    return np.array([law_tail(laws, K) for K in K_grid])


def cesaro_mixtures(laws: Sequence[SparseDistribution]) -> list[SparseDistribution]:
    """Laws of the running Cesaro mixtures ``(1/t) sum_{s<=t} law_s``."""
    out, acc = [], {}
    for t, law in enumerate(laws, start=1):
        for s, w in law.items():
            acc[s] = acc.get(s, 0.0) + w
        out.append(SparseDistribution.from_unnormalized({s: w / t for s, w in acc.items()}))
    return out


def limsup_exchange_gap(X, weights, tail_fraction: float = 0.5) -> float:
    """``max_{t in tail} E xi_t - E max_{t in tail} xi_t``; never positive."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lo = X.shape[0] - max(1, int(math.ceil(tail_fraction * X.shape[0])))
    tail = X[lo:]
    w = np.asarray(weights, dtype=float)
    lhs = max(math.fsum((w * row).tolist()) for row in tail)
    rhs = math.fsum((w * tail.max(axis=0)).tolist())
    return lhs - rhs
