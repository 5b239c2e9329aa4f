"""Absorbing dyadic chain on ``{0} U {2**i}`` and its heavy-tailed start.

From ``2**i`` the chain moves to ``0`` or to ``2**(i+1)`` with probability
one half each, and ``0`` is absorbing.  ``V(x) = x`` is a martingale, so
the chain converges in total variation to ``delta_0`` while every first
moment stays put.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..families import alpha_family, growth_family, lip_bounded_family, supnorm_family, weighted_family
from ..markov import CountableKernel, SamplingKernel, SparseDistribution
from ..states import ABS, dyadic, is_dyadic
from .base import ModelDescriptor

ZETA2_INV = 6.0 / math.pi ** 2


def _row(x):
    if not is_dyadic(x):
        raise ValueError(f"{x!r} is not a dyadic state")
    x = int(x)
    if x == 0:
        return [(0, 1.0)]
    return [(0, 0.5), (2 * x, 0.5)]


def _step(states, rng):
    u = rng.random(len(states))
    return np.where((states == 0) | (u < 0.5), 0.0, 2.0 * states)


def V(x):
    return np.asarray(x, dtype=float) if not isinstance(x, int) else float(x)


# closed forms -------------------------------------------------------------

def n_step_law(i: int, n: int) -> SparseDistribution:
    """Law of the chain after ``n`` steps from ``2**i``."""
    if n == 0:
        return SparseDistribution.point(dyadic(i))
    q = 2.0 ** -n
    return SparseDistribution({0: 1.0 - q, dyadic(i + n): q})


def moment(alpha: float, i: int, n: int) -> float:
    """``<V**alpha, P_n^* delta_{2**i}> = 2**(alpha*i) * 2**(-(1-alpha)*n)`` (``alpha > 0``)."""
    if alpha == 0:
        return 1.0
    return 2.0 ** (alpha * i - (1.0 - alpha) * n)


def tv_to_zero(n: int) -> float:
    return 2.0 ** (1 - n) if n > 0 else 2.0


def coupled_survival(n: int) -> float:
    """``P(tau > n)`` for two independent copies from ``(2, 2)`` and the target ``{0}``."""
    q = 2.0 ** -n
    return 1.0 - (1.0 - q) ** 2


def ui_tail(alpha: float, i: int, K: float, n: int) -> float:
    """``E[V**alpha(X_n); V**alpha(X_n) >= K]`` from ``2**i``."""
    law = n_step_law(i, n)
    return math.fsum(w * s ** alpha for s, w in law.items() if s > 0 and s ** alpha >= K)


# heavy-tailed initial law ---------------------------------------------------

@dataclass(frozen=True)
class HeavyTail:
    """Truncation of ``nu(2**(2m)) = c / m**2`` with ``c = 6 / pi**2``.

    ``partial_sum(n, M)`` is ``S(n, M) = (c / 2**n) * sum_{m<=M} 2**m / m**2``,
    computed with exact rationals before the single multiplication by
    ``c``.  The terms satisfy ``2**m / m**2 >= 1`` for ``m >= 4``, so
    ``S(n, M) >= c (M - 3) / 2**n`` and the sums are unbounded.
    """

    M: int

    @property
    def nu(self) -> SparseDistribution:
        w = {dyadic(2 * m): ZETA2_INV / m ** 2 for m in range(1, self.M + 1)}
        return SparseDistribution.from_unnormalized(w)

    @property
    def captured_mass(self) -> float:
        return ZETA2_INV * float(sum(Fraction(1, m * m) for m in range(1, self.M + 1)))


def _series(M: int) -> Fraction:
    return sum((Fraction(2 ** m, m * m) for m in range(1, M + 1)), Fraction(0))


def partial_sum(n: int, M: int) -> float:
    return ZETA2_INV * float(_series(M) / 2 ** n)


def sqrt_moment(n: int, M: int) -> float:
    """``<V**0.5, P_n^* nu_M>`` for the unnormalized truncation.

    Each atom ``2**(2m)`` contributes ``c/m**2 * 2**m * 2**(-n/2)``.
    """
    return ZETA2_INV * float(_series(M)) * 2.0 ** (-n / 2)


def divergence_certificate(n: int = 0, thresholds=(1e2, 1e4, 1e6), M_max: int = 200) -> dict:
    """First truncation level at which ``S(n, M)`` exceeds each threshold."""
    out = {}
    acc = Fraction(0)
    prev = -1.0
    levels = list(thresholds)
    for m in range(1, M_max + 1):
        acc += Fraction(2 ** m, m * m)
        s = ZETA2_INV * float(acc / 2 ** n)
        if s <= prev:
            raise AssertionError("partial sums must increase strictly")
        prev = s
        for th in list(levels):
            if s > th:
                out[th] = (m, s)
                levels.remove(th)
        if not levels:
            break
    return out


def heavy_tail_nu(M: int = 40) -> HeavyTail:
    return HeavyTail(M)


# descriptor ---------------------------------------------------------------

def _parse(text: str) -> int:
    v = int(float(text))
    if not is_dyadic(v):
        raise ValueError(f"{text!r} is not 0 or a power of two")
    return v


def _families():
    coord = lambda s: np.asarray(s, dtype=float)
    return [
        lip_bounded_family(ABS, [0, 1, 4], r=1.0),
        supnorm_family(coord),
        growth_family(ABS, 0, p=1.0, coord=coord),
        alpha_family(0.5, V),
        alpha_family(1.0, V),
        weighted_family(V, coord),
    ]


def _neighbours(x, r):
    pool = [0] + [dyadic(i) for i in range(0, 41)]
    return [s for s in pool if 0 < abs(s - int(x)) <= r]


# atoms of weight 2**-n are pruned below 1e-15, so exact grids stop at n = 48
EXACT_STEPS = tuple(range(0, 49))

DEFAULTS = {
    "grid": {"t_grid": EXACT_STEPS},
    "cesaro_grid": {"t_grid": EXACT_STEPS[1:]},
    "evc_grid": {"t_grid": EXACT_STEPS,
                 "probe_radii": tuple(2.0 ** k for k in range(10, -4, -1))},
    "ui_grid": {"t_grid": EXACT_STEPS},
    "x": 0,
    "z": 0,
    "r_list": (0.5, 0.25, 0.125),
    "tol": 1e-5,
    "evc_tol": 1e-3,
}


def dyadic_chain() -> ModelDescriptor:
    kernel = CountableKernel(_row, name="dyadic")
    sampler = SamplingKernel(step=_step, encode=float, decode=lambda v: int(v), name="dyadic")
    return ModelDescriptor(
        id="dyadic",
        description="absorbing dyadic chain on {0} U {2^i}",
        metric=ABS,
        V=V,
        countable=kernel,
        sampler=sampler,
        invariant=SparseDistribution.point(0),
        oracles={
            "n_step_law": n_step_law,
            "moment": moment,
            "tv_to_zero": tv_to_zero,
            "w1_to_zero": lambda i, n=0: 2.0 ** i,
            "coupled_survival": coupled_survival,
            "ui_tail": ui_tail,
        },
        probes=(0, 1, 2, 4, 2 ** 10),
        base_point=0,
        coord=lambda s: np.asarray(s, dtype=float),
        parse_state=_parse,
        encode_state=int,
        families=_families,
        neighbours=_neighbours,
        defaults=DEFAULTS,
    )


def identity_chain() -> ModelDescriptor:
    """Every state is absorbing; a sanity model for the diagnostics."""
    kernel = CountableKernel(lambda x: [(x, 1.0)], name="identity")
    sampler = SamplingKernel(step=lambda s, rng: s.copy(), encode=float, decode=float, name="identity")
    return ModelDescriptor(
        id="identity",
        description="identity chain on the real line",
        metric=ABS,
        V=lambda x: np.abs(np.asarray(x, dtype=float)),
        countable=kernel,
        sampler=sampler,
        has_invariant=True,
        probes=(0.0, 1.0, 3.0),
        base_point=0.0,
        coord=lambda s: np.asarray(s, dtype=float),
        parse_state=float,
        encode_state=float,
        families=lambda: [supnorm_family(), lip_bounded_family(ABS, [0.0, 1.0], r=1.0)],
    )
