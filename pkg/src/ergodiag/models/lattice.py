"""Lattice chain on triples ``(i, j, k)`` without an invariant measure.

From ``(i, j, k)`` the chain moves to

* ``(i, j+1, k+1)`` with probability ``p1(k)``,
* ``(i+1, j+1, k)`` with probability ``p2(i, k)``,
* ``(1, j+1, 1)`` otherwise.

The second coordinate increases by one at every step, so mass leaves every
bounded set of the index metric.  The default ``p1(k) = 1 - 2**-k`` and
``p2(i, k) = 2**(-k-i-1)`` are one admissible choice, not a canonical one.
"""

from __future__ import annotations

import math

import numpy as np

from ..families import lip_bounded_family, supnorm_family
from ..markov import CountableKernel, SamplingKernel
from ..states import LATTICE_INDEX, LATTICE_LINF, LatticeTriple
from .base import ModelDescriptor


def default_p1(k):
    return 1.0 if math.isinf(k) else 1.0 - 2.0 ** (-k)


def default_p2(i, k):
    return 0.0 if math.isinf(k) else 2.0 ** (-k - i - 1)


def _make_row(p1, p2):
    def row(s):
        i, j, k = s
        a = float(p1(k))
        b = float(p2(i, k))
        if a < 0 or b < 0 or a + b > 1 + 1e-12:
            raise ValueError(f"p1(k) + p2(i, k) must lie in [0, 1]; got {a} + {b} at (i, k) = ({i}, {k})")
        out = [(LatticeTriple(i, j + 1, k + 1), a), (LatticeTriple(i + 1, j + 1, k), b),
               (LatticeTriple(1, j + 1, 1), max(0.0, 1.0 - a - b))]
        return [(t, p) for t, p in out if p > 0]
    return row


def _make_step(p1, p2):
    vp1 = np.vectorize(lambda k: float(p1(k)), otypes=[float])
    vp2 = np.vectorize(lambda i, k: float(p2(i, k)), otypes=[float])

    def step(states, rng):
        i, j, k = states[:, 0], states[:, 1], states[:, 2]
        a = vp1(k)
        b = vp2(i, k)
        u = rng.random(len(states))
        out = np.empty_like(states)
        up = u < a
        side = (~up) & (u < a + b)
        reset = ~(up | side)
        out[:, 0] = np.where(side, i + 1, np.where(reset, 1, i))
        out[:, 1] = j + 1
        out[:, 2] = np.where(up, k + 1, np.where(reset, 1, k))
        return out
    return step


def _parse(text: str) -> LatticeTriple:
    parts = [p.strip() for p in text.replace(";", ",").split(",")]
    if len(parts) != 3:
        raise ValueError("lattice states are written 'i,j,k' (k may be 'inf')")
    return LatticeTriple.make(int(parts[0]), int(parts[1]), math.inf if parts[2] == "inf" else int(parts[2]))


def _encode(s):
    return [s.i, s.j, "inf" if math.isinf(s.k) else s.k]


def _coord(s):
    a = np.asarray(s, dtype=float)
    return a[..., 0] + np.where(np.isinf(a[..., 2]), 0.0, 2.0 ** -np.where(np.isinf(a[..., 2]), 0.0, a[..., 2]))


DEFAULTS = {
    "grid": {"t_grid": tuple(range(1, 61))},
    "z": LatticeTriple(1, 0, math.inf),
    "r_list": (0.5, 0.25, 0.125),
    "x": LatticeTriple(1, 0, 1),
}


def lattice_model(p1=default_p1, p2=default_p2) -> ModelDescriptor:
    kernel = CountableKernel(_make_row(p1, p2), name="lattice")
    sampler = SamplingKernel(step=_make_step(p1, p2),
                             encode=lambda s: np.array([s[0], s[1], s[2]], dtype=float),
                             decode=lambda v: LatticeTriple.make(int(v[0]), int(v[1]), v[2] if math.isinf(v[2]) else int(v[2])),
                             name="lattice")
    return ModelDescriptor(
        id="lattice",
        description="lattice chain with a drifting coordinate (no invariant measure)",
        metric=LATTICE_LINF,
        V=lambda s: float(s[1]),
        countable=kernel,
        sampler=sampler,
        has_invariant=False,
        oracles={"j_after": lambda s, n: s[1] + n, "index_metric": LATTICE_INDEX},
        probes=(LatticeTriple(1, 0, 1), LatticeTriple(2, 0, 1), LatticeTriple(1, 0, 5)),
        base_point=LatticeTriple(1, 0, math.inf),
        coord=_coord,
        parse_state=_parse,
        encode_state=_encode,
        families=lambda: [supnorm_family(_coord), lip_bounded_family(LATTICE_LINF, [LatticeTriple(1, 0, math.inf)], r=1.0)],
        defaults=DEFAULTS,
    )
