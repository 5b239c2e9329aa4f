"""State representations and metrics for the three model state spaces.

States are plain hashable Python values so they can key a
:class:`~ergodiag.markov.SparseDistribution`:

* dyadic chain: ``int`` equal to ``0`` or ``2**i``;
* IFS on the half-line times the circle: :class:`TorusPoint`;
* lattice counterexample: :class:`LatticeTriple`, with ``k = math.inf`` allowed;
* coupled chains: a 2-tuple of states.

Metrics accept either single states or numpy arrays of encoded states
(shape ``(n,)`` for scalar states, ``(n, 2)`` for torus points) so that the
same object serves exact and Monte Carlo code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# dyadic states {0} U {2^i}
# ---------------------------------------------------------------------------

def dyadic(exponent: int | None) -> int:
    """Return the dyadic state ``2**exponent``, or ``0`` for ``None``."""
    if exponent is None:
        return 0
    if int(exponent) != exponent or exponent < 0:
        raise ValueError(f"dyadic exponent must be a nonnegative integer, got {exponent!r}")
    return 1 << int(exponent)


def is_dyadic(x: Any) -> bool:
    if isinstance(x, bool):
        return False
    if isinstance(x, (int, np.integer)):
        x = int(x)
        return x == 0 or (x > 0 and x & (x - 1) == 0)
    if isinstance(x, float) and x.is_integer():
        return is_dyadic(int(x))
    return False


def dyadic_exponent(x: int) -> int | None:
    """Inverse of :func:`dyadic`; ``None`` marks the zero state."""
    if not is_dyadic(x):
        raise ValueError(f"{x!r} is not a dyadic state")
    x = int(x)
    return None if x == 0 else x.bit_length() - 1


# ---------------------------------------------------------------------------
# half-line x circle
# ---------------------------------------------------------------------------

def wrap_angle(y):
    """Reduce angles into ``[0, 2*pi)``; works on scalars and arrays."""
    w = np.mod(y, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    w = np.where(w >= TWO_PI, 0.0, w)
    if np.ndim(w) == 0:
        return float(w)
    return w


class TorusPoint(NamedTuple):
    x: float
    y: float

    @classmethod
    def make(cls, x: float, y: float) -> "TorusPoint":
        if x < 0:
            raise ValueError(f"x-component must be nonnegative, got {x}")
        return cls(float(x), wrap_angle(float(y)))


# ---------------------------------------------------------------------------
# lattice triples h(i, j, k)
# ---------------------------------------------------------------------------

class LatticeTriple(NamedTuple):
    i: int
    j: int
    k: float  # positive int or math.inf

    @property
    def height(self) -> float:
        """The nonzero sequence entry ``2**-k`` (``0`` when ``k`` is infinite)."""
        return 0.0 if math.isinf(self.k) else 2.0 ** (-self.k)

    @classmethod
    def make(cls, i: int, j: int, k: float) -> "LatticeTriple":
        if i < 1 or j < 0:
            raise ValueError(f"need i >= 1 and j >= 0, got ({i}, {j}, {k})")
        if not (math.isinf(k) and k > 0) and (int(k) != k or k < 1):
            raise ValueError(f"k must be a positive integer or inf, got {k!r}")
        return cls(int(i), int(j), k if math.isinf(k) else int(k))


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metric:
    """A named distance function; calling the metric evaluates it."""

    name: str
    distance: Callable[[Any, Any], Any]

    def __call__(self, a, b):
        return self.distance(a, b)


def _abs_distance(a, b):
    if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
        # exact integer difference before the float conversion
        return float(abs(int(a) - int(b)))
    return np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def arc_distance(y1, y2):
    """Geodesic distance on the circle of circumference ``2*pi``."""
    d = np.mod(np.abs(np.asarray(y1, dtype=float) - np.asarray(y2, dtype=float)), TWO_PI)
    d = np.minimum(d, TWO_PI - d)
    return float(d) if np.ndim(d) == 0 else d


def _torus_distance(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.abs(a[..., 0] - b[..., 0]) + arc_distance(a[..., 1], b[..., 1])
    return float(d) if np.ndim(d) == 0 else d


def _lattice_linf(a: LatticeTriple, b: LatticeTriple) -> float:
    # sup-norm distance between the sequences h(i, j, k) in l^infinity
    di = abs(a.i - b.i)
    if a.j == b.j:
        dh = abs(a.height - b.height)
    else:
        dh = max(a.height, b.height)
    return float(max(di, dh))


def _lattice_index(a: LatticeTriple, b: LatticeTriple) -> float:
    return float(abs(a.i - b.i) + abs(a.j - b.j) + abs(a.height - b.height))


ABS = Metric("abs", _abs_distance)
TORUS_PRODUCT = Metric("half-line x circle (sum)", _torus_distance)
LATTICE_LINF = Metric("lattice sup-norm", _lattice_linf)
LATTICE_INDEX = Metric("lattice index l1", _lattice_index)
DISCRETE = Metric("discrete", lambda a, b: 0.0 if a == b else 1.0)
