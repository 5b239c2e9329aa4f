"""Random iterated function system on the half-line, rotated on the circle.

The x-component jumps at the times of a rate-one Poisson clock, applying
``w1(x) = 0``, ``w2(x) = x`` or ``w3(x) = 1/x`` (``w3(0) = 0``) with
place-dependent probabilities; the angle drifts deterministically,
``y_t = y_0 + t (mod 2 pi)``.  The invariant law is ``delta_0 x Leb / 2pi``.

Because the x-component only visits ``{0, x0, 1/x0}``, its law is that of a
three-state continuous-time chain and is available in closed form through a
matrix exponential.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, linalg

from ..families import growth_family, lip_bounded_family, supnorm_family, weighted_family
from ..markov import ExactLaws, SamplingKernel, SparseDistribution
from ..states import TORUS_PRODUCT, TWO_PI, TorusPoint, wrap_angle
from .base import ModelDescriptor

DEFAULT_BINS = 4096


def probabilities(x):
    """Place-dependent weights ``(p1, p2, p3)`` of ``(w1, w2, w3)`` at ``x``."""
    x = np.asarray(x, dtype=float)
    inv = np.where(x > 1.5, 1.0 / np.where(x > 1.5, x, 1.0), 0.0)
    p1 = np.where(x < 2 / 3, x / 2, np.where(x <= 1.5, 1 / 3, inv / 2))
    p2 = np.where(x < 2 / 3, 1 - x, np.where(x <= 1.5, 1 / 3, 1 - inv))
    p3 = p1
    P = np.stack([p1, p2, p3], axis=-1)
    if np.any(P < 0) or np.any(P > 1) or np.any(np.abs(P.sum(axis=-1) - 1) > 1e-12):
        raise ValueError("IFS probabilities left [0, 1]")
    return P


def _w3(x):
    x = np.asarray(x, dtype=float)
    return np.where(x != 0, 1.0 / np.where(x != 0, x, 1.0), 0.0)


def _step(states, rng):
    x = states[:, 0]
    P = probabilities(x)
    u = rng.random(len(x))
    nx = np.where(u < P[:, 0], 0.0, np.where(u < P[:, 0] + P[:, 1], x, _w3(x)))
    out = states.copy()
    out[:, 0] = nx
    return out


def _flow(states, dt):
    out = np.array(states, dtype=float, copy=True)
    out[..., 1] = wrap_angle(out[..., 1] + dt)
    return out


def _encode(s):
    s = TorusPoint.make(*s)
    return np.array([s.x, s.y])


def _decode(v):
    return TorusPoint.make(float(v[0]), float(v[1]))


def V(s):
    """Weight function ``V(x, y) = x``."""
    return np.asarray(s, dtype=float)[..., 0]


# closed-form x-law -----------------------------------------------------------

def x_generator(x0: float) -> tuple[np.ndarray, np.ndarray]:
    """Support ``{0, x0, 1/x0}`` and the generator ``J - I`` of the x-component."""
    if x0 < 0:
        raise ValueError("x must be nonnegative")
    support = [0.0] if x0 == 0 else sorted({0.0, float(x0), 1.0 / x0})
    index = {s: k for k, s in enumerate(support)}
    J = np.zeros((len(support), len(support)))
    for s in support:
        p1, p2, p3 = probabilities(s)
        targets = (0.0, s, 0.0 if s == 0 else 1.0 / s)
        for tgt, p in zip(targets, (p1, p2, p3)):
            # 1/(1/x0) can miss x0 by an ulp
            key = min(support, key=lambda a: abs(a - tgt))
            J[index[s], index[key]] += p
    return np.array(support), J - np.eye(len(support))


def x_law(x0: float, t: float) -> dict:
    """Law of the x-component at time ``t`` as ``{state: probability}``."""
    support, G = x_generator(x0)
    p0 = (support == float(x0)).astype(float)
    p = np.clip(p0 @ linalg.expm(t * G), 0.0, None)
    p = p / p.sum()
    return {float(a): float(w) for a, w in zip(support, p) if w > 0}


def law(state, t: float) -> SparseDistribution:
    """``P_t^* delta_(x, y)``: atoms ``(a, y + t)`` over the x-law."""
    s = TorusPoint.make(*state)
    y = wrap_angle(s.y + t)
    return SparseDistribution.from_unnormalized({TorusPoint(a, y): w for a, w in x_law(s.x, t).items()})


def _phi(G: np.ndarray, L: float) -> np.ndarray:
    # int_0^L expm(v G) dv from the upper-right block of an augmented exponential
    n = len(G)
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = G
    A[:n, n:] = np.eye(n)
    return linalg.expm(L * A)[:n, n:]


def bin_centers(bins: int) -> np.ndarray:
    h = TWO_PI / bins
    return (np.arange(bins) + 0.5) * h


def cesaro_law(state, t: float, bins: int = DEFAULT_BINS, chunk: int = 4096) -> SparseDistribution:
    """Angle-binned ``Q_t^* delta_(x, y)``.

    The Cesaro law has a density in the angle.  It is pushed forward onto
    ``bins`` equal arcs (each arc collapsed to its midpoint), with the mass
    of every arc computed exactly from ``int p(s) ds`` over the times the
    rotation spends in it.  Compare only with :func:`invariant_law` built on
    the same number of bins.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    s0 = TorusPoint.make(*state)
    support, G = x_generator(s0.x)
    n = len(support)
    h = TWO_PI / bins
    p = (support == s0.x).astype(float)
    mass = np.zeros((n, bins))

    b0 = min(int(s0.y // h), bins - 1)
    first = min((b0 + 1) * h - s0.y, t)
    mass[:, b0] += p @ _phi(G, first)
    p = p @ linalg.expm(first * G)
    remaining = t - first
    K = int(remaining // h)
    if K > 0:
        E = linalg.expm(h * G)
        Phi = _phi(G, h)
        powers = linalg.expm(np.arange(min(chunk, K))[:, None, None] * (h * G)[None])
        jump = powers[-1] @ E
        done = 0
        while done < K:
            m = min(chunk, K - done)
            rows = np.einsum("i,kij->kj", p, powers[:m])
            seg = rows @ Phi
            idx = (b0 + 1 + done + np.arange(m)) % bins
            for a in range(n):
                mass[a] += np.bincount(idx, weights=seg[:, a], minlength=bins)
            p = p @ (jump if m == chunk else powers[m - 1] @ E)
            done += m
        remaining -= K * h
    if remaining > 0:
        mass[:, (b0 + 1 + K) % bins] += p @ _phi(G, remaining)
    mass = np.clip(mass / t, 0.0, None)
    centers = bin_centers(bins)
    atoms = {}
    for a in range(n):
        for b in np.flatnonzero(mass[a] > 0):
            atoms[TorusPoint(float(support[a]), float(centers[b]))] = mass[a, b]
    return SparseDistribution.from_unnormalized(atoms)


def invariant_law(bins: int = DEFAULT_BINS) -> SparseDistribution:
    """``delta_0 x Leb / 2pi`` pushed onto the same angle bins as :func:`cesaro_law`."""
    return SparseDistribution({TorusPoint(0.0, float(c)): 1.0 / bins for c in bin_centers(bins)})


def invariant_integral(f) -> float:
    """``<f, delta_0 x Leb/2pi>`` by adaptive quadrature (absolute tolerance 1e-10)."""
    val, _ = integrate.quad(lambda y: float(f(np.array([0.0, y]))), 0.0, TWO_PI,
                            epsabs=1e-10, epsrel=1e-10, limit=200)
    return val / TWO_PI


def cesaro_expectation(state, t: float, f, n_nodes: int = 0) -> float:
    """``Q_t f(x, y)`` by quadrature over the closed-form x-law."""
    s0 = TorusPoint.make(*state)
    support, G = x_generator(s0.x)
    p0 = (support == s0.x).astype(float)
    w, U = np.linalg.eig(G)
    coef = np.linalg.solve(U, np.eye(len(support)))

    def integrand(s):
        ps = np.real(p0 @ U @ np.diag(np.exp(w * s)) @ coef)
        ys = wrap_angle(s0.y + s)
        return sum(ps[a] * float(f(np.array([support[a], ys]))) for a in range(len(support)))

    pieces = max(1, int(math.ceil(t / math.pi)))
    edges = np.linspace(0.0, t, pieces + 1)
    total = math.fsum(integrate.quad(integrand, lo, hi, epsabs=1e-12, limit=100)[0]
                      for lo, hi in zip(edges[:-1], edges[1:]))
    return total / t


# descriptor ---------------------------------------------------------------

def _parse(text: str) -> TorusPoint:
    parts = [float(p) for p in text.replace(";", ",").split(",")]
    if len(parts) != 2:
        raise ValueError("IFS states are written 'x,y'")
    return TorusPoint.make(*parts)


def _angle(s):
    return np.asarray(s, dtype=float)[..., 1]


def _families():
    return [
        lip_bounded_family(TORUS_PRODUCT, [TorusPoint(0.0, 0.0), TorusPoint(1.0, math.pi)], r=1.0),
        supnorm_family(_angle),
        growth_family(TORUS_PRODUCT, TorusPoint(0.0, 0.0), p=1.0, coord=_angle),
        weighted_family(V, _angle),
    ]


def _neighbours(state, r):
    s = TorusPoint.make(*state)
    cands = [TorusPoint.make(s.x + r / 2, s.y + r / 2), TorusPoint.make(s.x, s.y - r),
             TorusPoint.make(max(s.x - r, 0.0), s.y)]
    return [c for c in cands if 0 < TORUS_PRODUCT(c, s) <= r + 1e-12]


CESARO_GRID = (62.5, 125.0, 250.0, 500.0, 1000.0)

DEFAULTS = {
    "cesaro_grid": {"t_grid": CESARO_GRID},
    "grid": {"t_grid": CESARO_GRID},
    "evc_grid": {"t_grid": CESARO_GRID, "probe_radii": (0.4, 0.2, 0.1, 0.05)},
    "ui_grid": {"t_grid": (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)},
    "x": TorusPoint(1.0, 0.0),
    "z": TorusPoint(0.0, 0.0),
    "r_list": (1.0, 0.5, 0.25),
    "report_probes": (TorusPoint(0.0, 0.0), TorusPoint(1.0, 0.0), TorusPoint(0.5, 2.0)),
    "tol": 0.05,
    "evc_tol": 0.05,
}


def ifs_torus(bins: int = DEFAULT_BINS) -> ModelDescriptor:
    sampler = SamplingKernel(step=_step, encode=_encode, decode=_decode, time_kind="jump",
                             flow=_flow, name="ifs")
    exact = ExactLaws(law=law, cesaro_law=lambda x, t: cesaro_law(x, t, bins),
                      reference=invariant_law(bins), name="ifs")
    return ModelDescriptor(
        id="ifs",
        description="IFS on the half-line with rotation on the circle",
        metric=TORUS_PRODUCT,
        V=V,
        sampler=sampler,
        exact=exact,
        invariant=invariant_law(bins),
        invariant_integral=invariant_integral,
        oracles={
            "probabilities": probabilities,
            "x_law": x_law,
            "cesaro_expectation": cesaro_expectation,
        },
        probes=(TorusPoint(0.0, 0.0), TorusPoint(0.5, 1.0), TorusPoint(1.0, 0.0),
                TorusPoint(2.0, 3.0), TorusPoint(10.0, 5.0)),
        base_point=TorusPoint(0.0, 0.0),
        coord=_angle,
        parse_state=_parse,
        encode_state=lambda s: [float(s[0]), float(s[1])],
        families=_families,
        time_kind="jump",
        neighbours=_neighbours,
        defaults=DEFAULTS,
    )
