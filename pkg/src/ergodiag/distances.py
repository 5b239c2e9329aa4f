"""Exact probability metrics between finitely supported measures.

Conventions
-----------
* Total variation is the dual norm over ``{f : sup|f| <= 1}``, i.e.
  ``sum_s |mu(s) - nu(s)|`` with values in ``[0, 2]``.
* The weighted distance ``d_V`` is ``sum_s |mu(s) - nu(s)| (1 + V(s))``,
  which coincides with the optimal coupling cost for
  ``c(x, y) = 1{x != y} (2 + V(x) + V(y))``.
* ``W_p`` is solved as a transportation linear program (HiGHS), with a
  forced-coupling shortcut for point masses and an assignment shortcut for
  uniform measures with equally many atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

from .families import TestFunctionFamily
from .markov import EmpiricalMeasure, SparseDistribution
from .states import Metric

SUPPORT_CAP = 2000
MARGINAL_TOL = 1e-9


class SupportTooLarge(ValueError):
    """Combined support exceeds the exact-solver cap."""


class CapabilityError(ValueError):
    """The requested supremum has no exact evaluation."""


@dataclass(frozen=True)
class TransportPlan:
    """Coupling of two finitely supported measures.

    ``entries`` lists ``(source, target, mass)`` triples with positive mass.
    """

    entries: tuple
    source: tuple
    target: tuple

    def marginal_error(self) -> float:
        rows: dict = {}
        cols: dict = {}
        for a, b, m in self.entries:
            rows[a] = rows.get(a, 0.0) + m
            cols[b] = cols.get(b, 0.0) + m
        err = 0.0
        for s, w in self.source:
            err = max(err, abs(rows.get(s, 0.0) - w))
        for s, w in self.target:
            err = max(err, abs(cols.get(s, 0.0) - w))
        return err

    def cost(self, c: Callable) -> float:
        return math.fsum(m * float(c(a, b)) for a, b, m in self.entries)

    def to_records(self, encode=lambda s: s) -> list:
        return [[encode(a), encode(b), m] for a, b, m in self.entries]


def _atoms(m) -> tuple[list, np.ndarray]:
    if isinstance(m, SparseDistribution):
        return list(m.keys()), np.array(list(m.values()), dtype=float)
    if isinstance(m, EmpiricalMeasure):
        pts = [tuple(p.tolist()) if np.ndim(p) else p.item() for p in np.asarray(m.points)]
        return pts, np.asarray(m.weights, dtype=float)
    if isinstance(m, Mapping):
        return list(m.keys()), np.array(list(m.values()), dtype=float)
    raise TypeError(f"expected a finitely supported measure, got {type(m).__name__}")


def cost_matrix(xs: list, ys: list, d: Callable) -> np.ndarray:
    """Pairwise ``d(x, y)``; vectorized when states embed in a numeric array."""
    try:
        A = np.asarray(xs, dtype=float)
        B = np.asarray(ys, dtype=float)
        if A.ndim == 1:
            C = np.asarray(d(A[:, None], B[None, :]), dtype=float)
        else:
            C = np.asarray(d(A[:, None, :], B[None, :, :]), dtype=float)
        if C.shape == (len(xs), len(ys)):
            return C
    except (TypeError, ValueError, AttributeError, IndexError):
        pass
    return np.array([[float(d(a, b)) for b in ys] for a in xs], dtype=float).reshape(len(xs), len(ys))


def solve_transport(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimize ``<C, P>`` over couplings ``P`` of weight vectors ``a`` and ``b``."""
    m, n = C.shape
    if m == 1 or n == 1:
        # a point mass on either side forces the coupling
        P = a[:, None] * np.ones((1, n)) if n == 1 else np.ones((m, 1)) * b[None, :]
        return float(np.sum(C * P)), P
    if m == n and np.allclose(a, 1.0 / m, rtol=0, atol=1e-15) and np.allclose(b, 1.0 / n, rtol=0, atol=1e-15):
        r, c = linear_sum_assignment(C)
        P = np.zeros((m, n))
        P[r, c] = 1.0 / m
        return float(C[r, c].sum() / m), P
    rows = sparse.kron(sparse.eye(m), np.ones((1, n)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(n))
    A_eq = sparse.vstack([rows, cols]).tocsr()
    b_eq = np.concatenate([a, b])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    P = np.clip(res.x.reshape(m, n), 0.0, None)
    return float(np.sum(C * P)), P


def wasserstein_exact(mu, nu, p: float = 1.0, d: Metric | Callable = None,
                      cap: int = SUPPORT_CAP) -> tuple[float, TransportPlan]:
    """Exact ``W_p`` between two finitely supported measures.

    Parameters
    ----------
    mu, nu : SparseDistribution or EmpiricalMeasure
    p : float
        Order, ``p >= 1``.
    d : Metric
        Ground metric; defaults to ``|x - y|``.
    cap : int
        Largest combined support handed to the LP.

    Returns
    -------
    value : float
    plan : TransportPlan
        An optimal coupling.

    Examples
    --------
    >>> mu = SparseDistribution({0: 0.5, 1: 0.5})
    >>> nu = SparseDistribution({0: 0.5, 2: 0.5})
    >>> round(wasserstein_exact(mu, nu, 1)[0], 12)
    0.5
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if d is None:
        from .states import ABS
        d = ABS
    xs, a = _atoms(mu)
    ys, b = _atoms(nu)
    if len(xs) + len(ys) > cap:
        raise SupportTooLarge(
            f"combined support {len(xs) + len(ys)} exceeds cap {cap}; "
            "use wasserstein_1d for real-line supports or subsample")
    C = cost_matrix(xs, ys, d) ** p
    value, P = solve_transport(a, b, C)
    entries = tuple((xs[i], ys[j], float(P[i, j])) for i, j in zip(*np.nonzero(P > 0)))
    plan = TransportPlan(entries, tuple(zip(xs, a.tolist())), tuple(zip(ys, b.tolist())))
    err = plan.marginal_error()
    if err > MARGINAL_TOL:
        raise RuntimeError(f"transport plan violates marginals by {err:.3g}")
    return max(value, 0.0) ** (1.0 / p), plan


def _real_atoms(m) -> tuple[np.ndarray, np.ndarray]:
    xs, w = _atoms(m)
    try:
        x = np.asarray(xs, dtype=float)
    except (TypeError, ValueError):
        raise TypeError("wasserstein_1d needs states embedded in the real line") from None
    if x.ndim != 1:
        raise TypeError("wasserstein_1d needs states embedded in the real line")
    order = np.argsort(x, kind="stable")
    return x[order], w[order]


def wasserstein_1d(mu, nu, p: float = 1.0) -> float:
    """``W_p`` on the real line from the quantile coupling."""
    x, a = _real_atoms(mu)
    y, b = _real_atoms(nu)
    Fa = np.cumsum(a)
    Fb = np.cumsum(b)
    Fa[-1] = Fb[-1] = 1.0
    u = np.union1d(Fa, Fb)
    du = np.diff(np.concatenate([[0.0], u]))
    # quantile functions evaluated on each level interval
    ia = np.minimum(np.searchsorted(Fa, u, side="left"), len(x) - 1)
    ib = np.minimum(np.searchsorted(Fb, u, side="left"), len(y) - 1)
    cost = math.fsum((du * np.abs(x[ia] - y[ib]) ** p).tolist())
    return cost ** (1.0 / p)


def _require_sparse(*ms):
    for m in ms:
        if isinstance(m, EmpiricalMeasure):
            raise TypeError("total variation of an empirical cloud is degenerate; use exact laws")


def tv_distance(mu: Mapping, nu: Mapping) -> float:
    """``sup_{|f| <= 1} |<f, mu> - <f, nu>| = sum_s |mu(s) - nu(s)|``."""
    _require_sparse(mu, nu)
    keys = set(mu) | set(nu)
    return math.fsum(abs(mu.get(s, 0.0) - nu.get(s, 0.0)) for s in keys)


def weighted_tv(mu: Mapping, nu: Mapping, V: Callable) -> float:
    """``d_V(mu, nu) = sum_s |mu(s) - nu(s)| (1 + V(s))``."""
    _require_sparse(mu, nu)
    terms = []
    for s in set(mu) | set(nu):
        v = float(V(s))
        if not v >= 0 or not math.isfinite(v):
            raise ValueError(f"V must be finite and nonnegative, got V({s!r}) = {v}")
        terms.append(abs(mu.get(s, 0.0) - nu.get(s, 0.0)) * (1.0 + v))
    return math.fsum(terms)


def weighted_tv_cost(V: Callable) -> Callable:
    """Coupling cost whose optimum equals :func:`weighted_tv`."""
    return lambda x, y: 0.0 if x == y else 2.0 + float(V(x)) + float(V(y))


def truncated_metric(d: Callable, cap: float) -> Metric:
    return Metric(f"min(d, {cap:g})", lambda a, b: np.minimum(d(a, b), cap))


def family_sup_gap(mu, nu, family: TestFunctionFamily, d: Callable | None = None) -> float:
    """``sup_{f in family} |<f, mu> - <f, nu>|`` for families with a closed form.

    Sup-norm balls give (a multiple of) total variation, ``1 + V`` envelopes
    give ``d_V``, and bounded Lipschitz balls give ``W_1`` under the
    truncated metric ``min(d, 2r)``.
    """
    if family.kind == "F_SUPNORM":
        return family.params["bound"] * tv_distance(mu, nu)
    if family.kind == "F_WEIGHTED":
        return weighted_tv(mu, nu, family.params["V"])
    if family.kind == "F_LIP_BOUNDED":
        d = d or family.params.get("metric")
        r = family.params["r"]
        ground = d if math.isinf(r) else truncated_metric(d, 2 * r)
        return wasserstein_exact(mu, nu, 1, ground)[0]
    raise CapabilityError(f"{family.name}: no closed-form supremum; evaluate representatives instead")
