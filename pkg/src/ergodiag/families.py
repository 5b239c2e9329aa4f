"""Test-function families.

A family is described by its envelope (the pointwise bound every member
obeys) and a finite list of representative members used by the estimators.
Members are written against the encoded form of a state (an int/float for
scalar spaces, ``(..., 2)`` arrays for the half-line x circle) so that one
callable serves both exact and vectorized Monte Carlo code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

KINDS = ("F_LIP_BOUNDED", "F_SUPNORM", "F_GROWTH", "F_ALPHA", "F_WEIGHTED")

# truncation ladder for the +-min(envelope, K) representatives
K_LADDER = (1.0, 4.0, 16.0, 256.0, 2.0 ** 10, 2.0 ** 20)


def _scalar(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class TestFunctionFamily:
    """Named class of test functions with an envelope and representatives.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    envelope : callable
        Nonnegative bound, ``|f(x)| <= envelope(x)`` for every member.
    representatives : sequence of (str, callable)
        Finite list of members, addressed by id.
    params : dict
        Parameters that define the family (``r``, ``alpha``, ``V`` ...).
    """

    __test__ = False  # keep pytest from collecting the class

    kind: str
    envelope: Callable
    representatives: tuple = ()
    params: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")

    @property
    def name(self) -> str:
        return self.label or self.kind

    @property
    def ids(self) -> list[str]:
        return [fid for fid, _ in self.representatives]

    def function(self, fid: str) -> Callable:
        for key, f in self.representatives:
            if key == fid:
                return f
        raise KeyError(f"{self.name} has no representative {fid!r}")

    def evaluate(self, fid: str, state):
        return self.function(fid)(state)

    def envelope_violations(self, states, slack: float = 1e-12) -> list[tuple[str, object]]:
        """Representatives exceeding the envelope on any of ``states``."""
        bad = []
        for fid, f in self.representatives:
            for s in states:
                if abs(float(f(s))) > float(self.envelope(s)) * (1 + slack) + slack:
                    bad.append((fid, s))
                    break
        return bad


def _truncations(envelope, prefix="env"):
    reps = []
    for K in K_LADDER:
        reps.append((f"+{prefix}^{K:g}", lambda s, K=K: np.minimum(envelope(s), K)))
        reps.append((f"-{prefix}^{K:g}", lambda s, K=K: -np.minimum(envelope(s), K)))
    return reps


def supnorm_family(coord: Callable = _scalar, bound: float = 1.0) -> TestFunctionFamily:
    """Ball ``{f : sup|f| <= bound}``; probes are cosines and bumps of ``coord``."""
    b = float(bound)
    reps = [
        ("one", lambda s: b * np.ones_like(coord(s))),
        ("cos", lambda s: b * np.cos(coord(s))),
        ("cos3", lambda s: b * np.cos(3.0 * coord(s))),
        ("bump", lambda s: b * np.exp(-coord(s) ** 2)),
        ("tanh", lambda s: b * np.tanh(coord(s) - 1.0)),
        ("minus_bump", lambda s: -b * np.exp(-np.abs(coord(s)))),
    ]
    return TestFunctionFamily("F_SUPNORM", lambda s: b * np.ones_like(coord(s)), tuple(reps),
                              {"bound": b}, f"F_SUPNORM({b:g})")


def lip_bounded_family(metric, anchors: Sequence, r: float = 1.0) -> TestFunctionFamily:
    """1-Lipschitz functions bounded by ``r``: ``x -> min(d(x, a), 2r) - r``."""
    r = float(r)
    reps = []
    for n, a in enumerate(anchors):
        reps.append((f"dist{n}", lambda s, a=a: np.minimum(metric(s, a), 2 * r) - r))
        reps.append((f"-dist{n}", lambda s, a=a: r - np.minimum(metric(s, a), 2 * r)))
    return TestFunctionFamily("F_LIP_BOUNDED", lambda s: r, tuple(reps),
                              {"r": r, "metric": metric}, f"F_LIP_BOUNDED({r:g})")


def growth_family(metric, x0, p: float = 1.0, coord: Callable = _scalar) -> TestFunctionFamily:
    """``|f(x)| <= 1 + d(x0, x)**p``."""
    env = lambda s: 1.0 + np.asarray(metric(s, x0), dtype=float) ** p
    reps = _truncations(env) + [
        ("dist^p", lambda s: np.asarray(metric(s, x0), dtype=float) ** p),
        ("env*cos", lambda s: env(s) * np.cos(coord(s))),
    ]
    return TestFunctionFamily("F_GROWTH", env, tuple(reps), {"p": p, "x0": x0, "metric": metric},
                              f"F_GROWTH(p={p:g})")


def alpha_family(alpha: float, V: Callable) -> TestFunctionFamily:
    """``|f| <= V**alpha``; the envelope itself is the leading representative."""
    a = float(alpha)
    env = lambda s: np.asarray(V(s), dtype=float) ** a
    reps = [("V^alpha", env)] + _truncations(env, "V^alpha") + [
        ("V^alpha*cos", lambda s: env(s) * np.cos(np.asarray(V(s), dtype=float))),
    ]
    return TestFunctionFamily("F_ALPHA", env, tuple(reps), {"alpha": a, "V": V}, f"F_ALPHA({a:g})")


def weighted_family(V: Callable, coord: Callable = _scalar) -> TestFunctionFamily:
    """``|f| <= 1 + V``, the test class dual to the weighted total variation."""
    env = lambda s: 1.0 + np.asarray(V(s), dtype=float)
    reps = [("1+V", env), ("-(1+V)", lambda s: -env(s))] + _truncations(env) + [
        ("(1+V)*cos", lambda s: env(s) * np.cos(coord(s))),
        ("bump", lambda s: np.exp(-coord(s) ** 2)),
    ]
    return TestFunctionFamily("F_WEIGHTED", env, tuple(reps), {"V": V}, "F_WEIGHTED")


def single_function_family(f: Callable, envelope: Callable | None = None, name: str = "f",
                           kind: str = "F_ALPHA") -> TestFunctionFamily:
    """Wrap one function as a family (handy for the CLI and for H1 checks)."""
    env = envelope or (lambda s: np.abs(np.asarray(f(s), dtype=float)))
    return TestFunctionFamily(kind, env, ((name, f),), {}, name)


def is_bounded(family: TestFunctionFamily) -> bool:
    return family.kind in ("F_SUPNORM", "F_LIP_BOUNDED")


def family_bound(family: TestFunctionFamily) -> float:
    if family.kind == "F_SUPNORM":
        return family.params["bound"]
    if family.kind == "F_LIP_BOUNDED":
        return family.params["r"]
    return math.inf
