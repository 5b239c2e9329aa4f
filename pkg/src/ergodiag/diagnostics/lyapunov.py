"""Moment bounds from a drift inequality ``L V <= -phi(V) + C``.

Along the chain, ``u(t) = E phi(V(X_t))`` is dominated by the solution of

    f'(t) = (C - f(t)) * phi'(phi^{-1}(f(t))),   f(0) = phi(V(x)),

which moves monotonically toward its unique fixed point ``C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp


class DomainError(ValueError):
    """``phi' o phi^{-1}`` could not be evaluated."""


@dataclass(frozen=True)
class LyapunovSpec:
    """Concave increasing ``phi`` with its derivative and inverse."""

    phi: Callable[[float], float]
    dphi: Callable[[float], float]
    phi_inv: Callable[[float], float]
    C: float
    U0: float
    name: str = "phi"

    @classmethod
    def linear(cls, C: float, U0: float) -> "LyapunovSpec":
        return cls(lambda v: v, lambda v: 1.0, lambda u: u, C, U0, "v")

    @classmethod
    def log1p(cls, C: float, U0: float) -> "LyapunovSpec":
        return cls(math.log1p, lambda v: 1.0 / (1.0 + v), math.expm1, C, U0, "log(1+v)")

    @classmethod
    def power(cls, q: float, C: float, U0: float) -> "LyapunovSpec":
        if not 0 < q <= 1:
            raise ValueError("phi(v) = v**q is concave only for 0 < q <= 1")
        return cls(lambda v: v ** q, lambda v: q * v ** (q - 1), lambda u: u ** (1 / q), C, U0, f"v^{q:g}")

    def rate(self, f: float) -> float:
        try:
            with np.errstate(divide="raise", over="raise", invalid="raise"):
                v = self.phi_inv(f)
                d = self.dphi(v)
        except FloatingPointError as exc:
            raise DomainError(f"phi'(phi^-1({f})) failed: {exc}") from None
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise DomainError(f"phi'(phi^-1({f})) failed: {exc}") from None
        if not math.isfinite(d):
            raise DomainError(f"phi'(phi^-1({f})) is not finite")
        return d

    def check_concave(self, n: int = 257) -> None:
        if self.C < 0:
            raise ValueError("C must be nonnegative")
        hi = self.phi_inv(max(self.U0, self.C, 1e-12))
        v = np.linspace(0.0, max(hi, 1e-9), n)
        y = np.array([self.phi(t) for t in v])
        second = y[2:] - 2 * y[1:-1] + y[:-2]
        if np.any(second > 1e-12 * max(1.0, np.abs(y).max())):
            raise ValueError(f"phi = {self.name} is not concave on [0, {hi:g}]")
        if np.any(np.diff(y) < 0) or any(self.dphi(t) <= 0 for t in v[1:]):
            raise ValueError(f"phi = {self.name} is not increasing on [0, {hi:g}]")


@dataclass(frozen=True)
class LyapunovResult:
    bound: float
    limit: float
    t: np.ndarray
    f: np.ndarray
    monotone: bool
    crossings: int


def lyapunov_bound(spec: LyapunovSpec, t_max: float = 20.0, step: float = 0.01,
                   rtol: float = 1e-8) -> LyapunovResult:
    """Integrate the comparison equation with an adaptive Runge-Kutta pair.

    Parameters
    ----------
    spec : LyapunovSpec
    t_max : float
        Integration horizon.
    step : float
        Output spacing and largest internal step.
    rtol : float
        Relative tolerance; steps breaching it are rejected.

    Returns
    -------
    LyapunovResult
        ``bound = sup f`` on ``[0, t_max]`` dominates ``sup_t E phi(V(X_t))``.
    """
    if step <= 0 or t_max <= 0:
        raise ValueError("need step > 0 and t_max > 0")
    spec.check_concave()
    C, U0 = float(spec.C), float(spec.U0)
    t_eval = np.linspace(0.0, t_max, int(round(t_max / step)) + 1)
    if U0 == C:
        f = np.full_like(t_eval, C)
    else:
        # stop inside the tolerance band around C: the approach can be stiff (small C)
        # or reach C in finite time (phi'(0) infinite)
        band = math.copysign(1e-12 + rtol * abs(C), U0 - C)
        arrive = lambda t, y: y[0] - C - band
        arrive.terminal = True
        side = math.copysign(1.0, U0 - C)
        # C is absorbing: stages that reach or pass it do not move
        rhs = lambda t, y: [0.0 if (y[0] - C) * side <= 0 else (C - y[0]) * spec.rate(y[0])]
        sol = solve_ivp(rhs, (0.0, t_max), [U0],
                        method="RK45", rtol=rtol, atol=1e-12, t_eval=t_eval, max_step=step,
                        events=arrive)
        if sol.status < 0:
            raise DomainError(sol.message)
        f = np.full_like(t_eval, C)
        f[:len(sol.y[0])] = sol.y[0]
    side = np.sign(f - C)
    s0 = np.sign(U0 - C)
    crossings = int(np.sum(side * s0 < 0))
    d = np.diff(f)
    monotone = bool(np.all(d <= 1e-14) if U0 >= C else np.all(d >= -1e-14))
    return LyapunovResult(float(f.max()), float(f[-1]), t_eval, f, monotone, crossings)


def rk4_reference(spec: LyapunovSpec, t_max: float, h: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step Runge-Kutta solution of the same equation."""
    n = int(round(t_max / h))
    f = np.empty(n + 1)
    f[0] = spec.U0
    g = lambda y: (spec.C - y) * spec.rate(y)
    for k in range(n):
        y = f[k]
        k1 = g(y)
        k2 = g(y + h * k1 / 2)
        k3 = g(y + h * k2 / 2)
        k4 = g(y + h * k3)
        f[k + 1] = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return np.linspace(0.0, n * h, n + 1), f
