"""Reproducible result tables.

Each table is a list of rows ``(quantity, computed, expected, tolerance,
pass)``; exact tables ignore the seed, Monte Carlo tables derive all
randomness from it.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from . import coupling
from .diagnostics import LimitGridSpec, LyapunovSpec, ball_mass_curve, check_uniform_integrability, lyapunov_bound
from .distances import tv_distance, wasserstein_exact
from .markov import SparseDistribution, cesaro_Qtf, integrate, propagate, propagate_many
from .models import dyadic, get_model, ifs
from .states import LATTICE_INDEX, LatticeTriple


class Row(NamedTuple):
    quantity: str
    computed: float
    expected: float
    tolerance: float
    passed: bool


def _row(q, c, e, tol, ok=None):
    ok = abs(c - e) <= tol if ok is None else ok
    return Row(q, float(c), float(e), float(tol), bool(ok))


def dyadic_laws(seed=None, samples=None):
    m = dyadic.dyadic_chain()
    rows = []
    for i in range(1, 11):
        init = SparseDistribution.point(2 ** i)
        laws = propagate_many(m.countable, init, range(1, 31))
        for n in range(1, 31):
            law, ref = laws[n], dyadic.n_step_law(i, n)
            err = max(abs(law.weight(s) - ref.weight(s)) for s in set(law) | set(ref))
            rows.append(_row(f"max atom error i={i} n={n}", err, 0.0, 1e-12))
    return rows


def dyadic_moments(seed=None, samples=None):
    m = dyadic.dyadic_chain()
    rows = []
    for i in (1, 5, 10):
        laws = propagate_many(m.countable, SparseDistribution.point(2 ** i), range(1, 31))
        for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
            for n in (1, 10, 20, 30):
                got = integrate(laws[n], lambda s: float(s) ** alpha if s > 0 else (1.0 if alpha == 0 else 0.0))
                rows.append(_row(f"<V^{alpha:g}, P_{n} delta_2^{i}>", got, dyadic.moment(alpha, i, n), 1e-12))
    return rows


def dyadic_tv(seed=None, samples=None, i=1):
    m = dyadic.dyadic_chain()
    laws = propagate_many(m.countable, SparseDistribution.point(2 ** i), range(1, 21))
    return [_row(f"TV(P_{n} delta_2^{i}, delta_0)", tv_distance(laws[n], SparseDistribution.point(0)),
                 2.0 ** (1 - n), 1e-12) for n in range(1, 21)]


def wasserstein(seed=None, samples=None):
    m = dyadic.dyadic_chain()
    rows = []
    zero = SparseDistribution.point(0)
    for i in (1, 4, 10):
        laws = propagate_many(m.countable, SparseDistribution.point(2 ** i), (1, 10, 30))
        for n, law in laws.items():
            rows.append(_row(f"W1(P_{n} delta_2^{i}, delta_0)", wasserstein_exact(law, zero, 1)[0], 2.0 ** i, 1e-9))
    mu = SparseDistribution({0: 0.5, 1: 0.5})
    nu = SparseDistribution({0: 0.5, 2: 0.5})
    rows.append(_row("W1({0,1}, {0,2})", wasserstein_exact(mu, nu, 1)[0], 0.5, 1e-9))
    u0 = SparseDistribution.uniform([0, 1])
    u1 = SparseDistribution.uniform([1, 2])
    rows.append(_row("W2(U{0,1}, U{1,2})", wasserstein_exact(u0, u1, 2)[0], 1.0, 1e-9))
    return rows


def coupling_tail(seed=1, samples=100_000):
    ck = coupling.product_kernel(dyadic.dyadic_chain())
    taus = coupling.hitting_times(ck, (2, 2), 0, 0.5, 10, samples, seed)
    S, se = coupling.survival_curve(taus, 10)
    rows = []
    for n in range(1, 11):
        exact = dyadic.coupled_survival(n)
        sigma = math.sqrt(exact * (1 - exact) / samples)
        rows.append(_row(f"P(tau > {n})", S[n], exact, 3 * sigma))
    rep = coupling.verify_tail_bound(ck, (2, 2), 0, 0.5, 0.25, 10, samples, seed)
    for n, (s, b, sig, ok) in enumerate(zip(rep.survival, rep.bound, rep.sigma, rep.passed), start=1):
        rows.append(Row(f"block {n} survival <= (1 - gamma/2)^{n}", s, b, 3 * sig, ok))
    return rows


def heavy_tail_divergence(seed=None, samples=None):
    rows = []
    for M in (10, 20, 30, 40):
        s = dyadic.partial_sum(0, M)
        rows.append(Row(f"S(0, {M})", s, 1e6, 0.0, s > 1e6 if M == 40 else True))
    for th, (M, s) in dyadic.divergence_certificate(0).items():
        rows.append(Row(f"first M with S(0, M) > {th:g}", M, 40, 0.0, M <= 40))
    return rows


def lyapunov(seed=None, samples=None):
    res = lyapunov_bound(LyapunovSpec.linear(1.0, 5.0), t_max=20.0)
    return [
        _row("sup f (phi(v)=v, C=1, U0=5)", res.bound, 5.0, 1e-6),
        _row("f(20)", res.limit, 1.0, 1e-6),
        Row("fixed-point crossings", res.crossings, 0, 0.0, res.crossings == 0 and res.monotone),
    ]


def lattice_tightness(seed=None, samples=None):
    m = get_model("lattice")
    start = LatticeTriple(1, 0, 1)
    rows = []
    steps = list(range(1, 51))
    for R in (1, 2, 5, 10, 20, 40):
        mass = ball_mass_curve(m.countable, start, start, R, steps, LATTICE_INDEX)
        beyond = [mass[k] for k, n in enumerate(steps) if n > R]
        rows.append(_row(f"max P_n(B(start, {R})) for {R} < n <= 50", max(beyond), 0.0, 0.0))
    return rows


def ui_verdicts(seed=None, samples=None):
    m = dyadic.dyadic_chain()
    grid = LimitGridSpec(t_grid=dyadic.EXACT_STEPS)
    K = [2.0 ** k for k in range(0, 21)]
    r1 = check_uniform_integrability(m.countable, 4, lambda s: float(s), K, grid, name="V")
    r2 = check_uniform_integrability(m.countable, 4, lambda s: float(s) ** 0.5, K, grid, name="V^1/2")
    return [
        Row("T(2^20) for f=V, x=4 (verdict fail)", r1.statistic, 4.0, 0.0, r1.verdict == "fail" and r1.statistic == 4.0),
        Row("T(2^20) for f=V^1/2, x=4 (verdict pass)", r2.statistic, 0.0, 1e-3, r2.verdict == "pass"),
    ]


def ifs_ergodicity(seed=3, samples=20_000, T=1000.0):
    model = ifs.ifs_torus()
    start = (1.0, 0.0)
    rows = []
    for name, f in (("cos(y)", lambda s: np.cos(np.asarray(s)[..., 1])),
                    ("min(x,1)", lambda s: np.minimum(np.asarray(s)[..., 0], 1.0))):
        est = cesaro_Qtf(model.sampler, start, T, f, mode="monte-carlo", n_samples=samples, seed=seed)
        target = model.integrate_invariant(f)
        rows.append(_row(f"Q_{T:g} {name} at (1, 0)", est.mean, target, 3 * est.stderr))
    return rows


TABLES: dict[str, Callable] = {
    "dyadic-laws": dyadic_laws,
    "dyadic-moments": dyadic_moments,
    "dyadic-tv": dyadic_tv,
    "wasserstein": wasserstein,
    "coupling-tail": coupling_tail,
    "heavy-tail-divergence": heavy_tail_divergence,
    "lyapunov": lyapunov,
    "lattice-tightness": lattice_tightness,
    "ui-verdicts": ui_verdicts,
    "ifs-ergodicity": ifs_ergodicity,
}

STOCHASTIC = {"coupling-tail", "ifs-ergodicity"}
