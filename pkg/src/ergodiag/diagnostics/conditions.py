"""Lower bound, eventual continuity, uniform integrability and tightness checks.

Every check runs in exact mode when the kernel provides exact laws
(:class:`~ergodiag.markov.CountableKernel` or
:class:`~ergodiag.markov.ExactLaws`) and in Monte Carlo mode for a
:class:`~ergodiag.markov.SamplingKernel`.  Exact-mode verdicts need no
margin; Monte Carlo verdicts require three standard errors.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from ..distances import CapabilityError, family_sup_gap
from ..families import TestFunctionFamily
from ..markov import (SamplingKernel, cesaro_Qtf, estimate_Ptf_grid, integrate, is_exact,
                      laws_on_grid, spawn_seeds, values_at_times)
from ..states import ABS
from .report import (FAIL, INCONCLUSIVE, PASS, DiagnosticReport, LimitGridSpec, combine,
                     margin_verdict, small_verdict)

LBC_FLOOR = 1e-3
# last three tail values within this relative spread count as a plateau
PLATEAU_RTOL = 1e-3


def resolve(kernel, metric=None, exact: bool | None = None):
    """Accept a kernel or a model descriptor; return ``(kernel, metric, model)``."""
    model = None
    if hasattr(kernel, "families") and hasattr(kernel, "metric"):
        model = kernel
        metric = metric or model.metric
        if exact is False:
            kernel = model.sampler
        else:
            kernel = model.kernel
    if exact and not is_exact(kernel):
        raise TypeError("exact mode requested for a sampling kernel")
    return kernel, metric or ABS, model


def _provenance(kernel, grid: LimitGridSpec, model=None, **extra):
    d = {"kernel": getattr(kernel, "name", type(kernel).__name__),
         "mode": "exact" if is_exact(kernel) else "monte-carlo",
         "seed": grid.seed}
    if model is not None:
        d["model"] = model.id
    d.update(extra)
    return d


# ---------------------------------------------------------------------------
# expectation curves
# ---------------------------------------------------------------------------

def expectation_curves(kernel, x, fns: Sequence[Callable], t_grid, cesaro: bool = False,
                       samples: int = 2000, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """``P_t f(x)`` (or ``Q_t f(x)``) for each ``f`` and ``t``.

    Returns ``(means, stderrs)`` of shape ``(len(fns), len(t_grid))``;
    standard errors are zero in exact mode.  Monte Carlo estimates of
    different functions share their paths.
    """
    t_grid = list(t_grid)
    if is_exact(kernel):
        laws = laws_on_grid(kernel, x, t_grid, cesaro=cesaro)
        m = np.array([[integrate(laws[t], f) for t in t_grid] for f in fns])
        return m, np.zeros_like(m)
    means = np.empty((len(fns), len(t_grid)))
    ses = np.empty_like(means)
    for k, f in enumerate(fns):
        if not cesaro:
            means[k], ses[k] = estimate_Ptf_grid(kernel, x, t_grid, f, samples, seed)
        elif kernel.time_kind == "discrete":
            T = int(max(t_grid))
            vals = np.concatenate(list(values_at_times(kernel, x, np.arange(1, T + 1), f, samples, seed)))
            run = np.cumsum(vals, axis=1) / np.arange(1, T + 1)
            cols = run[:, [int(t) - 1 for t in t_grid]]
            means[k] = cols.mean(axis=0)
            ses[k] = cols.std(axis=0, ddof=1) / math.sqrt(len(cols))
        else:
            for j, (t, ss) in enumerate(zip(t_grid, spawn_seeds(seed, len(t_grid)))):
                est = cesaro_Qtf(kernel, x, t, f, mode="monte-carlo", n_samples=samples, seed=ss)
                means[k, j], ses[k, j] = est.mean, est.stderr
    return means, ses


def _ball_indicator(kernel, metric, z, r, closed=False):
    if is_exact(kernel):
        return lambda s: float(float(metric(s, z)) <= r if closed else float(metric(s, z)) < r)
    zz = kernel.initial(z, 1)[0]
    if closed:
        return lambda s: (np.asarray(metric(s, zz), dtype=float) <= r).astype(float)
    return lambda s: (np.asarray(metric(s, zz), dtype=float) < r).astype(float)


# ---------------------------------------------------------------------------
# lower bound conditions
# ---------------------------------------------------------------------------

def _check_lbc(kind, kernel, z, r_list, probe_states, grid, metric, floor, exact):
    kernel, metric, model = resolve(kernel, metric, exact)
    probes = list(probe_states)
    if not probes:
        raise ValueError("probe set is empty")
    cesaro = kind == "C2"
    lo = grid.tail_start
    rep = DiagnosticReport(kind, INCONCLUSIVE, tolerances={"floor": floor, "sigmas": 3},
                           grid=grid.to_dict(), provenance=_provenance(kernel, grid, model))
    r_list = list(r_list)
    inds = [_ball_indicator(kernel, metric, z, r) for r in r_list]
    per = {}
    for x, ss in zip(probes, spawn_seeds(grid.seed, len(probes))):
        # one pass per probe covers every radius
        per[repr(x)] = expectation_curves(kernel, x, inds, grid.t_grid, cesaro, grid.samples, ss)
    verdicts, stats = [], []
    for j, r in enumerate(r_list):
        worst, worst_se = math.inf, 0.0
        per_probe = {}
        for x in probes:
            m, e = per[repr(x)][0][j], per[repr(x)][1][j]
            tail = m[lo:]
            k = lo + (int(np.argmax(tail)) if cesaro else int(np.argmin(tail)))
            per_probe[repr(x)] = float(m[k])
            rep.add_curve(f"r={r:g} x={x!r}", grid.t_grid, m, e)
            if m[k] < worst:
                worst, worst_se = float(m[k]), float(e[k])
        stats.append(worst)
        verdicts.append(margin_verdict(worst, worst_se, floor))
        rep.details[f"r={r:g}"] = {"statistic": worst, "stderr": worst_se, "per_probe": per_probe,
                                   "verdict": verdicts[-1]}
    rep.add_curve("statistic", list(r_list), stats)
    rep.statistic = min(stats)
    rep.verdict = combine(verdicts)
    rep.details["z"] = repr(z)
    return rep


def check_lbc_C1(kernel, z, r_list, probe_states, grid: LimitGridSpec, metric=None,
                 floor: float = LBC_FLOOR, exact: bool | None = None) -> DiagnosticReport:
    """``inf_x liminf_t P_t(x, B(z, r)) > 0`` for every ``r`` in ``r_list``.

    The statistic is the minimum over probes of the tail-minimum of
    ``P_t(x, B(z, r))``; it must exceed ``floor`` (by three standard
    errors in Monte Carlo mode).
    """
    return _check_lbc("C1", kernel, z, r_list, probe_states, grid, metric, floor, exact)


def check_lbc_C2(kernel, z, r_list, probe_states, grid: LimitGridSpec, metric=None,
                 floor: float = LBC_FLOOR, exact: bool | None = None) -> DiagnosticReport:
    """Cesaro version: tail-maximum of ``Q_t(x, B(z, r))``."""
    return _check_lbc("C2", kernel, z, r_list, probe_states, grid, metric, floor, exact)


# ---------------------------------------------------------------------------
# eventual continuity
# ---------------------------------------------------------------------------

VARIANTS = ("plain", "cesaro", "uniform", "uniform-cesaro")


def default_neighbours(candidates: Iterable, metric) -> Callable:
    pool = list(candidates)
    return lambda x, r: [c for c in pool if 0 < float(metric(c, x)) <= r]


def check_evc(kernel, family: TestFunctionFamily, x, grid: LimitGridSpec, variant: str = "plain",
              metric=None, neighbours: Callable | None = None, candidates: Iterable | None = None,
              tol: float = 1e-3, exact: bool | None = None) -> DiagnosticReport:
    """Eventual continuity at ``x``.

    For each radius ``r`` in ``grid.probe_radii``,
    ``D(r) = max_{x': 0 < d(x', x) <= r} max_{t in tail} gap_t(x', x)`` where
    the gap is ``max_f |P_t f(x') - P_t f(x)|`` over representatives
    (``plain``), the same with ``Q_t`` (``cesaro``), or the exact supremum
    over the whole family (``uniform``, ``uniform-cesaro``).  A radius
    without probes is vacuous and contributes ``D(r) = 0``.

    Passes when ``D`` is nonincreasing over at least three radii and the last
    value is within ``tol``; fails when the last three values plateau above
    ``tol``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    kernel, metric, model = resolve(kernel, metric, exact)
    radii = list(grid.probe_radii)
    if len(radii) < 3:
        raise ValueError("probe_radii: need at least three radii for a trend")
    uniform = variant.startswith("uniform")
    cesaro = variant.endswith("cesaro")
    if uniform and not is_exact(kernel):
        raise CapabilityError("uniform eventual continuity needs exact laws; "
                              "total variation of sampled continuous states is degenerate")
    if neighbours is None:
        if candidates is not None:
            neighbours = default_neighbours(candidates, metric)
        elif model is not None and model.neighbours is not None:
            neighbours = model.neighbours
        else:
            raise ValueError("need neighbours or candidates to probe x' -> x")

    lo = grid.tail_start
    tail = grid.t_grid[lo:]
    rep = DiagnosticReport(f"EvC[{variant}]", INCONCLUSIVE, tolerances={"tol": tol, "sigmas": 3},
                           grid=grid.to_dict(),
                           provenance=_provenance(kernel, grid, model, family=family.name, x=repr(x)))
    cache: dict = {}
    seeds = iter(spawn_seeds(grid.seed, 4096))

    def curves(y):
        key = repr(y)
        if key not in cache:
            if uniform:
                cache[key] = laws_on_grid(kernel, y, tail, cesaro=cesaro)
            else:
                fns = [f for _, f in family.representatives]
                cache[key] = expectation_curves(kernel, y, fns, tail, cesaro, grid.samples, next(seeds))
        return cache[key]

    def gap(y):
        if uniform:
            a, b = curves(y), curves(x)
            g = np.array([family_sup_gap(a[t], b[t], family, metric) for t in tail])
            return float(g.max()), 0.0, g
        (ma, ea), (mb, eb) = curves(y), curves(x)
        g = np.abs(ma - mb)
        se = np.sqrt(ea ** 2 + eb ** 2)
        worst = np.unravel_index(int(np.argmax(g)), g.shape)
        return float(g[worst]), float(se[worst]), g.max(axis=0)

    D, Dse, vacuous = [], [], []
    for r in radii:
        probes = list(neighbours(x, r))
        best, best_se = 0.0, 0.0
        for y in probes:
            g, se, curve = gap(y)
            rep.add_curve(f"r={r:g} x'={y!r}", tail, curve)
            if g > best:
                best, best_se = g, se
        D.append(best)
        Dse.append(best_se)
        vacuous.append(not probes)
    rep.add_curve("D", radii, D, Dse)
    rep.details["vacuous"] = vacuous
    rep.statistic = D[-1]
    mono = all(b <= a + 2 * math.hypot(sa, sb) + 1e-12 * max(1.0, a)
               for a, b, sa, sb in zip(D, D[1:], Dse, Dse[1:]))
    plateau = D[-1] >= D[-3] * (1 - 1e-9) - 2 * Dse[-1]
    v = small_verdict(D[-1], Dse[-1], tol, plateau)
    if v == PASS and not mono and max(D) > tol:
        v = INCONCLUSIVE
    rep.verdict = v
    rep.details["monotone"] = mono
    return rep


# ---------------------------------------------------------------------------
# uniform integrability
# ---------------------------------------------------------------------------

def check_uniform_integrability(kernel, x, f: Callable, K_grid, grid: LimitGridSpec,
                                tol: float = 1e-3, exact: bool | None = None,
                                name: str = "f") -> DiagnosticReport:
    """Tail curve ``T(K) = max_t E[|f(X_t)|; |f(X_t)| >= K]`` over the whole grid.

    Passes when ``T(K_max) <= tol``; fails when the last three values of
    ``T`` agree to a relative ``PLATEAU_RTOL`` (a plateau) above ``tol``.
    """
    kernel, _, model = resolve(kernel, None, exact)
    K_grid = [float(K) for K in K_grid]
    if any(b <= a for a, b in zip(K_grid, K_grid[1:])):
        raise ValueError("K_grid must be increasing")
    rep = DiagnosticReport("UI", INCONCLUSIVE, tolerances={"tol": tol, "sigmas": 3}, grid=grid.to_dict(),
                           provenance=_provenance(kernel, grid, model, function=name, x=repr(x)))
    T, Tse = [], []
    if is_exact(kernel):
        laws = laws_on_grid(kernel, x, grid.t_grid)
        rep.details["pruned_mass"] = max(getattr(l, "pruned_mass", 0.0) for l in laws.values())
        vals = {t: [(w, abs(float(f(s)))) for s, w in laws[t].items()] for t in grid.t_grid}
        for K in K_grid:
            T.append(max(math.fsum(w * v for w, v in vals[t] if v >= K) for t in grid.t_grid))
            Tse.append(0.0)
    else:
        blocks = list(values_at_times(kernel, x, grid.t_grid, lambda s: np.abs(f(s)), grid.samples, grid.seed))
        V = np.concatenate(blocks)
        n = len(V)
        for K in K_grid:
            tails = np.where(V >= K, V, 0.0)
            m = tails.mean(axis=0)
            k = int(np.argmax(m))
            T.append(float(m[k]))
            Tse.append(float(tails[:, k].std(ddof=1) / math.sqrt(n)))
    rep.add_curve("T", K_grid, T, Tse)
    rep.statistic = T[-1]
    if len(T) >= 3:
        spread = max(T[-3:]) - min(T[-3:])
        plateau = spread <= PLATEAU_RTOL * max(T[-3:]) + 2 * max(Tse[-3:])
    else:
        plateau = False
    rep.verdict = small_verdict(T[-1], Tse[-1], tol, plateau)
    rep.details["plateau"] = plateau
    return rep


# ---------------------------------------------------------------------------
# tightness
# ---------------------------------------------------------------------------

def ball_mass_curve(kernel, x, center, R: float, steps, metric, cesaro: bool = False,
                    closed: bool = True) -> np.ndarray:
    """Exact ``P_n(x, B(center, R))`` (or ``Q_n``) for each ``n`` in ``steps``."""
    laws = laws_on_grid(kernel, x, list(steps), cesaro=cesaro)
    inside = (lambda s: float(metric(s, center)) <= R) if closed else (lambda s: float(metric(s, center)) < R)
    return np.array([laws[n].mass_of(inside) for n in steps])


def check_tightness(kernel, x, radii, grid: LimitGridSpec, metric=None, center=None,
                    tol: float = 0.05, exact: bool | None = None) -> DiagnosticReport:
    """Cesaro mass of growing closed balls, ``m(R) = min_{t in tail} Q_t(x, B(center, R))``.

    Tight when ``m(R_max) >= 1 - tol``; mass escapes when it stays below.
    """
    kernel, metric, model = resolve(kernel, metric, exact)
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    center = x if center is None else center
    rep = DiagnosticReport("tightness", INCONCLUSIVE, tolerances={"tol": tol, "sigmas": 3},
                           grid=grid.to_dict(), provenance=_provenance(kernel, grid, model, x=repr(x)))
    lo = grid.tail_start
    inds = [_ball_indicator(kernel, metric, center, R, closed=True) for R in radii]
    M, E = expectation_curves(kernel, x, inds, grid.t_grid, True, grid.samples, grid.seed)
    mR, mse = [], []
    for j, R in enumerate(radii):
        k = lo + int(np.argmin(M[j, lo:]))
        mR.append(float(M[j, k]))
        mse.append(float(E[j, k]))
        rep.add_curve(f"R={R:g}", grid.t_grid, M[j], E[j])
    rep.add_curve("m", radii, mR, mse)
    rep.statistic = mR[-1]
    rep.verdict = margin_verdict(mR[-1], mse[-1], 1 - tol)
    return rep
