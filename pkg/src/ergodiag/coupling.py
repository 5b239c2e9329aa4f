"""Independent product coupling and hitting times of a product ball.

Two copies of a chain are run independently; ``tau`` is the first time both
lie in the closed ball ``B(z, r)``.  With ``gamma = (inf_x liminf_t
P_t(x, B(z, r)) / 2)**2``, restarting from the paths that have not entered
yet, each block of suitable length is entered with probability at least
``gamma / 2``, hence ``P(tau > block n) <= (1 - gamma/2)**n``.
:func:`verify_tail_bound` checks that inequality empirically.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

import numpy as np

from .markov import (CountableKernel, SamplingKernel, SparseDistribution, _blocks,
                     laws_on_grid, sampler_from_countable, spawn_seeds, step_distribution)
from .states import ABS


@dataclass(frozen=True)
class CoupledKernel:
    """Two independent copies of ``base``; pair states are 2-tuples."""

    base: Any
    sampler: SamplingKernel
    countable: CountableKernel | None = None
    metric: Any = ABS

    def pair_row(self, pair):
        if self.countable is None:
            raise TypeError("exact pair rows need a countable base kernel")
        a, b = pair
        ra = self.countable.transition(a)
        rb = self.countable.transition(b)
        return [((x, y), p * q) for x, p in ra for y, q in rb]

    def step(self, a: np.ndarray, b: np.ndarray, rng):
        # componentwise, sequential draws from one stream keep the copies independent
        return self.sampler.step(a, rng), self.sampler.step(b, rng)


def product_kernel(base, sampler: SamplingKernel | None = None, metric=ABS) -> CoupledKernel:
    """Independent coupling ``R((x, y), A x B) = P(x, A) P(y, B)``.

    ``base`` may be a :class:`CountableKernel`, a :class:`SamplingKernel`
    or a model descriptor exposing ``countable``/``sampler``/``metric``.
    """
    countable = None
    if hasattr(base, "countable") and hasattr(base, "sampler"):
        countable, sampler, metric = base.countable, sampler or base.sampler, base.metric
    elif isinstance(base, CountableKernel):
        countable = base
    elif isinstance(base, SamplingKernel):
        sampler = sampler or base
    if sampler is None:
        sampler = sampler_from_countable(countable)
    if sampler.time_kind != "discrete":
        raise ValueError("the product coupling is implemented for discrete-time chains")
    ck = CoupledKernel(base, sampler, countable, metric)
    return ck


def coupled_countable(ck: CoupledKernel) -> CountableKernel:
    return CountableKernel(ck.pair_row, name=f"{getattr(ck.countable, 'name', '')}^2")


def marginal(dist, component: int) -> SparseDistribution:
    acc: dict = {}
    for pair, w in dist.items():
        acc[pair[component]] = acc.get(pair[component], 0.0) + w
    return SparseDistribution(acc)


@dataclass
class HittingRecord:
    """Outcome of one coupled run.

    ``tau`` is ``None`` when the pair did not enter the product ball by
    ``horizon`` (censored).
    """

    start: tuple
    z: Any
    r: float
    tau: int | None
    horizon: int
    path_length: int

    @property
    def censored(self) -> bool:
        return self.tau is None

    def to_json(self, encode=lambda s: s) -> str:
        d = asdict(self)
        d["start"] = [encode(s) for s in self.start]
        d["z"] = encode(self.z)
        return json.dumps(d)


def _in_ball(ck: CoupledKernel, states: np.ndarray, z, r: float) -> np.ndarray:
    zz = ck.sampler.initial(z, 1)[0]
    return np.asarray(ck.metric(states, zz), dtype=float) <= r


def hitting_times(ck: CoupledKernel, start: tuple, z, r: float, horizon: int, n: int, seed) -> np.ndarray:
    """First entry times of ``n`` independent pairs; ``inf`` marks censoring."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    out = []
    for size, rng in _blocks(n, seed):
        a = ck.sampler.initial(start[0], size)
        b = ck.sampler.initial(start[1], size)
        tau = np.full(size, np.inf)
        hit = _in_ball(ck, a, z, r) & _in_ball(ck, b, z, r)
        tau[hit] = 0
        for t in range(1, int(horizon) + 1):
            alive = np.isinf(tau)
            if not alive.any():
                break
            a, b = ck.step(a, b, rng)
            hit = alive & _in_ball(ck, a, z, r) & _in_ball(ck, b, z, r)
            tau[hit] = t
        out.append(tau)
    return np.concatenate(out)


def sample_hitting_time(ck: CoupledKernel, start: tuple, z, r: float, horizon: int, seed) -> HittingRecord:
    """One coupled run up to ``horizon``."""
    if not math.isfinite(horizon):
        raise ValueError("horizon must be finite")
    tau = hitting_times(ck, start, z, r, horizon, 1, seed)[0]
    t = None if math.isinf(tau) else int(tau)
    return HittingRecord(tuple(start), z, float(r), t, int(horizon), int(horizon) if t is None else t)


def sample_hitting_batch(ck: CoupledKernel, start: tuple, z, r: float, horizon: int, n: int, seed) -> list[HittingRecord]:
    taus = hitting_times(ck, start, z, r, horizon, n, seed)
    recs = []
    for tau in taus:
        t = None if math.isinf(tau) else int(tau)
        recs.append(HittingRecord(tuple(start), z, float(r), t, int(horizon), int(horizon) if t is None else t))
    return recs


def survival_curve(taus: np.ndarray, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Empirical ``P(tau > n)`` for ``n = 0..n_max`` with binomial standard errors."""
    N = len(taus)
    S = np.array([(taus > n).mean() for n in range(n_max + 1)])
    return S, np.sqrt(S * (1 - S) / N)


def exact_survival(ck: CoupledKernel, start: tuple, z, r: float, n_max: int) -> np.ndarray:
    """``P(tau > n)`` for ``n = 0..n_max`` by propagating the killed pair chain."""
    if ck.countable is None:
        raise TypeError("exact survival needs a countable base kernel")
    kernel = coupled_countable(ck)
    inside = lambda s: float(ck.metric(s, z)) <= r
    alive = {} if inside(start[0]) and inside(start[1]) else {tuple(start): 1.0}
    out = [sum(alive.values())]
    for _ in range(n_max):
        nxt = step_distribution(kernel, alive)
        alive = {p: w for p, w in nxt.items() if not (inside(p[0]) and inside(p[1]))}
        out.append(math.fsum(alive.values()))
    return np.array(out)


@dataclass
class GammaEstimate:
    gamma: float
    floor: float
    per_probe: dict
    t_grid: list
    tail_fraction: float
    verdict: str
    stderr: float = 0.0


def _tail(t_grid, frac):
    n = len(t_grid)
    return max(0, n - max(1, int(math.ceil(frac * n))))


def estimate_gamma(kernel, z, r: float, probes: Iterable, t_grid, samples: int = 2000, seed=0,
                   metric=ABS, tail_fraction: float = 0.5) -> GammaEstimate:
    """Plug-in ``gamma = (min_x tail-min_t P_t(x, B(z, r)) / 2)**2``.

    Exact when ``kernel`` has exact laws, Monte Carlo otherwise.  ``liminf``
    is replaced by the minimum over the last ``tail_fraction`` of ``t_grid``.
    """
    from .markov import estimate_Ptf_grid, is_exact
    probes = list(probes)
    if not probes:
        raise ValueError("probe set is empty")
    t_grid = list(t_grid)
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be increasing")
    lo = _tail(t_grid, tail_fraction)
    per = {}
    se = 0.0
    seeds = spawn_seeds(seed, len(probes))
    for x, ss in zip(probes, seeds):
        if is_exact(kernel):
            laws = laws_on_grid(kernel, x, t_grid)
            vals = [laws[t].mass_of(lambda s: float(metric(s, z)) < r) for t in t_grid]
            per[x] = min(vals[lo:])
        else:
            zz = kernel.initial(z, 1)[0]
            ind = lambda s: (np.asarray(metric(s, zz), dtype=float) < r).astype(float)
            m, e = estimate_Ptf_grid(kernel, x, t_grid, ind, samples, ss)
            k = lo + int(np.argmin(m[lo:]))
            per[x] = float(m[k])
            se = max(se, float(e[k]))
    floor = min(per.values())
    gamma = (floor / 2) ** 2
    verdict = "ok" if floor - 3 * se > 0 else "inconclusive"
    return GammaEstimate(gamma, floor, per, t_grid, tail_fraction, verdict, se)


@dataclass
class TailBoundReport:
    gamma: float
    n_paths: int
    block_horizons: list = field(default_factory=list)
    cumulative: list = field(default_factory=list)
    survival: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    sigma: list = field(default_factory=list)
    passed: list = field(default_factory=list)
    verdict: str = "pass"
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def verify_tail_bound(ck: CoupledKernel, start: tuple, z, r: float, gamma: float, n_blocks: int,
                      samples: int, seed, horizon_cap: int = 1 << 12) -> TailBoundReport:
    """Compare empirical block survival with ``(1 - gamma/2)**n``.

    Block ``n`` restarts from the pairs still outside the ball and runs for
    the shortest doubling horizon ``1, 2, 4, ...`` after which at least a
    ``gamma/2`` fraction of them has entered.  Block ``n`` passes when the
    survival after it is at most ``(1 - gamma/2)**n + 3 sigma`` with
    ``sigma = sqrt(b (1 - b) / N)``.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    rep = TailBoundReport(gamma, samples)
    rng = np.random.default_rng(spawn_seeds(seed, 1)[0])
    a = ck.sampler.initial(start[0], samples)
    b = ck.sampler.initial(start[1], samples)
    alive = ~(_in_ball(ck, a, z, r) & _in_ball(ck, b, z, r))
    elapsed = 0
    for n in range(1, n_blocks + 1):
        n_alive = int(alive.sum())
        block_len = 0
        if n_alive:
            entered = 0
            target = 1
            while True:
                while block_len < target:
                    idx = np.flatnonzero(alive)
                    if idx.size == 0:
                        break
                    a[idx], b[idx] = ck.step(a[idx], b[idx], rng)
                    hit = _in_ball(ck, a[idx], z, r) & _in_ball(ck, b[idx], z, r)
                    alive[idx[hit]] = False
                    entered += int(hit.sum())
                    block_len += 1
                if entered >= gamma / 2 * n_alive or not alive.any():
                    break
                if target >= horizon_cap:
                    rep.verdict = "inconclusive"
                    rep.note = f"block {n}: no horizon up to {horizon_cap} reached entry fraction gamma/2"
                    return rep
                target *= 2
        elapsed += block_len
        S = float(alive.mean())
        bnd = (1 - gamma / 2) ** n
        sig = math.sqrt(bnd * (1 - bnd) / samples)
        ok = S <= bnd + 3 * sig
        rep.block_horizons.append(block_len)
        rep.cumulative.append(elapsed)
        rep.survival.append(S)
        rep.bound.append(bnd)
        rep.sigma.append(sig)
        rep.passed.append(ok)
        if not ok:
            rep.verdict = "fail"
    return rep
