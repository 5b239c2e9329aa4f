"""Kernels, exact distribution propagation and Monte Carlo path estimators.

Two kernel flavours are supported.  A :class:`CountableKernel` knows the
exact one-step law of every state and drives :func:`propagate`; a
:class:`SamplingKernel` draws one step for a whole array of paths at once and
drives the Monte Carlo estimators.

Randomness
----------
Every Monte Carlo routine takes an integer seed (or a
``numpy.random.SeedSequence``).  Paths are simulated in blocks of
:data:`BLOCK_SIZE`; block ``k`` draws from the ``k``-th child of
``SeedSequence(seed).spawn``.  Identical seeds therefore give bitwise
identical output, and blocks can be simulated independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

State = Hashable

MASS_TOL = 1e-12
PRUNE_THRESHOLD = 1e-15
BLOCK_SIZE = 4096


class KernelError(ValueError):
    """A kernel row is not a probability vector."""


class EvaluationError(ValueError):
    """A test function returned a non-finite value."""


# ---------------------------------------------------------------------------
# finitely supported measures
# ---------------------------------------------------------------------------

class SparseDistribution(Mapping):
    """Finitely supported probability measure ``{state: weight}``.

    Weights are strictly positive and sum to one within ``1e-12``.  The
    ``pruned_mass`` attribute records how much mass was dropped (and
    renormalized away) while this law was produced by :func:`propagate`.
    """

    __slots__ = ("_atoms", "pruned_mass")

    def __init__(self, atoms: Mapping[State, float] | Iterable[tuple[State, float]], pruned_mass: float = 0.0):
        if isinstance(atoms, Mapping):
            items = list(atoms.items())
        else:
            items = list(atoms)
        d: dict[State, float] = {}
        for s, w in items:
            if s in d:
                raise ValueError(f"duplicate atom {s!r}")
            w = float(w)
            if not w > 0 or not math.isfinite(w):
                raise ValueError(f"atom {s!r} has non-positive weight {w}")
            d[s] = w
        total = math.fsum(d.values())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        self._atoms = d
        self.pruned_mass = float(pruned_mass)

    @classmethod
    def point(cls, state: State) -> "SparseDistribution":
        return cls({state: 1.0})

    @classmethod
    def uniform(cls, states: Sequence[State]) -> "SparseDistribution":
        w = 1.0 / len(states)
        return cls([(s, w) for s in states])

    @classmethod
    def from_unnormalized(cls, weights: Mapping[State, float]) -> "SparseDistribution":
        """Normalize nonnegative weights, dropping zeros."""
        kept = {s: float(w) for s, w in weights.items() if w > 0}
        total = math.fsum(kept.values())
        return cls({s: w / total for s, w in kept.items()})

    def __getitem__(self, state):
        return self._atoms[state]

    def __iter__(self):
        return iter(self._atoms)

    def __len__(self):
        return len(self._atoms)

    def weight(self, state: State) -> float:
        return self._atoms.get(state, 0.0)

    @property
    def support(self) -> list:
        return list(self._atoms)

    def total_mass(self) -> float:
        return math.fsum(self._atoms.values())

    def mass_of(self, predicate: Callable[[State], bool]) -> float:
        return math.fsum(w for s, w in self._atoms.items() if predicate(s))

    def to_records(self, encode: Callable[[State], Any] = lambda s: s) -> list[dict]:
        return [{"state": encode(s), "weight": w} for s, w in self._atoms.items()]

    @classmethod
    def from_records(cls, records: Iterable[Mapping], decode: Callable[[Any], State] = lambda s: s):
        return cls([(decode(r["state"]), r["weight"]) for r in records])

    def __repr__(self):
        body = ", ".join(f"{s!r}: {w:.6g}" for s, w in list(self._atoms.items())[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"SparseDistribution({{{body}{more}}})"


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted sample cloud produced by Monte Carlo simulation."""

    points: np.ndarray
    weights: np.ndarray
    n_samples: int
    seed: Any = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("empirical weights must be positive")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"empirical weights sum to {w.sum()!r}")

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed=None) -> "EmpiricalMeasure":
        samples = np.asarray(samples)
        n = len(samples)
        return cls(samples, np.full(n, 1.0 / n), n, seed)

    def to_sparse(self) -> SparseDistribution:
        """Collapse repeated points into a :class:`SparseDistribution`."""
        acc: dict[State, float] = {}
        for p, w in zip(self.points, self.weights):
            key = tuple(p.tolist()) if np.ndim(p) else p.item()
            acc[key] = acc.get(key, 0.0) + float(w)
        return SparseDistribution.from_unnormalized(acc)


# ---------------------------------------------------------------------------
# exact kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountableKernel:
    """Discrete-time kernel given by its finite rows ``state -> [(next, p)]``."""

    row: Callable[[State], Iterable[tuple[State, float]]]
    name: str = ""
    time_kind: str = field(default="discrete", init=False)

    def transition(self, state: State) -> list[tuple[State, float]]:
        entries = list(self.row(state))
        total = 0.0
        for nxt, p in entries:
            if p < 0 or not math.isfinite(p):
                raise KernelError(f"kernel {self.name!r}: negative or non-finite probability {p} at state {state!r}")
            total += p
        if abs(total - 1.0) > MASS_TOL:
            raise KernelError(f"kernel {self.name!r}: row of state {state!r} sums to {total!r}")
        return entries


def step_distribution(kernel: CountableKernel, dist: Mapping[State, float]) -> dict[State, float]:
    out: dict[State, float] = {}
    for s, w in dist.items():
        for nxt, p in kernel.transition(s):
            if p > 0:
                out[nxt] = out.get(nxt, 0.0) + w * p
    return out


def _prune(weights: dict[State, float], threshold: float) -> tuple[dict[State, float], float]:
    dropped = math.fsum(w for w in weights.values() if w < threshold)
    if dropped == 0.0 and all(w > 0 for w in weights.values()):
        return weights, 0.0
    kept = {s: w for s, w in weights.items() if w >= threshold and w > 0}
    total = math.fsum(kept.values())
    return {s: w / total for s, w in kept.items()}, dropped


def iterate_laws(kernel: CountableKernel, init: SparseDistribution,
                 prune: float = PRUNE_THRESHOLD) -> Iterator[SparseDistribution]:
    """Yield ``P_0^* init, P_1^* init, P_2^* init, ...`` forever."""
    current = init
    yield current
    pruned = init.pruned_mass
    while True:
        weights, dropped = _prune(step_distribution(kernel, current), prune)
        pruned += dropped
        current = SparseDistribution(weights, pruned_mass=pruned)
        yield current


def propagate(kernel: CountableKernel, init: SparseDistribution, n: int,
              prune: float = PRUNE_THRESHOLD) -> SparseDistribution:
    """Exact ``n``-step law ``P_n^* init``.

    Atoms lighter than ``prune`` are dropped after each step and the
    remainder renormalized; the dropped mass accumulates in
    ``result.pruned_mass``.

    >>> from ergodiag.models import dyadic_chain
    >>> propagate(dyadic_chain().kernel, SparseDistribution.point(2), 1)
    SparseDistribution({0: 0.5, 4: 0.5})
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    laws = iterate_laws(kernel, init, prune)
    for _ in range(n):
        next(laws)
    return next(laws)


def propagate_many(kernel: CountableKernel, init: SparseDistribution, steps: Iterable[int],
                   prune: float = PRUNE_THRESHOLD) -> dict[int, SparseDistribution]:
    """Laws at each requested step, computed in a single forward sweep."""
    wanted = sorted(set(int(s) for s in steps))
    out = {}
    if not wanted:
        return out
    for s, law in enumerate(iterate_laws(kernel, init, prune)):
        if s in wanted:
            out[s] = law
        if s >= wanted[-1]:
            break
    return out


def cesaro_laws(kernel: CountableKernel, init: SparseDistribution, steps: Iterable[int],
                prune: float = PRUNE_THRESHOLD) -> dict[int, SparseDistribution]:
    """Cesaro laws ``Q_t^* init = (1/t) sum_{s=1..t} P_s^* init`` for each ``t`` in ``steps``."""
    wanted = sorted(set(int(s) for s in steps))
    if wanted and wanted[0] < 1:
        raise ValueError("Cesaro averages need t >= 1")
    out = {}
    if not wanted:
        return out
    acc: dict[State, float] = {}
    for s, law in enumerate(iterate_laws(kernel, init, prune)):
        if s == 0:
            continue
        for st, w in law.items():
            acc[st] = acc.get(st, 0.0) + w
        if s in wanted:
            out[s] = SparseDistribution({st: w / s for st, w in acc.items()})
        if s >= wanted[-1]:
            break
    return out


def integrate(dist: Mapping[State, float], f: Callable[[State], float]) -> float:
    """``<f, dist>`` as an exactly rounded weighted sum."""
    terms = []
    for s, w in dist.items():
        v = float(f(s))
        if not math.isfinite(v):
            raise EvaluationError(f"test function is not finite at state {s!r}: {v}")
        terms.append(w * v)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# sampling kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplingKernel:
    """Vectorized one-step sampler.

    ``step(states, rng)`` maps an array of encoded states (leading axis =
    paths) to the next states.  In ``"jump"`` mode the steps happen at the
    points of a rate-one Poisson clock and ``flow(states, dt)``, if given,
    moves the states deterministically between jumps.
    """

    step: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    encode: Callable[[State], Any] = float
    decode: Callable[[Any], State] = lambda v: v
    time_kind: str = "discrete"
    flow: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = ""

    def __post_init__(self):
        if self.time_kind not in ("discrete", "jump"):
            raise ValueError(f"unknown time_kind {self.time_kind!r}")
        if self.flow is not None and self.time_kind != "jump":
            raise ValueError("a deterministic flow needs jump-chain time")

    def initial(self, state: State, n: int) -> np.ndarray:
        enc = np.asarray(self.encode(state), dtype=float)
        return np.broadcast_to(enc, (n,) + enc.shape).copy()

    def sample_next(self, states: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """One transition plus holding times (zero in discrete mode, Exp(1) otherwise)."""
        n = len(states)
        if self.time_kind == "discrete":
            return self.step(states, rng), np.zeros(n)
        hold = rng.exponential(1.0, n)
        moved = self.flow(states, hold) if self.flow is not None else states
        return self.step(moved, rng), hold


def sampler_from_countable(kernel: CountableKernel, encode=float, decode=None) -> SamplingKernel:
    """Generic (slow) sampler driven by the rows of a countable kernel.

    Only for scalar-encoded states; each distinct current state costs one
    row evaluation per step.
    """
    decode = decode or (lambda v: int(v) if float(v).is_integer() else v)

    def step(states, rng):
        out = np.empty_like(states)
        u = rng.random(len(states))
        for val in np.unique(states):
            idx = np.flatnonzero(states == val)
            entries = kernel.transition(decode(val))
            nxt = np.array([encode(s) for s, _ in entries], dtype=float)
            cum = np.cumsum([p for _, p in entries])
            pick = np.minimum(np.searchsorted(cum, u[idx], side="right"), len(cum) - 1)
            out[idx] = nxt[pick]
        return out

    return SamplingKernel(step=step, encode=encode, decode=decode, name=kernel.name)


def spawn_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)


def _blocks(n_paths: int, seed) -> Iterator[tuple[int, np.random.Generator]]:
    n_blocks = max(1, math.ceil(n_paths / BLOCK_SIZE))
    for k, child in enumerate(spawn_seeds(seed, n_blocks)):
        size = min(BLOCK_SIZE, n_paths - k * BLOCK_SIZE)
        yield size, np.random.default_rng(child)


def _eval(f, states) -> np.ndarray:
    return np.asarray(f(states), dtype=float) * np.ones(len(states))


def values_at_times(kernel: SamplingKernel, x: State, times, f: Callable, n_paths: int,
                    seed) -> Iterator[np.ndarray]:
    """Yield, block by block, ``f`` evaluated along independent paths.

    ``times`` is either a 1-D increasing array shared by every path or a
    2-D array ``(n_paths, m)`` of per-path increasing times.  Each yielded
    array has shape ``(block, m)``.  In discrete mode times must be
    integers.
    """
    times = np.asarray(times, dtype=float)
    start = 0
    for size, rng in _blocks(n_paths, seed):
        tb = times if times.ndim == 1 else times[start:start + size]
        start += size
        if kernel.time_kind == "discrete":
            yield _discrete_block(kernel, x, tb, f, size, rng)
        else:
            yield _jump_block(kernel, x, tb, f, size, rng)


def _discrete_block(kernel, x, times, f, size, rng):
    if times.ndim != 1:
        raise ValueError("discrete-time chains need a shared integer time grid")
    if np.any(times != np.round(times)) or np.any(times < 0):
        raise ValueError("discrete-time chains need nonnegative integer times")
    grid = times.astype(int)
    out = np.empty((size, len(grid)))
    states = kernel.initial(x, size)
    order = np.argsort(grid, kind="stable")
    pos = 0
    s = 0
    while pos < len(order):
        while pos < len(order) and grid[order[pos]] == s:
            out[:, order[pos]] = _eval(f, states)
            pos += 1
        if pos < len(order):
            states = kernel.step(states, rng)
            s += 1
    return out


def _jump_block(kernel, x, times, f, size, rng):
    per_path = np.broadcast_to(times, (size, times.shape[-1])) if times.ndim == 1 else times
    m = per_path.shape[1]
    out = np.empty((size, m))
    states = kernel.initial(x, size)
    t_last = np.zeros(size)
    ptr = np.zeros(size, dtype=int)
    rows = np.arange(size)
    while True:
        hold = rng.exponential(1.0, size)
        t_next = t_last + hold
        while True:
            pending = ptr < m
            if not pending.any():
                break
            cand = rows[pending]
            due = per_path[cand, ptr[cand]] < t_next[cand]
            idx = cand[due]
            if idx.size == 0:
                break
            dt = per_path[idx, ptr[idx]] - t_last[idx]
            st = states[idx]
            if kernel.flow is not None:
                st = kernel.flow(st, dt)
            out[idx, ptr[idx]] = _eval(f, st)
            ptr[idx] += 1
        if np.all(ptr >= m):
            return out
        moved = kernel.flow(states, hold) if kernel.flow is not None else states
        states = kernel.step(moved, rng)
        t_last = t_next


class MCEstimate(NamedTuple):
    mean: float
    stderr: float
    n: int
    excluded: int = 0

    def __float__(self):
        return self.mean


def _summarize(samples: np.ndarray, strict: bool) -> MCEstimate:
    finite = np.isfinite(samples)
    excluded = int((~finite).sum())
    if excluded and strict:
        raise EvaluationError(f"{excluded} Monte Carlo samples were not finite")
    vals = samples[finite]
    n = len(vals)
    if n == 0:
        raise EvaluationError("no finite Monte Carlo samples")
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return MCEstimate(mean, stderr, n, excluded)


def estimate_Ptf(kernel: SamplingKernel, x: State, t: float, f: Callable, n_samples: int,
                 seed, strict: bool = False) -> MCEstimate:
    """Monte Carlo ``P_t f(x)`` with its standard error ``sd / sqrt(n)``."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    vals = np.concatenate([b[:, 0] for b in values_at_times(kernel, x, [t], f, n_samples, seed)])
    return _summarize(vals, strict)


def estimate_Ptf_grid(kernel: SamplingKernel, x: State, t_grid, f: Callable, n_samples: int,
                      seed) -> tuple[np.ndarray, np.ndarray]:
    """Means and standard errors of ``P_t f(x)`` on a whole time grid (shared paths)."""
    vals = np.concatenate(list(values_at_times(kernel, x, t_grid, f, n_samples, seed)))
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(len(vals))


def stratified_times(t: float, m: int, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Per-path sorted uniform times, one in each of ``m`` equal strata of ``[0, t)``."""
    edges = np.arange(m) * (t / m)
    return edges + rng.random((n_paths, m)) * (t / m)


def cesaro_Qtf(kernel, x: State, t: float, f: Callable, mode: str = "exact",
               n_samples: int = 1000, seed=None, time_samples: int = 64,
               strict: bool = False):
    """Cesaro average ``Q_t f(x)``.

    Discrete time uses ``(1/t) sum_{s=1..t} P_s f(x)``.  ``mode="exact"``
    needs a :class:`CountableKernel` and returns a float.
    ``mode="monte-carlo"`` returns an :class:`MCEstimate` of the mean path
    time-average: exact over the integer grid for discrete chains, and for
    jump chains estimated from ``time_samples`` stratified uniform times per
    path (unbiased for each path's time-average).
    """
    if mode == "exact":
        if not isinstance(kernel, CountableKernel):
            raise TypeError("exact Cesaro averages need a CountableKernel")
        if t < 1 or int(t) != t:
            raise ValueError("discrete Cesaro horizon must be an integer >= 1")
        t = int(t)
        vals = [integrate(law, f) for s, law in zip(range(t + 1), iterate_laws(kernel, SparseDistribution.point(x))) if s >= 1]
        return math.fsum(vals) / t
    if mode != "monte-carlo":
        raise ValueError(f"unknown mode {mode!r}")
    if kernel.time_kind == "discrete":
        if t < 1 or int(t) != t:
            raise ValueError("discrete Cesaro horizon must be an integer >= 1")
        grid = np.arange(1, int(t) + 1)
        per_path = np.concatenate([b.mean(axis=1) for b in values_at_times(kernel, x, grid, f, n_samples, seed)])
    else:
        if t <= 0:
            raise ValueError("continuous Cesaro horizon must be positive")
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        time_seed, path_seed = ss.spawn(2)
        times = stratified_times(t, time_samples, n_samples, np.random.default_rng(time_seed))
        per_path = np.concatenate([b.mean(axis=1) for b in values_at_times(kernel, x, times, f, n_samples, path_seed)])
    return _summarize(per_path, strict)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Right-continuous piecewise path: ``states[k]`` holds on ``[times[k], times[k+1])``.

    With a flow attached the path moves deterministically between jump
    times; :meth:`at` accounts for it.
    """

    times: np.ndarray
    states: np.ndarray
    horizon: float
    flow: Callable | None = None

    def at(self, t: float):
        if t < 0 or t > self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        st = self.states[k]
        if self.flow is not None:
            st = self.flow(st[None, ...], np.array([t - self.times[k]]))[0]
        return st

    def to_records(self) -> list[dict]:
        return [{"time": float(t), "state": np.asarray(s).tolist()} for t, s in zip(self.times, self.states)]


def simulate_paths(kernel: SamplingKernel, x: State, horizon: float, n_paths: int, seed) -> list[Trajectory]:
    """Simulate ``n_paths`` independent trajectories on ``[0, horizon]``."""
    if horizon <= 0 or n_paths < 1:
        raise ValueError("need horizon > 0 and n_paths >= 1")
    out: list[Trajectory] = []
    for size, rng in _blocks(n_paths, seed):
        states = kernel.initial(x, size)
        times_rec = [np.zeros(size)]
        states_rec = [states.copy()]
        t = np.zeros(size)
        while True:
            nxt, hold = kernel.sample_next(states, rng)
            t = t + (hold if kernel.time_kind == "jump" else 1.0)
            if np.all(t > horizon):
                break
            states = nxt
            times_rec.append(t.copy())
            states_rec.append(states.copy())
        T = np.stack(times_rec, axis=1)
        S = np.stack(states_rec, axis=1)
        for p in range(size):
            keep = T[p] <= horizon
            out.append(Trajectory(T[p][keep], S[p][keep], float(horizon), kernel.flow))
    return out


@dataclass(frozen=True)
class ExactLaws:
    """Closed-form transition laws of a model that is not a countable kernel.

    ``law(x, t)`` returns ``P_t^* delta_x`` as a :class:`SparseDistribution`;
    ``cesaro_law(x, t)``, when given, returns a finitely supported
    representation of ``Q_t^* delta_x`` comparable with ``reference``.
    """

    law: Callable[[State, float], SparseDistribution]
    cesaro_law: Callable[[State, float], SparseDistribution] | None = None
    reference: SparseDistribution | None = None
    name: str = ""
    time_kind: str = "continuous"


def laws_on_grid(kernel, x: State, t_grid, cesaro: bool = False) -> dict:
    """Exact ``P_t`` (or ``Q_t``) laws from ``x`` for each ``t`` in ``t_grid``."""
    if isinstance(kernel, CountableKernel):
        steps = [int(t) for t in t_grid]
        if any(s != t for s, t in zip(steps, t_grid)):
            raise ValueError("countable kernels run in integer time")
        init = SparseDistribution.point(x)
        return cesaro_laws(kernel, init, steps) if cesaro else propagate_many(kernel, init, steps)
    if isinstance(kernel, ExactLaws):
        fn = kernel.cesaro_law if cesaro else kernel.law
        if fn is None:
            raise TypeError(f"{kernel.name}: no exact Cesaro laws available")
        return {t: fn(x, t) for t in t_grid}
    raise TypeError(f"no exact laws for {type(kernel).__name__}")


def is_exact(kernel) -> bool:
    return isinstance(kernel, (CountableKernel, ExactLaws))
