"""Model descriptor shared by the model zoo."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from ..markov import CountableKernel, ExactLaws, SamplingKernel, SparseDistribution
from ..states import Metric


@dataclass(frozen=True)
class ModelDescriptor:
    """Everything the diagnostics need to know about one example process.

    Attributes
    ----------
    id : str
        Registry key.
    metric : Metric
        Distance on the state space.
    V : callable
        Nonnegative weight / Lyapunov function used by the weighted families.
    countable, sampler, exact : optional
        The available kernel forms.  ``exact`` carries closed-form laws for
        models whose laws are finitely supported without a countable kernel.
    invariant : SparseDistribution, optional
        Invariant measure when it is finitely supported (or a finitely
        supported surrogate comparable with ``exact.cesaro_law``).
    invariant_integral : callable, optional
        ``f -> <f, mu>``.
    has_invariant : bool
        ``False`` certifies that no invariant measure exists.
    oracles : dict
        Named closed-form functions.
    probes : list
        Default start states for uniform-in-x statistics.
    neighbours : callable, optional
        ``(x, r) -> states`` at distance at most ``r`` from ``x``, used as
        the ``x' -> x`` probes of eventual continuity checks.
    defaults : dict
        Default grids, balls and tolerances for the composite report.
    """

    id: str
    description: str
    metric: Metric
    V: Callable
    countable: CountableKernel | None = None
    sampler: SamplingKernel | None = None
    exact: ExactLaws | None = None
    invariant: SparseDistribution | None = None
    invariant_integral: Callable | None = None
    has_invariant: bool = True
    oracles: dict = field(default_factory=dict)
    probes: tuple = ()
    base_point: Any = None
    coord: Callable | None = None
    parse_state: Callable[[str], Any] = int
    encode_state: Callable[[Any], Any] = lambda s: s
    families: Callable[[], list] = lambda: []
    time_kind: str = "discrete"
    neighbours: Callable[[Any, float], list] | None = None
    defaults: dict = field(default_factory=dict)

    @property
    def kernel(self):
        """Preferred kernel: exact when available, sampling otherwise."""
        return self.countable or self.exact or self.sampler

    def integrate_invariant(self, f: Callable) -> float:
        if self.invariant_integral is not None:
            return self.invariant_integral(f)
        if self.invariant is not None:
            from ..markov import integrate
            return integrate(self.invariant, f)
        raise ValueError(f"model {self.id!r} has no invariant measure")

    def family(self, kind: str):
        for fam in self.families():
            if fam.kind == kind or fam.name == kind:
                return fam
        raise KeyError(f"model {self.id!r} has no family {kind!r}")
