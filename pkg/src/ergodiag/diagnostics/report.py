"""Grid specifications, reports and verdict rules."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
SIGMAS = 3.0


class InconsistencyError(AssertionError):
    """Both sides of an equivalence disagree."""


@dataclass(frozen=True)
class LimitGridSpec:
    """Finite surrogate for ``t -> infinity`` and ``x' -> x``.

    ``liminf``/``limsup`` over ``t`` become min/max over the last
    ``tail_fraction`` of ``t_grid``.
    """

    t_grid: tuple
    tail_fraction: float = 0.5
    probe_radii: tuple = ()
    samples: int = 2000
    seed: int = 0

    def __post_init__(self):
        t = list(self.t_grid)
        if not t:
            raise ValueError("t_grid: must not be empty")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("t_grid: must be strictly increasing")
        r = list(self.probe_radii)
        if any(b >= a for a, b in zip(r, r[1:])):
            raise ValueError("probe_radii: must be strictly decreasing")
        if not 0 < self.tail_fraction <= 1:
            raise ValueError("tail_fraction: must lie in (0, 1]")
        if self.samples < 2:
            raise ValueError("samples: need at least 2")
        object.__setattr__(self, "t_grid", tuple(t))
        object.__setattr__(self, "probe_radii", tuple(r))

    @property
    def tail_start(self) -> int:
        n = len(self.t_grid)
        return n - max(1, int(math.ceil(self.tail_fraction * n)))

    @property
    def tail(self) -> tuple:
        return self.t_grid[self.tail_start:]

    def to_dict(self) -> dict:
        return {"t_grid": list(self.t_grid), "tail_fraction": self.tail_fraction,
                "probe_radii": list(self.probe_radii), "samples": self.samples, "seed": self.seed}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    return repr(v)


def _cell(v):
    return f"{v:.17g}" if isinstance(v, (int, float)) and not isinstance(v, bool) else v


@dataclass
class DiagnosticReport:
    """Verdict plus the statistic curves it was derived from."""

    condition: str
    verdict: str
    statistic: float = float("nan")
    curves: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    def add_curve(self, name: str, x: Sequence, y: Sequence, stderr: Sequence | None = None):
        c = {"x": list(map(_jsonable, x)), "y": [float(v) for v in y]}
        if stderr is not None:
            c["stderr"] = [float(v) for v in stderr]
        self.curves[name] = c

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "children"}
        d["children"] = [c.to_dict() for c in self.children]
        return _jsonable(d)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["report", "curve", "x", "y", "stderr"])
        for rep in [self] + self.walk():
            for name, c in rep.curves.items():
                se = c.get("stderr", [""] * len(c["y"]))
                for x, y, e in zip(c["x"], c["y"], se):
                    w.writerow([rep.condition, name, _cell(x), f"{y:.17g}", e if e == "" else f"{e:.17g}"])
        return buf.getvalue()

    def walk(self) -> list:
        out = []
        for c in self.children:
            out.append(c)
            out.extend(c.walk())
        return out


def margin_verdict(stat: float, se: float, floor: float) -> str:
    """``pass`` if ``stat`` clears ``floor`` by three standard errors, ``fail`` if it misses it."""
    if stat - SIGMAS * se > floor:
        return PASS
    if stat + SIGMAS * se <= floor:
        return FAIL
    return INCONCLUSIVE


def small_verdict(value: float, se: float, tol: float, plateau: bool) -> str:
    """Decide ``value -> 0`` from its final value: pass below ``tol``, fail on a plateau above it."""
    if value + SIGMAS * se <= tol:
        return PASS
    if value - SIGMAS * se > tol and plateau:
        return FAIL
    return INCONCLUSIVE


def combine(verdicts: Sequence[str]) -> str:
    """All must pass; any failure fails."""
    if any(v == FAIL for v in verdicts):
        return FAIL
    if all(v == PASS for v in verdicts):
        return PASS
    return INCONCLUSIVE
