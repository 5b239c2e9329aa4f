"""Running time averages along one trajectory."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..markov import Trajectory
from .report import DiagnosticReport


def running_averages(trajectory, f: Callable, checkpoints: Sequence) -> np.ndarray:
    """``(1/T) int_0^T f(X_s) ds`` at each checkpoint ``T``.

    A plain sequence is read as a discrete path ``X_0, X_1, ...`` and the
    integral as ``sum_{s < T} f(X_s)``; a :class:`Trajectory` is integrated
    piecewise between its jump times (the flow, if any, is ignored between
    jumps only when ``f`` does not depend on it).
    """
    cps = [float(c) for c in checkpoints]
    if isinstance(trajectory, Trajectory):
        if max(cps) > trajectory.horizon:
            raise ValueError("trajectory shorter than the last checkpoint")
        times = np.append(trajectory.times, trajectory.horizon)
        vals = np.array([float(f(s)) for s in trajectory.states])
        out = []
        for T in cps:
            seg = np.clip(np.minimum(times[1:], T) - times[:-1], 0.0, None)
            out.append(math.fsum((seg * vals).tolist()) / T)
        return np.array(out)
    path = list(trajectory)
    if max(cps) > len(path):
        raise ValueError("trajectory shorter than the last checkpoint")
    vals = [float(f(s)) for s in path]
    csum = np.concatenate([[0.0], np.cumsum(vals)])
    return np.array([csum[int(T)] / T for T in cps])


def birkhoff_divergence_check(trajectory, f: Callable, checkpoints: Sequence,
                              thresholds: Sequence = (1e3,)) -> DiagnosticReport:
    """``diverging`` when the last running average exceeds every threshold."""
    avg = running_averages(trajectory, f, checkpoints)
    rep = DiagnosticReport("birkhoff", "bounded", statistic=float(avg[-1]),
                           tolerances={"thresholds": list(thresholds)})
    rep.add_curve("average", list(checkpoints), avg)
    if avg[-1] > max(thresholds):
        rep.verdict = "diverging"
    rep.details["nondecreasing_tail"] = bool(np.all(np.diff(avg[len(avg) // 2:]) >= 0))
    return rep
