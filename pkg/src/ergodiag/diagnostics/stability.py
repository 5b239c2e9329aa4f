"""Composite report pairing a stability statement with its characterization.

* asymptotic stability  <=>  eventual continuity + (C1)
* mean ergodicity        <=>  Cesaro eventual continuity + (C2)

The converse directions need uniform integrability of the test functions
along the chain (of the envelope for the uniform variants).  When that
hypothesis fails only the forward direction is enforced.
"""

from __future__ import annotations

import math

import numpy as np

from ..distances import family_sup_gap
from ..families import TestFunctionFamily
from ..markov import integrate, is_exact, laws_on_grid
from .conditions import (check_evc, check_lbc_C1, check_lbc_C2, check_uniform_integrability,
                         expectation_curves, resolve)
from .report import (FAIL, INCONCLUSIVE, PASS, DiagnosticReport, InconsistencyError, LimitGridSpec,
                     combine, small_verdict)

K_LADDER = tuple(2.0 ** k for k in range(0, 21, 2))


def _distance_side(model, kernel, family, probes, grid, cesaro, uniform, tol, metric):
    """Distance (or representative gap) between the laws from each probe and the invariant law."""
    name = ("ME" if cesaro else "AS") + ("-uniform" if uniform else "")
    rep = DiagnosticReport(name, INCONCLUSIVE, tolerances={"tol": tol}, grid=grid.to_dict(),
                           provenance={"model": model.id, "family": family.name})
    if not model.has_invariant:
        rep.verdict = FAIL
        rep.details["reason"] = "model certifies that no invariant measure exists"
        return rep
    t_grid = list(grid.t_grid)
    worst = np.zeros(len(t_grid))
    worst_se = np.zeros(len(t_grid))
    pruned = 0.0
    if uniform:
        ref = getattr(kernel, "reference", None) or model.invariant
        for x in probes:
            laws = laws_on_grid(kernel, x, t_grid, cesaro=cesaro)
            pruned = max(pruned, max(getattr(l, "pruned_mass", 0.0) for l in laws.values()))
            curve = np.array([family_sup_gap(laws[t], ref, family, metric) for t in t_grid])
            rep.add_curve(f"x={x!r}", t_grid, curve)
            worst = np.maximum(worst, curve)
    else:
        fns = [f for _, f in family.representatives]
        targets = np.array([model.integrate_invariant(f) for f in fns])
        for k, x in enumerate(probes):
            m, e = expectation_curves(kernel, x, fns, t_grid, cesaro, grid.samples, grid.seed + k)
            gaps = np.abs(m - targets[:, None])
            j = np.argmax(gaps, axis=0)
            curve = gaps[j, np.arange(len(t_grid))]
            se = e[j, np.arange(len(t_grid))]
            rep.add_curve(f"x={x!r}", t_grid, curve, se)
            upd = curve > worst
            worst = np.where(upd, curve, worst)
            worst_se = np.where(upd, se, worst_se)
    rep.add_curve("sup over probes", t_grid, worst, worst_se)
    rep.details["pruned_mass"] = pruned
    rep.statistic = float(worst[-1])
    tail = worst[grid.tail_start:]
    plateau = len(tail) >= 2 and tail[-1] >= tail.min() * (1 - 1e-9) and tail[-1] >= tail[0] * (1 - 1e-9)
    rep.verdict = small_verdict(float(worst[-1]), float(worst_se[-1]), tol, plateau)
    return rep


def _right_verdict(evc: DiagnosticReport, lbc: DiagnosticReport) -> str:
    return combine([evc.verdict, lbc.verdict])


def stability_report(model, family: TestFunctionFamily, *, mean: bool = False, uniform: bool = False,
                     x=None, probes=None, grid: LimitGridSpec | None = None,
                     evc_grid: LimitGridSpec | None = None, z=None, r_list=None,
                     K_grid=K_LADDER, tol: float | None = None, ui_tol: float = 1e-3,
                     hypothesis_probes=None) -> DiagnosticReport:
    """Run both sides of the relevant equivalence and check they agree.

    Parameters
    ----------
    model : ModelDescriptor
    family : TestFunctionFamily
    mean : bool
        ``False`` pairs asymptotic stability with EvC + (C1); ``True`` pairs
        mean ergodicity with Cesaro EvC + (C2).
    uniform : bool
        Use the supremum over the whole family (exact laws required).

    Returns
    -------
    DiagnosticReport
        ``verdict`` is ``consistent``, ``out-of-scope`` (hypothesis fails and
        no forward violation) or ``inconclusive``.

    Raises
    ------
    InconsistencyError
        When decided verdicts on the two sides disagree.
    """
    if model.neighbours is None:
        raise ValueError(f"model {model.id!r} has no neighbour generator; eventual continuity cannot be probed")
    d = dict(model.defaults)
    kernel, metric, _ = resolve(model)
    grid = grid or LimitGridSpec(**d.get("cesaro_grid" if mean else "grid", d.get("grid", {})))
    evc_grid = evc_grid or LimitGridSpec(**d.get("evc_grid", d.get("grid", {})))
    x = d.get("x") if x is None else x
    probes = list(d.get("report_probes", model.probes) if probes is None else probes)
    z = d.get("z") if z is None else z
    r_list = d.get("r_list") if r_list is None else r_list
    tol = d.get("tol", 1e-6) if tol is None else tol

    left = _distance_side(model, kernel, family, probes, grid, mean, uniform, tol, metric)

    # hypothesis: UI of each representative (or of the envelope) from every probe
    hyp_children = []
    targets = [("envelope", family.envelope)] if uniform else list(family.representatives)
    for xp in (hypothesis_probes or probes):
        for name, f in targets:
            hyp_children.append(check_uniform_integrability(kernel, xp, f, K_grid, LimitGridSpec(**d.get("ui_grid", d.get("grid", {}))),
                                                            tol=ui_tol, name=name))
    hyp = DiagnosticReport("H2" if uniform else "H1", combine([c.verdict for c in hyp_children]),
                           children=hyp_children)
    hyp.statistic = max(c.statistic for c in hyp_children)

    variant = ("uniform" if uniform else "plain") if not mean else ("uniform-cesaro" if uniform else "cesaro")
    evc = check_evc(kernel, family, x, evc_grid, variant=variant, metric=metric,
                    neighbours=model.neighbours, tol=d.get("evc_tol", tol))
    lbc = (check_lbc_C2 if mean else check_lbc_C1)(kernel, z, r_list, probes, grid, metric=metric)
    right = _right_verdict(evc, lbc)

    rep = DiagnosticReport(("ME" if mean else "AS") + (" uniform" if uniform else "") + " <=> "
                           + ("Cesaro EvC + C2" if mean else "EvC + C1"), INCONCLUSIVE,
                           children=[left, hyp, evc, lbc],
                           provenance={"model": model.id, "family": family.name})
    rep.details.update({"left": left.verdict, "hypothesis": hyp.verdict, "right": right,
                        "evc": evc.verdict, "lbc": lbc.verdict})
    decided = {left.verdict, right} <= {PASS, FAIL}
    if hyp.verdict == PASS:
        if decided and left.verdict != right:
            raise InconsistencyError(f"{rep.condition} on {model.id} x {family.name}: "
                                     f"left side {left.verdict}, right side {right}")
        rep.verdict = "consistent" if decided else INCONCLUSIVE
    elif hyp.verdict == FAIL:
        # without the integrability hypothesis only stability => characterization is claimed
        if left.verdict == PASS and right == FAIL:
            raise InconsistencyError(f"{rep.condition} on {model.id} x {family.name}: "
                                     "stability holds but its characterization fails")
        rep.verdict = "out-of-scope"
    else:
        rep.verdict = INCONCLUSIVE
    return rep
