"""Estimators and verdicts for stability conditions."""

from .birkhoff import birkhoff_divergence_check, running_averages
from .conditions import (ball_mass_curve, check_evc, check_lbc_C1, check_lbc_C2, check_tightness,
                         check_uniform_integrability, expectation_curves)
from .lyapunov import DomainError, LyapunovResult, LyapunovSpec, lyapunov_bound, rk4_reference
from .report import (FAIL, INCONCLUSIVE, PASS, DiagnosticReport, InconsistencyError, LimitGridSpec)
from .stability import stability_report

__all__ = [
    "LimitGridSpec", "DiagnosticReport", "InconsistencyError", "PASS", "FAIL", "INCONCLUSIVE",
    "check_lbc_C1", "check_lbc_C2", "check_evc", "check_uniform_integrability", "check_tightness",
    "ball_mass_curve", "expectation_curves", "lyapunov_bound", "LyapunovSpec", "LyapunovResult",
    "DomainError", "rk4_reference", "birkhoff_divergence_check", "running_averages", "stability_report",
]
