"""Acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line, printed immediately and again in the
terminal summary.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import CRITERIA
from oracles import network_simplex_cost
from ergodiag import tables
from ergodiag.diagnostics import stability_report
from ergodiag.diagnostics.ui import cesaro_mixtures, family_tail, law_tail, limsup_exchange_gap
from ergodiag.distances import wasserstein_exact, weighted_tv, tv_distance
from ergodiag.markov import SparseDistribution, cesaro_Qtf, integrate, propagate_many
from ergodiag.models import dyadic_chain, get_model, ifs

ZERO = SparseDistribution.point(0)


def record(n, ok, detail):
    CRITERIA[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def rows_ok(rows):
    bad = [r for r in rows if not r.passed]
    return not bad, bad


def test_criterion_01_dyadic_exact_laws():
    t = time.perf_counter()
    rows = tables.dyadic_laws()
    dt = time.perf_counter() - t
    ok, bad = rows_ok(rows)
    worst = max(r.computed for r in rows)
    record(1, ok and len(rows) == 300 and dt < 1.0,
           f"300 laws, max atom error {worst:.3g} (tol 1e-12), {dt:.2f}s (limit 1s)")


def test_criterion_02_martingale_moment():
    K = dyadic_chain().countable
    worst = 0.0
    for i in range(1, 11):
        laws = propagate_many(K, SparseDistribution.point(2 ** i), range(0, 31))
        for n, law in laws.items():
            worst = max(worst, abs(integrate(law, float) - 2.0 ** i))
    record(2, worst <= 1e-12, f"max |<V, P_n delta_2^i> - 2^i| = {worst:.3g} over i<=10, n<=30 (tol 1e-12)")


def test_criterion_03_alpha_moment_decay():
    K = dyadic_chain().countable
    worst, const = 0.0, 0.0
    for i in range(1, 11):
        laws = propagate_many(K, SparseDistribution.point(2 ** i), range(0, 31))
        for n, law in laws.items():
            for alpha in (0.25, 0.5, 0.75):
                got = integrate(law, lambda s: float(s) ** alpha)
                worst = max(worst, abs(got - 2.0 ** (alpha * i) * 2.0 ** (-(1 - alpha) * n)))
            const = max(const, abs(integrate(law, float) - 2.0 ** i))
    record(3, worst <= 1e-12 and const <= 1e-12,
           f"max error {worst:.3g} for alpha in (1/4, 1/2, 3/4); alpha=1 constant to {const:.3g} (tol 1e-12)")


def test_criterion_04_tv_converges_w1_does_not():
    K = dyadic_chain().countable
    tv_err, w_err = 0.0, 0.0
    for i in range(1, 11):
        laws = propagate_many(K, SparseDistribution.point(2 ** i), range(1, 31))
        for n, law in laws.items():
            tv_err = max(tv_err, abs(tv_distance(law, ZERO) - 2.0 ** (1 - n)))
            w_err = max(w_err, abs(wasserstein_exact(law, ZERO, 1)[0] - 2.0 ** i))
    record(4, tv_err <= 1e-12 and w_err <= 1e-9,
           f"TV error {tv_err:.3g} (tol 1e-12), W1 error {w_err:.3g} (tol 1e-9)")


def _random_instance(rng, D=720):
    """Integer masses over ``D`` on integer points, with integer weights ``V``."""
    def measure():
        k = int(rng.integers(1, 7))
        pts = rng.choice(np.arange(-20, 21), size=k, replace=False)
        cuts = np.sort(rng.choice(np.arange(1, D), size=k - 1, replace=False)) if k > 1 else np.array([], int)
        masses = np.diff(np.concatenate([[0], cuts, [D]]))
        return [int(p) for p in pts], [int(m) for m in masses]
    return measure(), measure()


def test_criterion_05_transport_oracles():
    rng = np.random.default_rng(5)
    D = 720
    V = lambda x: abs(int(x))
    worst_w, worst_v = 0.0, 0.0
    t = time.perf_counter()
    for k in range(500):
        (xa, ma), (xb, mb) = _random_instance(rng, D)
        mu = SparseDistribution({x: m / D for x, m in zip(xa, ma)})
        nu = SparseDistribution({x: m / D for x, m in zip(xb, mb)})
        p = 1 if k % 2 == 0 else 2
        cost = [[abs(a - b) ** p for b in xb] for a in xa]
        ref_w = (network_simplex_cost(ma, mb, cost) / D) ** (1 / p)
        worst_w = max(worst_w, abs(wasserstein_exact(mu, nu, p)[0] - ref_w))
        # d_V as the optimal coupling cost of chi_{x != y} (2 + V(x) + V(y))
        cv = [[0 if a == b else 2 + V(a) + V(b) for b in xb] for a in xa]
        ref_v = network_simplex_cost(ma, mb, cv) / D
        worst_v = max(worst_v, abs(weighted_tv(mu, nu, V) - ref_v))
    dt = time.perf_counter() - t
    record(5, worst_w <= 1e-9 and worst_v <= 1e-9 and dt < 30,
           f"500 instances: W error {worst_w:.3g}, d_V error {worst_v:.3g} (tol 1e-9), {dt:.1f}s (limit 30s)")


def test_criterion_06_coupling_tail():
    t = time.perf_counter()
    rows = tables.coupling_tail(seed=1, samples=100_000)
    dt = time.perf_counter() - t
    ok, bad = rows_ok(rows)
    record(6, ok and len(rows) == 20 and dt < 30,
           f"10 survival values within 3 sigma and 10 blocks under (1 - gamma/2)^n, {dt:.1f}s (limit 30s)"
           + (f"; failing: {[r.quantity for r in bad]}" if bad else ""))


def test_criterion_07_ui_verdicts():
    t = time.perf_counter()
    rows = tables.ui_verdicts()
    dt = time.perf_counter() - t
    ok, bad = rows_ok(rows)
    record(7, ok and dt < 5,
           f"f=V fails with plateau {rows[0].computed:g}; f=V^1/2 passes with T(2^20) = {rows[1].computed:.3g}; "
           f"{dt:.2f}s (limit 5s)")


def test_criterion_08_lyapunov():
    t = time.perf_counter()
    rows = tables.lyapunov()
    dt = time.perf_counter() - t
    ok, _ = rows_ok(rows)
    record(8, ok and dt < 1,
           f"bound {rows[0].computed:.9g}, terminal {rows[1].computed:.9g}, crossings {rows[2].computed:g}, "
           f"{dt:.2f}s (limit 1s)")


def test_criterion_09_ifs_mean_ergodicity():
    t = time.perf_counter()
    rows = tables.ifs_ergodicity(seed=3, samples=20_000, T=1000.0)
    dt = time.perf_counter() - t
    ok, bad = rows_ok(rows)
    detail = "; ".join(f"{r.quantity}: {r.computed:.3g} vs {r.expected:.3g} (3 sigma {r.tolerance:.3g})" for r in rows)
    record(9, ok and dt < 120, detail + f"; {dt:.1f}s (limit 120s)")


def test_criterion_10_lattice_tightness():
    rows = tables.lattice_tightness()
    ok, _ = rows_ok(rows)
    record(10, ok, "P_n(start, B(start, R)) = 0 exactly for R < n <= 50, R in (1, 2, 5, 10, 20, 40)")


def test_criterion_11_heavy_tail():
    from ergodiag.models import dyadic as dy
    rows = tables.heavy_tail_divergence()
    ok, _ = rows_ok(rows)
    exact = sum(Fraction(2 ** m, m * m) for m in range(1, 41))
    first = next(M for M in range(1, 41) if dy.partial_sum(0, M) > 1e6)
    record(11, ok and 6 / math.pi ** 2 * exact > 10 ** 6 and first <= 40,
           f"S(0, 40) = {dy.partial_sum(0, 40):.6g}; first M with S(0, M) > 1e6 is {first}")


def test_criterion_12_ui_lemmas():
    rng = np.random.default_rng(12)
    violations = {"comparison": 0, "cesaro": 0, "exchange": 0}
    for _ in range(200):
        n_t, n_w = int(rng.integers(2, 12)), int(rng.integers(1, 9))
        eta = rng.standard_cauchy((n_t, n_w)) * rng.choice([1.0, 10.0, 1e3], size=(n_t, 1))
        w = rng.dirichlet(np.ones(n_w))
        xi = eta * rng.uniform(-1, 1, size=eta.shape)
        laws = []
        for row in eta:
            acc = {}
            for v, p in zip(row, w):
                acc[float(v)] = acc.get(float(v), 0.0) + float(p)
            laws.append(SparseDistribution.from_unnormalized(acc))
        mix = cesaro_mixtures(laws)
        a = np.abs(eta).ravel()
        for K in np.unique(np.concatenate([[0.0], a, 2 * a])):
            violations["comparison"] += family_tail(xi, w, K) > family_tail(eta, w, K) * (1 + 1e-12)
            violations["cesaro"] += law_tail(mix, K) > law_tail(laws, K) * (1 + 1e-12)
        violations["exchange"] += limsup_exchange_gap(eta, w) > 1e-9 * max(1.0, float(a.max()))
    record(12, sum(violations.values()) == 0, f"200 random families, violations {violations}")


@pytest.mark.parametrize("model_id,family,mean", [("dyadic", "F_ALPHA(0.5)", False),
                                                  ("dyadic", "F_SUPNORM", False),
                                                  ("ifs", "F_WEIGHTED", True)])
def test_criterion_13_stability_consistency(model_id, family, mean):
    m = get_model(model_id)
    rep = stability_report(m, m.family(family), mean=mean)
    prev_ok, prev = CRITERIA.get(13, (True, ""))
    line = f"{model_id} x {family}: {rep.verdict} (left {rep.details['left']}, right {rep.details['right']})"
    detail = f"{prev}; {line}" if prev else line
    record(13, prev_ok and rep.verdict == "consistent", detail)


# -- supplementary: finite-horizon behaviour of the IFS estimates ----------------

def test_ifs_monte_carlo_matches_exact_finite_horizon():
    """At T = 1000 the estimates agree with the exact Q_T values, which are O(1/T) away from the limits."""
    model = ifs.ifs_torus()
    start = (1.0, 0.0)
    for f in (lambda s: np.cos(np.asarray(s)[..., 1]), lambda s: np.minimum(np.asarray(s)[..., 0], 1.0)):
        est = cesaro_Qtf(model.sampler, start, 1000.0, f, mode="monte-carlo", n_samples=20_000, seed=3)
        exact = ifs.cesaro_expectation(start, 1000.0, f)
        assert abs(est.mean - exact) <= 3 * est.stderr


def test_ifs_cesaro_bias_decays_like_one_over_T():
    g = lambda s: np.minimum(np.asarray(s)[..., 0], 1.0)
    f = lambda s: np.cos(np.asarray(s)[..., 1])
    for T in (100.0, 1000.0, 10_000.0):
        assert T * ifs.cesaro_expectation((1.0, 0.0), T, g) == pytest.approx(3.0, rel=1e-3)
        assert abs(ifs.cesaro_expectation((0.0, 0.0), T, f)) <= 1.0 / T
