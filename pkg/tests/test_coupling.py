import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergodiag.coupling import (coupled_countable, estimate_gamma, exact_survival, hitting_times,
                               marginal, product_kernel, sample_hitting_batch, sample_hitting_time,
                               survival_curve, verify_tail_bound)
from ergodiag.markov import SparseDistribution, propagate
from ergodiag.models import dyadic_chain, identity_chain, ifs_torus, lattice_model
from ergodiag.models import dyadic as dy
from ergodiag.states import LatticeTriple

DY = dyadic_chain()
CK = product_kernel(DY)


def test_product_one_step():
    law = propagate(coupled_countable(CK), SparseDistribution.point((2, 2)), 1)
    assert law == SparseDistribution({(0, 0): 0.25, (0, 4): 0.25, (4, 0): 0.25, (4, 4): 0.25})
    assert propagate(coupled_countable(CK), SparseDistribution.point((0, 0)), 5) == SparseDistribution.point((0, 0))


@pytest.mark.parametrize("i,y,n", [(1, 0, 2), (3, 8, 2), (2, 2, 6)])
def test_marginals_preserved(i, y, n):
    law = propagate(coupled_countable(CK), SparseDistribution.point((2 ** i, y)), n)
    for comp, start in ((0, 2 ** i), (1, y)):
        ref = propagate(DY.countable, SparseDistribution.point(start), n)
        got = marginal(law, comp)
        for s in set(ref) | set(got):
            assert abs(got.weight(s) - ref.weight(s)) <= 1e-12


def test_continuous_time_rejected():
    with pytest.raises(ValueError):
        product_kernel(ifs_torus())


def test_hitting_examples():
    rec = sample_hitting_time(CK, (0, 0), 0, 1.0, 10, seed=0)
    assert rec.tau == 0 and not rec.censored
    rec = sample_hitting_time(CK, (2, 2), 0, 0.5, 0, seed=0)
    assert rec.censored and rec.path_length == 0
    payload = json.loads(rec.to_json())
    assert payload["tau"] is None and payload["start"] == [2, 2]


def test_first_step_entry_probability():
    taus = hitting_times(CK, (2, 2), 0, 0.5, 1, 40_000, seed=5)
    p = (taus <= 1).mean()
    assert abs(p - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / len(taus))


def test_exact_survival_formula():
    S = exact_survival(CK, (2, 2), 0, 0.5, 20)
    for n in range(21):
        assert S[n] == pytest.approx(dy.coupled_survival(n), abs=1e-15)


def test_batch_records_consistent():
    recs = sample_hitting_batch(CK, (4, 2), 0, 0.5, 8, 500, seed=2)
    for rec in recs:
        if not rec.censored:
            assert 1 <= rec.tau <= 8 and rec.path_length == rec.tau
        else:
            assert rec.path_length == 8


@given(st.integers(0, 2 ** 16), st.floats(0.1, 3.0), st.floats(0.0, 5.0))
@settings(max_examples=30, deadline=None)
def test_larger_ball_never_later(seed, r, extra):
    small = hitting_times(CK, (2, 4), 0, r, 30, 200, seed)
    big = hitting_times(CK, (2, 4), 0, r + extra, 30, 200, seed)
    assert np.all(big <= small)


@given(st.integers(0, 2 ** 16))
@settings(max_examples=20, deadline=None)
def test_survival_nonincreasing(seed):
    S, _ = survival_curve(hitting_times(CK, (8, 2), 0, 0.5, 15, 300, seed), 15)
    assert np.all(np.diff(S) <= 0)


def test_gamma_dyadic():
    g = estimate_gamma(DY.countable, 0, 0.5, [0, 2, 4, 2 ** 10], range(0, 49))
    # tail minimum sits at t = 24 where P_t(x, {0}) = 1 - 2^-24 for x != 0
    assert g.floor == 1 - 2.0 ** -24
    assert g.gamma == pytest.approx(((1 - 2.0 ** -24) / 2) ** 2, rel=1e-15)
    assert g.gamma == pytest.approx(0.25, abs=1e-7)
    short = estimate_gamma(DY.countable, 0, 0.5, [0, 2, 4, 2 ** 10], range(0, 5))
    assert short.gamma < g.gamma
    mc = estimate_gamma(DY.sampler, 0, 0.5, [0, 2, 4], range(0, 30), samples=4000, seed=1)
    assert abs(mc.floor - 1.0) <= 3 * mc.stderr + 1e-3


def test_gamma_identity():
    g = estimate_gamma(identity_chain().countable, 1.5, 0.1, [1.5], range(0, 10))
    assert g.gamma == 0.25


def test_gamma_lattice_exact_vs_simulation():
    m = lattice_model()
    z = LatticeTriple(1, 0, math.inf)
    probes = [LatticeTriple(1, 0, 1), LatticeTriple(3, 0, 1)]
    exact = estimate_gamma(m.countable, z, 0.125, probes, range(1, 41), metric=m.metric)
    # long-run occupation frequencies from simulated paths
    from ergodiag.markov import simulate_paths
    for x in probes:
        paths = simulate_paths(m.sampler, x, 40, 4000, seed=4)
        near = np.array([[float(m.metric(m.sampler.decode(p.at(t)), z)) < 0.125 for t in range(21, 41)]
                         for p in paths])
        freq = near.mean(axis=0)
        se = np.sqrt(freq * (1 - freq) / len(paths))
        k = int(np.argmin(freq))
        assert abs(freq[k] - exact.per_probe[x]) <= 4 * se[k] + 0.02


def test_gamma_errors():
    with pytest.raises(ValueError):
        estimate_gamma(DY.countable, 0, 0.5, [], range(5))
    with pytest.raises(ValueError):
        estimate_gamma(DY.countable, 0, 0.5, [0], [3, 2, 1])


def test_tail_bound_dyadic():
    rep = verify_tail_bound(CK, (2, 2), 0, 0.5, 0.25, 10, 20_000, seed=1)
    assert rep.verdict == "pass" and all(rep.passed)
    assert all(h >= 1 for h in rep.block_horizons if h)
    # survival after the cumulative horizon matches the exact formula
    for c, s in zip(rep.cumulative, rep.survival):
        ex = dy.coupled_survival(c)
        assert abs(s - ex) <= 4 * math.sqrt(max(ex * (1 - ex), 1e-12) / 20_000) + 1e-9


def test_tail_bound_trivial_cases():
    rep = verify_tail_bound(CK, (0, 0), 0, 0.5, 0.25, 3, 100, seed=0)
    assert rep.survival == [0.0, 0.0, 0.0] and rep.verdict == "pass"
    ident = product_kernel(identity_chain())
    rep = verify_tail_bound(ident, (1.0, 1.0), 1.0, 0.1, 1.0, 4, 100, seed=0)
    assert rep.verdict == "pass" and rep.bound[-1] == 0.5 ** 4
    with pytest.raises(ValueError):
        verify_tail_bound(CK, (2, 2), 0, 0.5, 0.0, 3, 100, seed=0)


def test_tail_bound_cap_is_inconclusive():
    ident = product_kernel(identity_chain())
    rep = verify_tail_bound(ident, (0.0, 5.0), 0.0, 0.1, 0.5, 3, 50, seed=0, horizon_cap=8)
    assert rep.verdict == "inconclusive" and "horizon" in rep.note
