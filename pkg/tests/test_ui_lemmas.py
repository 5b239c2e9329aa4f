"""Uniform-integrability lemmas on randomized exact families."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ergodiag.diagnostics.ui import (cesaro_mixtures, family_tail, law_tail, limsup_exchange_gap,
                                     tail_curve, tail_expectation)
from ergodiag.markov import SparseDistribution, propagate_many
from ergodiag.models import dyadic_chain

N_FAMILIES = 200


def _random_family(rng):
    """Heavy-ish random family ``X[t, omega]`` with outcome weights ``w``."""
    n_t, n_w = rng.integers(2, 12), rng.integers(1, 9)
    X = rng.standard_cauchy((n_t, n_w)) * rng.choice([1.0, 10.0, 1e3], size=(n_t, 1))
    w = rng.dirichlet(np.ones(n_w))
    return X, w


def _laws(X, w):
    out = []
    for row in X:
        acc = {}
        for v, p in zip(row, w):
            acc[float(v)] = acc.get(float(v), 0.0) + float(p)
        out.append(SparseDistribution.from_unnormalized(acc))
    return out


def _K_grid(X):
    a = np.abs(X).ravel()
    return np.unique(np.concatenate([[0.0], a, a * 1.5, [a.max() * 2 + 1]]))


def test_comparison_transfers_tails():
    rng = np.random.default_rng(20240601)
    violations = 0
    for _ in range(N_FAMILIES):
        eta, w = _random_family(rng)
        xi = eta * rng.uniform(-1, 1, size=eta.shape)
        for K in _K_grid(eta):
            if family_tail(xi, w, K) > family_tail(eta, w, K) * (1 + 1e-12) + 1e-300:
                violations += 1
    assert violations == 0


def test_cesaro_mixtures_keep_tails():
    rng = np.random.default_rng(7)
    violations = 0
    for _ in range(N_FAMILIES):
        X, w = _random_family(rng)
        laws = _laws(X, w)
        mix = cesaro_mixtures(laws)
        for K in _K_grid(X):
            if law_tail(mix, K) > law_tail(laws, K) * (1 + 1e-12):
                violations += 1
    assert violations == 0


def test_limsup_exchange():
    rng = np.random.default_rng(99)
    gaps = [limsup_exchange_gap(*_random_family(rng)) for _ in range(N_FAMILIES)]
    assert sum(g > 1e-9 * (1 + abs(g)) for g in gaps) == 0


def test_family_and_law_tails_agree():
    rng = np.random.default_rng(3)
    for _ in range(50):
        X, w = _random_family(rng)
        laws = _laws(X, w)
        for K in _K_grid(X)[::3]:
            assert law_tail(laws, K) == pytest.approx(family_tail(X, w, K), rel=1e-12, abs=1e-300)


def test_tail_expectation_examples():
    assert tail_expectation([1.0, -4.0, 10.0], [0.5, 0.25, 0.25], 4.0) == 3.5
    assert tail_expectation([1.0, 2.0], [0.5, 0.5], 3.0) == 0.0
    # equality at the threshold counts
    assert tail_expectation([2.0], [1.0], 2.0) == 2.0


def test_dyadic_cesaro_tails():
    """Cesaro mixtures of exact dyadic laws keep the tail bound of the original laws."""
    K = dyadic_chain().countable
    laws = propagate_many(K, SparseDistribution.point(16), range(0, 40))
    for alpha, decays in ((0.5, True), (1.0, False)):
        vals = [SparseDistribution({float(s) ** alpha: w for s, w in law.items()}) for law in laws.values()]
        grid = [2.0 ** k for k in range(0, 20)]
        T = tail_curve(vals, grid)
        Tc = tail_curve(cesaro_mixtures(vals), grid)
        assert np.all(Tc <= T * (1 + 1e-12))
        assert np.all(np.diff(T) <= 0)
        if decays:
            assert T[-1] < 1e-3
        else:
            assert T[-1] == 16.0


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 6)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)),
       st.data())
@settings(max_examples=200, deadline=None)
def test_limsup_exchange_property(X, data):
    raw = data.draw(arrays(np.float64, X.shape[1], elements=st.floats(0.01, 1.0)))
    w = raw / raw.sum()
    frac = data.draw(st.floats(0.05, 1.0))
    g = limsup_exchange_gap(X, w, frac)
    assert g <= 1e-9 * max(1.0, float(np.abs(X).max()))


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 6)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)),
       st.floats(0.0, 2e6))
@settings(max_examples=200, deadline=None)
def test_tails_monotone_in_K_and_dominated(X, K):
    w = np.full(X.shape[1], 1.0 / X.shape[1])
    assert family_tail(X, w, K) >= family_tail(X, w, K * 2 + 1) - 1e-9
    assert family_tail(X, w, K) <= max(math.fsum(np.abs(row) * w) for row in X) * (1 + 1e-12)
