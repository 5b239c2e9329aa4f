import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergodiag.families import K_LADDER, TestFunctionFamily, is_bounded, family_bound
from ergodiag.markov import SparseDistribution, integrate, propagate, propagate_many, simulate_paths
from ergodiag.models import REGISTRY, family_presets, get_model, heavy_tail_nu, lattice_model
from ergodiag.models import dyadic as dy
from ergodiag.models import ifs
from ergodiag.states import LatticeTriple, TorusPoint


# -- registry and families -------------------------------------------------

def test_registry():
    assert set(REGISTRY) == {"dyadic", "ifs", "lattice", "identity"}
    with pytest.raises(KeyError, match="unknown model"):
        get_model("nope")


@pytest.mark.parametrize("mid", sorted(REGISTRY))
def test_one_step_laws_agree(mid):
    """Countable and sampling kernels describe the same one-step law."""
    m = get_model(mid)
    if m.countable is None:
        pytest.skip("no countable kernel")
    x = m.defaults.get("x", m.probes[1] if len(m.probes) > 1 else m.base_point)
    law = propagate(m.countable, SparseDistribution.point(x), 1)
    n = 20000
    ends = np.array([np.atleast_1d(p.at(1)) for p in simulate_paths(m.sampler, x, 1, n, 0)])
    for s, w in law.items():
        hit = np.all(ends == np.atleast_1d(m.sampler.encode(s)), axis=1).mean()
        assert abs(hit - w) <= 4 * math.sqrt(w * (1 - w) / n) + 1e-12


def test_family_presets_kinds():
    kinds = {f.kind for f in family_presets("dyadic")}
    assert kinds == {"F_LIP_BOUNDED", "F_SUPNORM", "F_GROWTH", "F_ALPHA", "F_WEIGHTED"}
    with pytest.raises(ValueError):
        TestFunctionFamily("F_OTHER", lambda s: 1.0)


def test_alpha_envelope_equality():
    fam = get_model("dyadic").family("F_ALPHA(0.5)")
    f = fam.function("V^alpha")
    for i in range(20):
        assert float(f(2 ** i)) == float(fam.envelope(2 ** i))


def test_supnorm_bounded_on_random_states():
    rng = np.random.default_rng(0)
    states = rng.normal(scale=50, size=10_000)
    fam = get_model("dyadic").family("F_SUPNORM")
    assert fam.envelope_violations(states) == []
    assert is_bounded(fam) and family_bound(fam) == 1.0


def test_growth_envelope_on_dyadic_states():
    fam = get_model("dyadic").family("F_GROWTH")
    for i in range(40):
        for fid in fam.ids:
            assert abs(float(fam.evaluate(fid, 2 ** i))) <= 1 + 2 ** i + 1e-9


@pytest.mark.parametrize("mid", ["dyadic", "ifs", "lattice", "identity"])
def test_every_family_respects_envelope(mid):
    m = get_model(mid)
    states = list(m.probes)
    for fam in m.families():
        assert fam.envelope_violations(states) == [], fam.name


def test_truncation_ladder():
    fam = get_model("dyadic").family("F_WEIGHTED")
    assert {f"+env^{K:g}" for K in K_LADDER} <= set(fam.ids)
    assert float(fam.evaluate("+env^4", 1024)) == 4.0


# -- dyadic chain ------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_dyadic_moments_match_propagation(alpha):
    K = dy.dyadic_chain().countable
    f = (lambda s: 1.0) if alpha == 0 else (lambda s: float(s) ** alpha)
    for i in (0, 1, 7, 20):
        laws = propagate_many(K, SparseDistribution.point(2 ** i), range(41))
        for n in range(41):
            assert integrate(laws[n], f) == pytest.approx(dy.moment(alpha, i, n), rel=0, abs=1e-12 * max(1, 2 ** (alpha * i)))


def test_dyadic_moment_examples():
    assert dy.moment(0.5, 2, 4) == 0.5
    for n in range(30):
        assert dy.moment(1.0, 5, n) == 32.0
        assert dy.moment(0.0, 5, n) == 1.0


def test_dyadic_state_parsing():
    m = get_model("dyadic")
    assert m.parse_state("8") == 8
    with pytest.raises(ValueError):
        m.parse_state("6")
    with pytest.raises(ValueError):
        m.countable.transition(3)


def test_heavy_tail():
    ht = heavy_tail_nu(40)
    nu = ht.nu
    assert min(nu) == 4 and max(nu) == 2 ** 80
    assert ht.captured_mass < 1
    assert heavy_tail_nu(2000).captured_mass == pytest.approx(1.0, abs=1e-3)
    # direct summation oracle on integers
    direct = Fraction(0)
    for m in range(1, 41):
        direct += Fraction(2 ** m, m * m)
    assert dy.partial_sum(0, 40) == pytest.approx(6 / math.pi ** 2 * float(direct), rel=1e-15)
    assert dy.partial_sum(0, 40) > 1e6
    # <V^1/2, nu truncated at M> (unnormalized) equals S(0, M)
    for M in (5, 20, 40):
        raw = math.fsum(6 / math.pi ** 2 / m ** 2 * 2.0 ** m for m in range(1, M + 1))
        assert raw == pytest.approx(dy.partial_sum(0, M), rel=1e-12)
        assert dy.sqrt_moment(0, M) == pytest.approx(dy.partial_sum(0, M), rel=1e-12)


def test_sqrt_moment_after_n_steps():
    K = dy.dyadic_chain().countable
    M = 12
    nu = heavy_tail_nu(M).nu
    scale = heavy_tail_nu(M).captured_mass
    for n in (0, 1, 3, 8):
        got = integrate(propagate(K, nu, n), math.sqrt) * scale
        assert got == pytest.approx(dy.sqrt_moment(n, M), rel=1e-12)


def test_divergence_certificate_monotone():
    cert = dy.divergence_certificate(0)
    Ms = [cert[t][0] for t in sorted(cert)]
    assert Ms == sorted(Ms) and Ms[-1] <= 40
    for M in range(1, 60):
        assert dy.partial_sum(0, M + 1) > dy.partial_sum(0, M)
    for M in range(4, 60):
        assert dy.partial_sum(0, M) >= 6 / math.pi ** 2 * (M - 3)


# -- IFS -------------------------------------------------------------------

def test_ifs_probability_table():
    assert np.allclose(ifs.probabilities(0.0), (0, 1, 0))
    assert np.allclose(ifs.probabilities(1.0), (1 / 3, 1 / 3, 1 / 3))
    assert np.allclose(ifs.probabilities(2.0), (0.25, 0.5, 0.25))


@given(st.floats(0.0, 1e6))
def test_ifs_probabilities_valid(x):
    p = ifs.probabilities(x)
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-12


def test_ifs_x_law_against_simulation():
    paths = simulate_paths(ifs.ifs_torus().sampler, (2.0, 0.0), 3.0, 20000, seed=1)
    end = np.array([p.at(1.5)[0] for p in paths])
    law = ifs.x_law(2.0, 1.5)
    for a, w in law.items():
        hit = np.isclose(end, a).mean()
        assert abs(hit - w) <= 4 * math.sqrt(w * (1 - w) / len(end)) + 1e-12


def test_ifs_x_law_rows():
    law = ifs.x_law(0.0, 10.0)
    assert law == {0.0: 1.0}
    law = ifs.x_law(1.0, 0.0)
    assert law == {1.0: 1.0}
    law = ifs.x_law(1.0, 50.0)
    assert law[0.0] > 0.999


def test_ifs_invariant_integrator():
    m = ifs.ifs_torus()
    assert m.integrate_invariant(lambda s: np.cos(s[..., 1])) == pytest.approx(0.0, abs=1e-10)
    assert m.integrate_invariant(lambda s: np.sin(s[..., 1]) ** 2) == pytest.approx(0.5, abs=1e-10)
    assert m.integrate_invariant(lambda s: np.minimum(s[..., 0], 1)) == 0.0


def test_ifs_cesaro_law_masses():
    q = ifs.cesaro_law((1.0, 0.0), 10.0, bins=64)
    assert sum(q.values()) == pytest.approx(1.0, abs=1e-12)
    # the x-marginal agrees with the time-integrated closed-form law
    support, G = ifs.x_generator(1.0)
    ref = np.array([1.0 if s == 1.0 else 0.0 for s in support]) @ ifs._phi(G, 10.0) / 10.0
    for a, w in zip(support, ref):
        got = math.fsum(v for s, v in q.items() if s.x == a)
        assert got == pytest.approx(w, abs=1e-12)


def test_ifs_cesaro_expectation_quadrature():
    f = lambda s: np.cos(np.asarray(s)[..., 1])
    # from x = 0 the law is deterministic: Q_t cos = sin(t)/t
    assert ifs.cesaro_expectation((0.0, 0.0), 7.0, f) == pytest.approx(math.sin(7.0) / 7.0, abs=1e-10)
    g = lambda s: np.minimum(np.asarray(s)[..., 0], 1.0)
    assert ifs.cesaro_expectation((1.0, 0.0), 1000.0, g) == pytest.approx(3.0 / 1000.0, rel=1e-6)


# -- lattice ---------------------------------------------------------------

def test_lattice_deterministic_path():
    m = lattice_model(p1=lambda k: 1.0, p2=lambda i, k: 0.0)
    law = propagate(m.countable, SparseDistribution.point(LatticeTriple(1, 0, 1)), 9)
    assert law == SparseDistribution.point(LatticeTriple(1, 9, 10))


def test_lattice_contract_error():
    m = lattice_model(p1=lambda k: 0.8, p2=lambda i, k: 0.5)
    with pytest.raises(ValueError, match=r"\(i, k\) = \(1, 1\)"):
        m.countable.transition(LatticeTriple(1, 0, 1))


def test_lattice_reset_fraction_binomial():
    m = lattice_model(p1=lambda k: 0.5, p2=lambda i, k: 0.2)
    n, N = 50, 2000
    paths = simulate_paths(m.sampler, LatticeTriple(1, 0, 1), n, N, seed=3)
    resets = np.array([np.sum((p.states[1:, 0] == 1) & (p.states[1:, 2] == 1)) for p in paths])
    # reset probability 0.3 per step, independent of the state
    assert abs(resets.mean() - 0.3 * n) <= 4 * math.sqrt(n * 0.3 * 0.7 / N)


def test_lattice_no_invariant():
    m = lattice_model()
    assert not m.has_invariant
    with pytest.raises(ValueError):
        m.integrate_invariant(lambda s: 1.0)
    assert m.parse_state("2,3,inf") == LatticeTriple(2, 3, math.inf)
