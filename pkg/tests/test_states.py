import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergodiag.states import (ABS, DISCRETE, LATTICE_INDEX, LATTICE_LINF, TORUS_PRODUCT, TWO_PI,
                             LatticeTriple, TorusPoint, arc_distance, dyadic, dyadic_exponent,
                             is_dyadic, wrap_angle)


def test_dyadic_roundtrip():
    assert dyadic(None) == 0
    assert dyadic(0) == 1
    assert dyadic(60) == 2 ** 60
    for e in (None, 0, 1, 7, 100):
        assert dyadic_exponent(dyadic(e)) == e


@pytest.mark.parametrize("bad", [3, 6, -2, 2.5, True, "4"])
def test_non_dyadic_rejected(bad):
    assert not is_dyadic(bad)
    with pytest.raises(ValueError):
        dyadic_exponent(bad)


def test_dyadic_exponent_must_be_nonnegative_integer():
    with pytest.raises(ValueError):
        dyadic(-1)
    with pytest.raises(ValueError):
        dyadic(1.5)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_wrap_angle_range(y):
    w = wrap_angle(y)
    assert 0.0 <= w < TWO_PI
    assert arc_distance(w, y) < 1e-6


def test_wrap_angle_tiny_negative():
    assert 0.0 <= wrap_angle(-1e-300) < TWO_PI
    assert np.all(wrap_angle(np.array([-1e-18, 7.0])) < TWO_PI)


def test_torus_point_normalizes():
    p = TorusPoint.make(1.0, -0.5)
    assert p.y == pytest.approx(TWO_PI - 0.5)
    with pytest.raises(ValueError):
        TorusPoint.make(-1.0, 0.0)


def test_lattice_infinity_distinct():
    a = LatticeTriple.make(1, 0, math.inf)
    b = LatticeTriple.make(1, 0, 5)
    assert a != b
    assert a.height == 0.0
    assert b.height == 2.0 ** -5
    with pytest.raises(ValueError):
        LatticeTriple.make(0, 0, 1)
    with pytest.raises(ValueError):
        LatticeTriple.make(1, 0, 0)


reals = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
torus = st.builds(TorusPoint.make, st.floats(min_value=0, max_value=50), st.floats(min_value=-10, max_value=10))
lattice = st.builds(LatticeTriple.make, st.integers(1, 6), st.integers(0, 6),
                    st.one_of(st.integers(1, 8), st.just(math.inf)))


def _axioms(d, a, b, c):
    assert d(a, a) == 0
    assert d(a, b) >= 0
    assert d(a, b) == pytest.approx(d(b, a))
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


@given(reals, reals, reals)
def test_abs_metric_axioms(a, b, c):
    _axioms(ABS, a, b, c)


@given(torus, torus, torus)
def test_torus_metric_axioms(a, b, c):
    _axioms(TORUS_PRODUCT, a, b, c)


@given(lattice, lattice, lattice)
def test_lattice_metric_axioms(a, b, c):
    for d in (LATTICE_LINF, LATTICE_INDEX, DISCRETE):
        _axioms(d, a, b, c)


def test_abs_exact_on_large_integers():
    assert ABS(2 ** 60, 2 ** 60 + 1) == 1.0


def test_arc_distance_is_geodesic():
    assert arc_distance(0.1, TWO_PI - 0.1) == pytest.approx(0.2)
    assert arc_distance(0.0, math.pi) == pytest.approx(math.pi)
