from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condwalk.errors import BadProbabilities, DegenerateLaw, NonZeroMean
from condwalk.increments import (detect_lattice, load_law, make_lattice_law, parse_law_text, reverse)


def test_symmetric_two_point():
    law = make_lattice_law({-1: 0.5, 1: 0.5})
    assert law.moments.variance == 1.0
    assert law.moments.abs_moment == 1.0
    assert law.moments.delta1 == 1.0


def test_skipfree_moments():
    law = make_lattice_law({-1: Fraction(2, 3), 2: Fraction(1, 3)})
    assert abs(law.moments.mean) < 1e-15
    assert law.moments.variance == pytest.approx(2.0, abs=1e-15)


def test_bad_probabilities():
    with pytest.raises(BadProbabilities):
        make_lattice_law({-1: 0.5, 1: 0.4})
    with pytest.raises(BadProbabilities):
        make_lattice_law({-1: 1.0, 1: 0.0})


def test_nonzero_mean_and_degenerate():
    with pytest.raises(NonZeroMean):
        make_lattice_law({-1: 0.25, 1: 0.75})
    with pytest.raises(DegenerateLaw):
        make_lattice_law({0: 1.0})


@pytest.mark.parametrize("points, span, shift", [
    ([-1, 1], 2, 1),
    ([-1, 0, 1], 1, 0),
    ([-1, 2], 3, 2),
])
def test_detect_lattice(points, span, shift):
    lat = detect_lattice(points)
    assert (lat.span_exact, lat.shift_exact) == (span, shift)


def test_lattice_minimality():
    lat = detect_lattice([-1, 1])
    assert lat.contains(-1) and lat.contains(1)
    assert not all((Fraction(v) - lat.shift_exact) % (2 * lat.span_exact) == 0 for v in (-1, 1))


def test_reverse():
    law = load_law("skipfree")
    r = reverse(law)
    assert r.exact_values == (Fraction(-2), Fraction(1))
    assert r.exact_probs == (Fraction(1, 3), Fraction(2, 3))
    assert reverse(r).same_pmf(law)
    assert r.moments.variance == law.moments.variance
    assert r.moments.abs_moment == law.moments.abs_moment
    ssrw = load_law("ssrw")
    assert reverse(ssrw).same_pmf(ssrw)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 7))
def test_scaled_lattice(a, b, c):
    # two-point law {-a, b} with mean zero, scaled by c/2
    scale = Fraction(c, 2)
    pts = [-a * scale, b * scale]
    lat = detect_lattice(pts)
    base = detect_lattice([-a, b])
    assert lat.span_exact == scale * base.span_exact
    assert lat.shift_exact == (scale * base.shift_exact) % (scale * base.span_exact)


def test_uniform_law():
    law = load_law("uniform")
    assert not law.is_lattice
    assert law.moments.variance == pytest.approx(1 / 3, abs=1e-12)
    assert reverse(law).quantile(np.array([0.25]))[0] == pytest.approx(-0.5)


def test_parse_law_text():
    law = parse_law_text("# trinomial\n-1 1/4\n0 1/2\n1 1/4\n")
    assert law.same_pmf(load_law("trinomial"))
