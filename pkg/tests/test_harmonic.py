import numpy as np
import pytest

from condwalk.errors import InsufficientTable, NonMonotone, OffLattice, TableCoverage
from condwalk.harmonic import (build_table, extrapolated_table, harmonicity_residual, is_skipfree, skipfree_table,
                               v_extrapolated, v_mc, v_partial, v_skipfree, vn)
from condwalk.increments import reverse


def test_skipfree_closed_form(skipfree):
    assert is_skipfree(skipfree) and not is_skipfree(reverse(skipfree))
    g = float(skipfree.lattice.grid)
    assert [v_skipfree(skipfree, x) for x in range(5)] == [x + g for x in range(5)]
    tab = skipfree_table(skipfree, 4.0)
    assert tab.value(100.0) == 101.0
    assert harmonicity_residual(tab, closed_only=True) <= 1e-12


def test_mesh_constant(ssrw):
    tab = build_table(ssrw, 4.0)
    assert tab.value(1.5) == tab.value(1.0)


@pytest.mark.parametrize("x", [0, 3, 7])
def test_extrapolated_matches_closed_form(skipfree, x):
    v, err = v_extrapolated(skipfree, x)
    assert abs(v - (x + 1)) <= 1e-2
    assert abs(v - (x + 1)) <= err + 1e-12


def test_partial_bracket(ssrw):
    for n in (64, 256):
        w, bias = v_partial(ssrw, 2, n)
        assert w <= 3.0 <= w + bias + 1e-12
        # the undershoot of the simple walk is always 1, so the bracket is tight
        assert w + bias == pytest.approx(3.0, abs=1e-12)


def test_off_lattice(ssrw):
    with pytest.raises(OffLattice):
        v_partial(ssrw, 0.5, 10)


def test_reversed_skipfree_values(skipfree):
    tab = extrapolated_table(reverse(skipfree), 4.0, direction="reversed")
    assert tab.values[:4] == pytest.approx([1.5, 2.25, 3.375, 4.3125], abs=5e-3)
    assert np.all(np.diff(tab.values) > 0)


def test_table_coverage(skipfree):
    tab = build_table(skipfree, 3.0, "reversed")
    with pytest.raises(InsufficientTable):
        tab.value(50.0)


def test_negative_states(skipfree):
    tab = build_table(skipfree, 4.0, "reversed")
    # V is extended below zero by one step of the killed operator
    assert tab.value(-1.0) == pytest.approx(2 / 3 * tab.value(0.0), rel=1e-12)
    assert tab.value(-3.0) == 0.0


def test_vn(ssrw):
    tab = build_table(ssrw, 3.0)
    assert vn(tab, 0, 100) == pytest.approx(tab.value(0) * 2 / np.sqrt(2 * np.pi))


def test_monte_carlo_bracket(uniform):
    w, se, bias = v_mc(uniform, 0.0, 1024, 20_000, 3)
    assert 0.3 < w < 0.45
    assert se < 0.01 and bias > 0
    tab = build_table(uniform, 0.25, method="monte_carlo", n_cap=256, paths=10_000, seed=1)
    assert len(tab.states) == 3
    with pytest.raises(TableCoverage):
        tab.value(0.5)
