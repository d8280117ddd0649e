import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condwalk import oracle
from condwalk.errors import LatticeMismatch
from condwalk.oracle import Constraint


def test_ssrw_two_steps(ssrw):
    t = oracle.joint_law(ssrw, 0, 2, Constraint.SURVIVE_N_MINUS_1)
    assert t.mass == {0.0: 0.25, 2.0: 0.25}
    assert oracle.persistence(ssrw, 0, 2) == 0.5


def test_exit_pmf(ssrw):
    assert oracle.exit_pmf(ssrw, 0, 5) == {1: 0.5, 2: 0.0, 3: 0.125, 4: 0.0, 5: 0.0625}


@pytest.mark.parametrize("n", [10, 100, 256])
def test_persistence_closed_form(ssrw, n):
    exact = Fraction(math.comb(n, n // 2), 2**n)
    assert abs(oracle.persistence(ssrw, 0, n) - float(exact)) <= 1e-15


def test_exact_mode_matches_float(skipfree):
    f = oracle.joint_law(skipfree, 1, 40)
    e = oracle.joint_law(skipfree, 1, 40, exact=True)
    assert np.max(np.abs(f.masses - np.array([float(m) for m in e.exact_masses]))) <= f.float_error_bound + 1e-300
    assert sum(e.exact_masses) == Fraction(sum(e.exact_masses))


def test_constraint_count(trinomial):
    a = oracle.joint_law(trinomial, 0, 10, Constraint.SURVIVE_N_MINUS_1)
    b = oracle.joint_law(trinomial, 0, 10, Constraint.SURVIVE_N)
    c = oracle.joint_law(trinomial, 0, 10, Constraint.NONE)
    assert b.persistence < a.persistence < c.persistence == pytest.approx(1.0)


def test_duality_small(skipfree):
    # span 3, shift 2: y - x must lie in 3Z + 16 = 3Z + 1
    assert oracle.duality_residual(skipfree, 0, 1, 8) <= 1e-15
    with pytest.raises(LatticeMismatch):
        oracle.duality_residual(skipfree, 1, 3, 8)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["ssrw", "trinomial", "skipfree"]), st.integers(0, 12), st.integers(0, 12), st.integers(1, 40))
def test_duality_property(name, x, y, n):
    from condwalk.increments import load_law
    law = load_law(name)
    if not law.lattice.contains(Fraction(y - x), n):
        return
    assert oracle.duality_residual(law, x, y, n) <= 1e-14


def test_survival_curve_consistent(trinomial):
    tail, pmf = oracle.survival_curve(trinomial, 2, 30)
    assert tail[0] == pytest.approx(1.0)
    assert np.all(np.diff(tail) <= 1e-15)
    assert tail[5] == pytest.approx(oracle.persistence(trinomial, 2, 5), abs=1e-15)


def test_llt_rate_halving(skipfree):
    # asymmetric law: the Edgeworth n^{-1} term is present
    r = oracle.llt_sup_error(skipfree, 2048) / oracle.llt_sup_error(skipfree, 1024)
    assert 0.4 <= r <= 0.65


def test_fuk_nagaev_holds(trinomial):
    r = oracle.fuk_nagaev_check(trinomial, 200, 20.0, 5.0)
    assert r.holds
    assert 0 < r.exact_prob < 1


def test_sign_probabilities_sum(ssrw):
    pos, neg, zero, err = oracle.sign_probabilities(ssrw, 200)
    assert np.max(np.abs(pos + neg + zero - 1)) <= 1e-12
    assert zero[1] == 0.5 and zero[0] == 0.0


def test_partial_means_monotone(ssrw):
    pm = oracle.partial_means(ssrw, 5, (16, 64, 256))
    W = [pm[n][0] for n in (16, 64, 256)]
    assert np.all(W[0] <= W[1] + 1e-15) and np.all(W[1] <= W[2] + 1e-15)
    assert np.all(W[2] <= np.arange(6) + 1.0 + 1e-12)
