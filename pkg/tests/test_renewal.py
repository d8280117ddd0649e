import math

import numpy as np
import pytest

from condwalk.errors import SlowDecay, UnsupportedLaw
from condwalk.renewal import fit_tail, identity_report, renewal_functions, spitzer_constants


def test_fit_tail_exact_model():
    k = np.arange(1, 5001, dtype=float)
    fit = fit_tail(0.3 * k**-1.5)
    from scipy.special import zeta
    assert fit.total == pytest.approx(0.3 * zeta(1.5), rel=1e-10)
    with pytest.raises(SlowDecay):
        fit_tail(1.0 / k)


def test_trinomial_constants(trinomial):
    sc = spitzer_constants(trinomial, 20_000)
    assert sc.c_minus == pytest.approx(-math.log(2), abs=2e-3)
    assert sc.c_zero == pytest.approx(2 * math.log(2), abs=2e-3)
    assert sc.sum_residual <= 3 * sc.tail_estimate


def test_renewal_starts_at_one(ssrw):
    R = renewal_functions(ssrw, 3.0, K=2000)
    assert R["U_D"].values[0] == pytest.approx(1.0)
    assert set(R) == {"U_D", "V_D", "U_K", "U_Dr", "V_Dr", "U_Kr"}


def test_skipfree_identities(skipfree):
    rep = identity_report(skipfree, K_spitzer=20_000, K_renewal=5000, xmax=4.0, product_max=3.0)
    assert rep.passed, rep.worst()
    assert rep.by_identity("product-V_D")


def test_non_lattice_rejected(uniform):
    with pytest.raises(UnsupportedLaw):
        spitzer_constants(uniform)
