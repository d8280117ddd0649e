import math
from fractions import Fraction

import numpy as np
import pytest

from condwalk import oracle, predict
from condwalk.errors import LatticeMismatch


def test_persistence_stirling(ssrw, ssrw_inputs):
    for n in (256, 1024):
        r = oracle.persistence(ssrw, 0, n) / predict.persistence_pred(ssrw_inputs, 0, n)
        assert abs(r - 1) <= 1 / (4 * n) + 1e-4


def test_cdf_pred_limits(ssrw_inputs):
    assert predict.cdf_pred(ssrw_inputs, 0, 0.0, 100) == 0.0
    assert predict.cdf_pred(ssrw_inputs, 0, 50.0, 100) == pytest.approx(predict.persistence_pred(ssrw_inputs, 0, 100))


def test_local_admissibility(skipfree_inputs):
    with pytest.raises(LatticeMismatch):
        predict.local_pred(skipfree_inputs, 0, 0, 256)
    assert predict.local_pred(skipfree_inputs, 0, 0, 255) > 0


def test_local_convergence(skipfree, skipfree_inputs):
    devs = [abs(oracle.joint_law(skipfree, 3, n).prob_at(0) / predict.local_pred(skipfree_inputs, 3, 0, n) - 1)
            for n in (255, 1023)]
    assert devs[1] < devs[0] < 0.05


def test_caravenna_vs_local(ssrw, ssrw_inputs):
    # for y of order sqrt(n), Vcheck_n(y) / (sigma sqrt n) L-scaling makes the two agree
    n = 4096
    y = 64
    c = predict.caravenna_pred(ssrw_inputs, 0, y, n)
    o = oracle.joint_law(ssrw, 0, n, "n").prob_at(y)
    assert o / c == pytest.approx(1.0, abs=0.05)


def test_exit_parity_zero(ssrw, ssrw_inputs):
    assert predict.exit_pred_lattice(ssrw_inputs, ssrw, 1, 256) == 0.0
    assert oracle.exit_pmf(ssrw, 1, 257)[257] == 0.0


def test_kappa_identity(skipfree, skipfree_inputs):
    rng = np.random.default_rng(0)
    lat = skipfree.lattice
    for _ in range(200):
        x = Fraction(int(rng.integers(-20, 21)), 1)
        n = int(rng.integers(1, 3000))
        u = lat.residue(x + n * lat.shift_exact)
        assert predict.varkappa_n(skipfree_inputs, skipfree, x, n) == predict.varkappa_u(skipfree_inputs, skipfree, u)


def test_envelopes_decrease(ssrw_inputs):
    env = [predict.error_envelope(ssrw_inputs, 0, 0, n).value for n in (8, 64, 512, 4096)]
    assert all(b < a for a, b in zip(env, env[1:]))
    rn = [predict.rate_Rn(ssrw_inputs, 0, n) / math.sqrt(n) for n in (64, 512, 4096)]
    assert all(b < a for a, b in zip(rn, rn[1:]))
    assert predict.caravenna_envelope(ssrw_inputs, 0, 4096) < predict.caravenna_envelope(ssrw_inputs, 0, 256)


def test_regimes():
    tags = predict.classify_regime(0.0, 0.0, 4096, 0.01, 1.0)
    assert {"Q_member", "a1", "a2", "a4"} <= tags
    far = predict.classify_regime(200.0, 210.0, 4096, 0.01, 1.0)
    assert "a3" in far and "a7" in far
    nl = predict.classify_regime(0.0, 0.0, 4096, 0.01, 1.0, hbar=0.0, v=1.0)
    assert {"b1", "b2"} <= nl
