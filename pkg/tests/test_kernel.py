import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condwalk import kernel
from condwalk.errors import DomainError


def test_gaussian_values():
    assert kernel.gaussian_pdf(1, 0) == pytest.approx(0.3989422804014327, abs=1e-16)
    assert kernel.gaussian_cdf(0) == 0.5
    assert abs(kernel.gaussian_cdf(1) - 0.8413447460685429) <= 1e-15
    with pytest.raises(DomainError):
        kernel.gaussian_pdf(0, 1)


def test_p00():
    assert abs(kernel.p_kernel(0.0, 0.0) - math.sqrt(2 * math.pi) / 2) <= 1e-12


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 3.0, 8.0])
def test_ell_normalization(x):
    assert abs(kernel.ell_normalization(x) - 1.0) <= 1e-10


def test_int_ell_limits():
    assert kernel.int_ell(0.7, 0.0) == 0.0
    assert kernel.int_ell(0.7, 40.0) == pytest.approx(1.0, abs=1e-14)


def test_psi_stable_near_zero():
    # psi = phi(x-y) - phi(x+y) loses every digit by subtraction for tiny xy
    x, y = 1e-9, 2e-9
    assert kernel.psi(x, y) == pytest.approx(2 * x * y * kernel.gaussian_pdf(1, x - y), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-8, 8), st.floats(-8, 8))
def test_symmetries(x, y):
    assert abs(kernel.p_kernel(x, y) - kernel.p_kernel(y, x)) <= 1e-13
    assert abs(kernel.psi(-x, y) + kernel.psi(x, y)) <= 1e-13
    assert abs(kernel.psi(x, y) - kernel.psi(y, x)) <= 1e-13


@pytest.mark.parametrize("h", [-2, -1, 0, 1, 2])
def test_far_diagonal(h):
    assert abs(kernel.p_kernel(8.0, 8.0 - h) - kernel.gaussian_pdf(1.0, h)) <= 1e-6


def test_integral_identities():
    rng = np.random.default_rng(0)
    for _ in range(5):
        s, t = rng.uniform(0.1, 2.0, 2)
        x, y = rng.uniform(0.0, 3.0, 2)
        assert kernel.semigroup_residual(s, t, x, y) <= 1e-8
        assert kernel.gaussian_product_residual(s, t, x, y) <= 1e-8
        assert kernel.convolution_residual(0.3, x, y) <= 1e-8
        assert kernel.convolution_residual(0.3, x, y, normalized=True) <= 1e-8


def test_q_alpha_and_level_sets():
    alpha = 0.1
    assert kernel.gaussian_pdf(1, kernel.q_alpha(alpha)) == pytest.approx(alpha, rel=1e-14)
    assert kernel.superlevel_member(alpha, 0.0, 0.0)
    assert not kernel.superlevel_member(alpha, 0.0, 10.0)
    with pytest.raises(DomainError):
        kernel.q_alpha(1.0)


def test_bigL_limits():
    assert kernel.bigL(0.0) == pytest.approx(2 / math.sqrt(2 * math.pi), rel=1e-15)
    assert kernel.bigL(1e-4) == pytest.approx(kernel.bigL(0.0), rel=1e-8)
    assert kernel.bigL(50.0) == pytest.approx(1 / 50, rel=1e-15)


def test_kernel_grid():
    g = kernel.kernel_grid([0.0, 1.0], [0.5, 1.0, 2.0], "p")
    assert g.values.shape == (2, 3)
    assert np.all(g.values > 0)
