import math

import numpy as np
import pytest

from condwalk import montecarlo, oracle
from condwalk.errors import DomainError
from condwalk.rng import derive_seed, uniforms


def test_rng_is_pure():
    a = uniforms(5, np.arange(10, dtype=np.uint64), 3)
    b = uniforms(5, np.arange(10, dtype=np.uint64), 3)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))
    assert derive_seed(1, 2) != derive_seed(1, 3)


def test_thread_invariance(uniform):
    a = montecarlo.mc_exit_pmf(uniform, 0.3, 50, 150_000, 9, threads=1)
    b = montecarlo.mc_exit_pmf(uniform, 0.3, 50, 150_000, 9, threads=3)
    assert np.array_equal(a.counts, b.counts) and a.survivors == b.survivors


def test_persistence_agrees_with_oracle(trinomial):
    n = 64
    est = montecarlo.mc_persistence(trinomial, 0, n, 100_000, 4)
    exact = oracle.persistence(trinomial, 0, n)
    assert abs(est.value - exact) <= 5 * est.stderr


def test_joint_interval_agrees_with_oracle(ssrw):
    n = 30
    est = montecarlo.mc_joint_interval(ssrw, 0, 2, 3, n, 100_000, 2)
    t = oracle.joint_law(ssrw, 0, n)
    exact = t.prob_at(2) + t.prob_at(4)
    assert abs(est.value - exact) <= 5 * est.stderr


def test_intervals_partition(uniform):
    edges = [0.0, 0.5, 1.0, 2.0]
    parts = montecarlo.mc_joint_intervals(uniform, 0.0, edges, 20, 50_000, 1)
    whole = montecarlo.mc_joint_interval(uniform, 0.0, 0.0, 2.0, 20, 50_000, 1)
    assert sum(p.value for p in parts) == pytest.approx(whole.value, abs=1e-12)


def test_partial_mean_undershoot(ssrw):
    est = montecarlo.mc_partial_mean(ssrw, 2, 64, 50_000, 1)
    # undershoot of the simple walk is exactly 1, so W = x + P(tau <= n)
    assert est.value == pytest.approx(2 + 1 - est.survival.value, abs=1e-12)
    assert abs(est.value - oracle.joint_law(ssrw, 2, 64, "n").mean_position()) <= 5 * est.survival.stderr + 1e-12


def test_max_abs(ssrw):
    assert montecarlo.mc_max_abs(ssrw, 10, 20.0, 10_000, 1).value == 0.0
    est = montecarlo.mc_max_abs(ssrw, 100, 10.0, 50_000, 1)
    exact = oracle.fuk_nagaev_check(ssrw, 100, 10.0, 1.0).exact_prob
    assert abs(est.value - exact) <= 5 * est.stderr


def test_path_minimum(uniform):
    with pytest.raises(DomainError):
        montecarlo.mc_persistence(uniform, 0, 10, 100, 1)
