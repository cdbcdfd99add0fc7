import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gencs.relu_core import forward, random_init
from gencs.seeding import rng_for, uniform_ball
from gencs.sensing import (
    RecoveryConfig,
    _descend,
    discretization_witness,
    discretize,
    gaussian_measurement,
    latent_recover,
    recover_over_net,
    sample_orthonormal,
    srec_check,
)
from gencs.separated_set import build_separated_set
from gencs.sparse_gen import build_sparsity_net, random_k_sparse


def test_orthonormal_square():
    A = sample_orthonormal(16, 16, 0).A
    np.testing.assert_allclose(A @ A.T, np.eye(16), atol=1e-10)
    np.testing.assert_allclose(A.T @ A, np.eye(16), atol=1e-10)


def test_orthonormal_single_row():
    A = sample_orthonormal(1, 9, 4).A
    assert A.shape == (1, 9) and np.linalg.norm(A) == pytest.approx(1.0)


def test_orthonormal_contracts():
    A = sample_orthonormal(8, 32, 1).A
    v = np.random.default_rng(0).standard_normal((100, 32))
    assert np.all(np.linalg.norm(v @ A.T, axis=1) <= np.linalg.norm(v, axis=1) * (1 + 1e-12))


def test_orthonormal_rejects_wide():
    with pytest.raises(ValueError):
        sample_orthonormal(5, 4, 0)


def test_discretize_examples():
    assert discretize(np.array([[0.3]]), 2)[0, 0] == 0.25
    grid = np.array([[0.25, -0.75], [1.5, 0.0]])
    np.testing.assert_array_equal(discretize(grid, 2), grid)
    A = np.random.default_rng(0).standard_normal((4, 4))
    errs = [np.max(np.abs(A - discretize(A, b))) for b in (4, 12, 30)]
    assert errs[0] > errs[1] > errs[2]
    assert all(e <= 2.0 ** -(b + 1) for e, b in zip(errs, (4, 12, 30)))


def test_discretize_ties_to_even():
    # 0.375 * 4 = 1.5 rounds to 2, 0.125 * 4 = 0.5 rounds to 0
    np.testing.assert_array_equal(discretize(np.array([0.375, 0.125]), 2), [0.5, 0.0])


def test_witness_trivial_cases():
    A = sample_orthonormal(4, 10, 0).A
    v = np.random.default_rng(0).standard_normal(10)
    assert not np.any(discretization_witness(A, A, v))
    assert not np.any(discretization_witness(A, discretize(A, 8), np.zeros(10)))


def test_witness_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        discretization_witness(2 * np.eye(3), np.eye(3), np.ones(3))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32), b=st.integers(1, 20), m=st.integers(1, 32))
def test_witness_property(seed, b, m):
    A = sample_orthonormal(m, 32, seed).A
    Ar = discretize(A, b)
    v = rng_for(seed, 1).standard_normal(32) * 10
    s = discretization_witness(A, Ar, v, b=b)
    assert np.linalg.norm(Ar @ v - A @ (v - s)) <= 1e-9 * max(1, np.linalg.norm(v))
    assert np.linalg.norm(s) <= 32 * 2.0**-b * np.linalg.norm(v)


def test_recover_exact_and_singleton():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((20, 8))
    A = sample_orthonormal(8, 8, 0).A
    assert recover_over_net(A, A @ Z[13], Z) == 13
    assert recover_over_net(A, rng.standard_normal(8), Z[:1]) == 0
    with pytest.raises(ValueError):
        recover_over_net(A, np.zeros(8), np.zeros((0, 8)))


def test_recover_ties_lowest_index():
    Z = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert recover_over_net(np.eye(2), np.array([1.0, 0.0]), Z) == 0


def test_recover_gaussian_small_perturbation():
    rng = np.random.default_rng(3)
    n, N = 64, 256
    Z = rng.standard_normal((N, n))
    m = 4 * math.ceil(math.log2(N))
    hits = 0
    for trial in range(200):
        A = gaussian_measurement(m, n, trial)
        j = int(rng.integers(N))
        x = Z[j] + uniform_ball(rng, n, 0.5)
        hits += recover_over_net(A, A @ x, Z) == j
    assert hits / 200 >= 0.75


@pytest.fixture(scope="module")
def wide_set():
    return build_separated_set(64, 1, 4, 128, 8, seed=0)


def test_goal_inequality_on_separated_set(wide_set):
    Z, delta, C = wide_set.image_points, 1.0, 1.0
    m = 4 * 4 * math.ceil(math.log2(64))
    ok = 0
    for trial in range(200):
        rng = rng_for(11, trial)
        A = gaussian_measurement(m, wide_set.n, int(rng.integers(2**63)))
        j = int(rng.integers(len(Z)))
        x = Z[j] + uniform_ball(rng, wide_set.n, delta)
        z_hat = Z[recover_over_net(A, A @ x, Z)]
        ok += np.linalg.norm(Z[j] - z_hat) <= C * np.min(np.linalg.norm(x - Z, axis=1)) + delta
    assert ok / 200 >= 0.75


def test_srec_trivial_cases(wide_set):
    n = wide_set.n
    A = sample_orthonormal(n, n, 0).A
    assert srec_check(A, wide_set.latent_points, wide_set.G, 1e-9, 20, 0, noise=0.0) == 1.0


def test_srec_isometry():
    # x' is the nearest image; a square orthonormal A preserves ||x - x'|| exactly
    rng = np.random.default_rng(0)
    A = sample_orthonormal(6, 6, 2).A
    v = rng.standard_normal(6)
    assert np.linalg.norm(A @ v) == pytest.approx(np.linalg.norm(v), rel=1e-12)


def test_srec_pass_rate(wide_set):
    m = 4 * 4 * math.ceil(math.log2(64))
    A = gaussian_measurement(m, wide_set.n, 5)
    assert srec_check(A, wide_set.latent_points, wide_set.G, 1.0, 100, 3) >= 0.9


def test_gaussian_norm_concentration():
    n = 40
    A = gaussian_measurement(20, n, 0)
    ratios = []
    for s in range(10_000):
        A = gaussian_measurement(20, n, s)
        v = rng_for(s, 1).standard_normal(n)
        ratios.append(np.sum((A @ v) ** 2) / np.sum(v**2))
    assert abs(np.mean(ratios) - 1) < 0.1


def test_latent_zero_residual_fixed_point():
    net = random_init(2, 10, 3, seed=0)
    x0 = np.array([0.5, -0.2, 0.9])
    A = gaussian_measurement(6, 10, 1)
    rec = latent_recover(net, A, A @ forward(net, x0), RecoveryConfig(restarts=1), init=[x0])
    assert rec.objective <= 1e-12 and rec.success


def test_latent_zero_measurement():
    gen = build_sparsity_net(8, 2)
    A = gaussian_measurement(5, 8, 0)
    rec = latent_recover(gen, A, np.zeros(5))
    assert rec.objective == 0.0


def test_latent_recovers_sparse_signals():
    n, k = 64, 3
    m = 6 * k * int(math.log2(n))
    gen = build_sparsity_net(n, k)
    hits = 0
    for trial in range(100):
        z = random_k_sparse(rng_for(1, trial), n, k)
        A = gaussian_measurement(m, n, trial)
        rec = latent_recover(gen, A, A @ z, RecoveryConfig(seed=trial))
        hits += np.linalg.norm(rec.reconstruction - z) <= 1e-3
    assert hits >= 70


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_descent_is_monotone(seed):
    gen = build_sparsity_net(12, 2)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((6, 12))
    y = A @ random_k_sparse(rng, 12, 2, 0.1, 10)
    _, _, hist = _descend(gen.net, A, y, rng.standard_normal(4), RecoveryConfig(max_steps=200))
    assert all(b <= a for a, b in zip(hist, hist[1:]))


def test_recovery_config_validation():
    with pytest.raises(ValueError):
        RecoveryConfig(restarts=0)
