import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gencs.relu_core import forward
from gencs.sparse_gen import (
    GadgetParams,
    build_one_sparse_net,
    build_sparsity_net,
    encode_k_sparse,
    encode_one_sparse,
    gadget_oracle,
    random_k_sparse,
    trig_identity_residual,
)
from gencs.separated_set import lipschitz_estimate


def test_layer_widths_n3():
    net = build_one_sparse_net(3).net
    assert [l.out_dim for l in net.layers] == [12, 6, 3]


def test_apex_gives_t_at_coordinate_one():
    n, t = 5, 3.0
    alpha = np.pi / (n + 1)
    out = build_one_sparse_net(n)([t * np.sin(1.5 * alpha), t * np.cos(1.5 * alpha)])
    expected = np.zeros(n)
    expected[0] = t
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_origin_maps_to_zero():
    assert not np.any(build_sparsity_net(6, 3)(np.zeros(6)))


def test_encode_one_sparse_n3():
    np.testing.assert_allclose(encode_one_sparse([0, 1, 0]), (np.sin(5 * np.pi / 8), np.cos(5 * np.pi / 8)))
    np.testing.assert_allclose(
        encode_one_sparse([0, -1, 0]), (np.sin(np.pi + 5 * np.pi / 8), np.cos(np.pi + 5 * np.pi / 8))
    )


@pytest.mark.parametrize("z", [[0, 0, 0], [1, 1, 0]])
def test_encode_one_sparse_rejects(z):
    with pytest.raises(ValueError):
        encode_one_sparse(z)


@pytest.mark.parametrize("n", [3, 16, 101])
def test_one_sparse_round_trip(n):
    gen = build_one_sparse_net(n)
    rng = np.random.default_rng(n)
    for _ in range(1000):
        z = random_k_sparse(rng, n, 1)
        np.testing.assert_allclose(gen(np.array(encode_one_sparse(z))), z, rtol=0, atol=1e-9)


def test_k1_matches_one_sparse():
    a, b = build_sparsity_net(9, 1).net, build_one_sparse_net(9).net
    for la, lb in zip(a.layers, b.layers):
        np.testing.assert_array_equal(la.weights, lb.weights)


def test_two_sparse_example():
    n = 8
    gen = build_sparsity_net(n, 2)
    z = np.zeros(n)
    z[1], z[4] = 3, -1
    latent = np.concatenate([encode_one_sparse(3 * np.eye(n)[1]), encode_one_sparse(-np.eye(n)[4])])
    np.testing.assert_allclose(gen(latent), [0, 3, 0, 0, -1, 0, 0, 0], atol=1e-12)
    np.testing.assert_array_equal(encode_k_sparse(z, gen), latent)


def test_encode_k_sparse_zero_and_padding():
    gen = build_sparsity_net(10, 4)
    assert not np.any(encode_k_sparse(np.zeros(10), gen))
    z = np.zeros(10)
    z[[2, 7]] = [5.0, -0.5]
    lat = encode_k_sparse(z, gen)
    assert not np.any(lat[4:])
    with pytest.raises(ValueError):
        encode_k_sparse(np.ones(10), gen)


def test_random_round_trip_n64_k5():
    gen = build_sparsity_net(64, 5)
    rng = np.random.default_rng(42)
    for _ in range(500):
        z = random_k_sparse(rng, 64, int(rng.integers(0, 6)))
        np.testing.assert_allclose(gen(encode_k_sparse(z, gen)), z, rtol=0, atol=1e-9)


def test_oracle_apexes_and_outside():
    p = GadgetParams(7, 3)
    phase = p.beta + p.alpha / 2
    assert gadget_oracle(p, 2 * np.sin(phase), 2 * np.cos(phase)) == pytest.approx(2.0)
    assert gadget_oracle(p, 2 * np.sin(phase + np.pi), 2 * np.cos(phase + np.pi)) == pytest.approx(-2.0)
    off = p.beta + 1.5 * p.alpha
    assert gadget_oracle(p, np.sin(off), np.cos(off)) == 0.0


def test_oracle_matches_network_on_grid():
    n = 12
    gen = build_one_sparse_net(n)
    theta = np.linspace(0, 2 * np.pi, 721)[:-1]
    t = np.linspace(0.05, 10, 15)
    T, TH = np.meshgrid(t, theta)
    X = np.stack([(T * np.sin(TH)).ravel(), (T * np.cos(TH)).ravel()], axis=1)
    out = gen(X)
    for i in range(1, n + 1):
        ref = np.array([gadget_oracle(GadgetParams(n, i), a, b) for a, b in X])
        assert np.max(np.abs(out[:, i - 1] - ref)) <= 1e-9


def test_trig_identity_examples():
    assert trig_identity_residual(0.0, 0.0, np.pi / 4) <= 1e-12
    assert trig_identity_residual(0.7, 0.7, 1.3) <= 1e-12
    with pytest.raises(ValueError):
        trig_identity_residual(0.0, 0.0, 2 * np.pi)


def test_half_angle_rhs_variant_is_false():
    # with sin(alpha/2) on the right-hand side the identity does not hold
    beta, theta, alpha = 0.3, 0.1, 1.0
    lhs = np.sin(beta + alpha / 2 - theta) / np.sin(alpha / 2) - np.sin(beta - theta) / np.sin(alpha)
    printed = np.sin(beta - theta + alpha) / np.sin(alpha / 2)
    assert abs(lhs - printed) > 0.5
    assert trig_identity_residual(beta, theta, alpha) <= 1e-12


def test_trig_identity_random_triples():
    rng = np.random.default_rng(0)
    b, th = rng.uniform(-np.pi, np.pi, (2, 100_000))
    a = rng.uniform(0.01, 3, 100_000)
    assert np.max(trig_identity_residual(b, th, a)) <= 1e-10


def test_one_sparse_lipschitz_is_finite_and_grows():
    est = []
    for n in (4, 16, 64):
        gen = build_one_sparse_net(n)
        est.append(lipschitz_estimate(gen, 1.0, 4000, seed=0, dim=2))
    assert all(np.isfinite(est))
    # slope of the tent is about 1/sin(alpha/2) ~ 2(n+1)/pi
    assert est[-1] <= 4 * 65


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 40),
    k=st.integers(1, 4),
    seed=st.integers(0, 2**32),
    c=st.floats(1e-3, 1e3),
)
def test_sparsity_and_homogeneity(n, k, seed, c):
    k = min(k, n)
    gen = build_sparsity_net(n, k)
    lat = np.random.default_rng(seed).standard_normal((50, 2 * k))
    out = forward(gen.net, lat)
    assert np.all(np.count_nonzero(out, axis=1) <= k)
    np.testing.assert_allclose(forward(gen.net, c * lat), c * out, rtol=1e-9, atol=1e-9 * c)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 50), k=st.integers(1, 5), seed=st.integers(0, 2**32))
def test_round_trip_property(n, k, seed):
    k = min(k, n)
    gen = build_sparsity_net(n, k)
    rng = np.random.default_rng(seed)
    z = random_k_sparse(rng, n, int(rng.integers(0, k + 1)))
    np.testing.assert_allclose(gen(encode_k_sparse(z, gen)), z, rtol=0, atol=1e-9)
