"""A two-hidden-layer ReLU generator whose range contains every k-sparse vector.

For one copy with input (x1, x2) = (t sin(theta), t cos(theta)) and
alpha = pi / (n + 1), gadget i is active on the wedge
theta in (i*alpha, (i+1)*alpha) where it outputs a positive tent in theta
peaking at t, and on the opposite wedge (shifted by pi) where it outputs the
negated tent.  The 2n wedges are disjoint, so one copy produces a 1-sparse
vector, and k copies summed produce a k-sparse one.

Layer layout for copy c and gadget i (1-based):

* hidden 1 (4nk, positive): rows ``c*4n + 4(i-1) + {0,1,2,3}`` are
  a+_1, a+_2, a-_1, a-_2 with directions
  ``(cos(phi), -sin(phi))`` for phi = beta, beta + alpha/2 and their pi-shifts;
* hidden 2 (2nk, positive): ``a_1/sin(alpha) - a_2/sin(alpha/2)`` for the
  plus and minus gadgets;
* output (n, linear): ``2cos(alpha/2) * (b+ - b-)`` summed over copies.

The minus gadget's negative-preserving unit ``[a_2/sin(a/2) - a_1/sin(a)]_-``
equals ``-[a_1/sin(a) - a_2/sin(a/2)]_+``, so it is stored as a positive unit
and the output layer carries the sign.  The factor ``2cos(alpha/2)`` puts the
apex value at exactly t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .relu_core import ActivationKind, AffineReluLayer, ReluNetwork, forward


@dataclass(frozen=True)
class GadgetParams:
    n: int
    i: int

    def __post_init__(self):
        if not 1 <= self.i <= self.n:
            raise ValueError(f"gadget index {self.i} outside [1, {self.n}]")

    @property
    def alpha(self) -> float:
        return np.pi / (self.n + 1)

    @property
    def beta(self) -> float:
        return self.i * self.alpha


@dataclass(frozen=True)
class SparseGeneratorNet:
    net: ReluNetwork
    n: int
    k: int

    def __call__(self, latent):
        return forward(self.net, latent)

    @property
    def alpha(self) -> float:
        return np.pi / (self.n + 1)


def _copy_blocks(n: int):
    alpha = np.pi / (n + 1)
    beta = alpha * np.arange(1, n + 1)
    phases = np.stack([beta, beta + alpha / 2, np.pi + beta, np.pi + beta + alpha / 2], axis=1)
    w1 = np.stack([np.cos(phases), -np.sin(phases)], axis=-1).reshape(4 * n, 2)

    w2 = np.zeros((2 * n, 4 * n))
    for g in range(n):
        for s in range(2):
            w2[2 * g + s, 4 * g + 2 * s] = 1.0 / np.sin(alpha)
            w2[2 * g + s, 4 * g + 2 * s + 1] = -1.0 / np.sin(alpha / 2)

    scale = 2.0 * np.cos(alpha / 2)
    w3 = np.zeros((n, 2 * n))
    w3[np.arange(n), 2 * np.arange(n)] = scale
    w3[np.arange(n), 2 * np.arange(n) + 1] = -scale
    return w1, w2, w3


def build_sparsity_net(n: int, k: int = 1) -> SparseGeneratorNet:
    """k parallel copies of the 1-sparse generator on disjoint input pairs, summed."""
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"need n >= 1 and 1 <= k <= n, got n={n}, k={k}")
    w1, w2, w3 = _copy_blocks(n)
    eye = np.eye(k)
    layers = (
        AffineReluLayer(np.kron(eye, w1), ActivationKind.POSITIVE),
        AffineReluLayer(np.kron(eye, w2), ActivationKind.POSITIVE),
        AffineReluLayer(np.kron(np.ones((1, k)), w3), ActivationKind.NONE),
    )
    return SparseGeneratorNet(ReluNetwork(layers), n, k)


def build_one_sparse_net(n: int) -> SparseGeneratorNet:
    return build_sparsity_net(n, 1)


def _apex(n: int, index: int, value: float) -> tuple[float, float]:
    # index is 0-based; gadget number is index + 1
    alpha = np.pi / (n + 1)
    phase = (index + 1) * alpha + alpha / 2
    if value < 0:
        phase += np.pi
    t = abs(value)
    return t * np.sin(phase), t * np.cos(phase)


def encode_one_sparse(z) -> tuple[float, float]:
    z = np.asarray(z, dtype=np.float64)
    (nz,) = np.nonzero(z)
    if nz.size != 1:
        raise ValueError(f"expected exactly one nonzero coordinate, got {nz.size}")
    return _apex(z.size, int(nz[0]), float(z[nz[0]]))


def encode_k_sparse(z, net: SparseGeneratorNet) -> np.ndarray:
    """Latent in R^{2k}: nonzeros go to copies in ascending index order, the rest get (0, 0)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (net.n,):
        raise ValueError(f"expected vector of length {net.n}, got shape {z.shape}")
    (nz,) = np.nonzero(z)
    if nz.size > net.k:
        raise ValueError(f"vector has {nz.size} nonzeros but the generator has only {net.k} copies")
    latent = np.zeros(2 * net.k)
    for c, idx in enumerate(nz):
        latent[2 * c : 2 * c + 2] = _apex(net.n, int(idx), float(z[idx]))
    return latent


def gadget_oracle(params: GadgetParams, x1: float, x2: float) -> float:
    """Closed-form value of output coordinate i, computed in polar form without the network."""
    t = float(np.hypot(x1, x2))
    theta = float(np.arctan2(x1, x2)) % (2 * np.pi)
    alpha, beta = params.alpha, params.beta
    sign = 1.0
    phi = theta - beta
    if not 0.0 < phi < alpha:
        phi = theta - np.pi - beta
        sign = -1.0
        if not 0.0 < phi < alpha:
            return 0.0
    # rising edge t sin(theta - beta), falling edge t sin(beta - theta + alpha)
    return sign * t * np.sin(min(phi, alpha - phi)) / np.sin(alpha / 2)


def trig_identity_residual(beta, theta, alpha):
    """|sin(b + a/2 - th)/sin(a/2) - sin(b - th)/sin(a) - sin(b - th + a)/sin(a)|.

    This is the identity the second hidden layer relies on on the overlap of
    both first-layer units.  Vectorized over array arguments.
    """
    beta, theta, alpha = np.broadcast_arrays(*map(np.asarray, (beta, theta, alpha)))
    s1, s2 = np.sin(alpha), np.sin(alpha / 2)
    if np.any(np.abs(s1) < 1e-14) or np.any(np.abs(s2) < 1e-14):
        raise ValueError("alpha must not be a multiple of pi")
    lhs = np.sin(beta + alpha / 2 - theta) / s2 - np.sin(beta - theta) / s1
    rhs = np.sin(beta - theta + alpha) / s1
    res = np.abs(lhs - rhs)
    return float(res) if res.ndim == 0 else res


def random_k_sparse(rng, n: int, k: int, low: float = 1e-3, high: float = 1e3) -> np.ndarray:
    """Exactly k nonzeros, log-uniform magnitudes in [low, high], random signs."""
    z = np.zeros(n)
    idx = rng.choice(n, size=k, replace=False)
    mags = np.exp(rng.uniform(np.log(low), np.log(high), size=k))
    z[idx] = mags * rng.choice([-1.0, 1.0], size=k)
    return z
