"""Measurement matrices, b-bit discretization, and recovery solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .relu_core import ReluNetwork, forward
from .seeding import rng_for, uniform_ball
from .sparse_gen import SparseGeneratorNet, encode_k_sparse


@dataclass(frozen=True)
class MeasurementEnsemble:
    A: np.ndarray
    A_rounded: np.ndarray | None = None
    b: int | None = None

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def rounded(self, b: int) -> "MeasurementEnsemble":
        return MeasurementEnsemble(self.A, discretize(self.A, b), b)


def sample_orthonormal(m: int, n: int, seed: int, max_retries: int = 10) -> MeasurementEnsemble:
    """Haar-distributed m x n matrix with orthonormal rows (QR of a Gaussian sample)."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = rng_for(seed)
    for _ in range(max_retries):
        g = rng.standard_normal((n, m))
        q, r = np.linalg.qr(g)
        d = np.diag(r)
        if np.min(np.abs(d)) > 1e-10:
            # sign fix makes the row space (and the frame) Haar-uniform
            return MeasurementEnsemble(np.ascontiguousarray((q * np.sign(d)).T))
    raise RuntimeError("Gaussian sample kept coming out rank-deficient")


def gaussian_measurement(m: int, n: int, seed: int) -> np.ndarray:
    """i.i.d. N(0, 1/m) entries, so E||Av||^2 = ||v||^2."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    return rng_for(seed).standard_normal((m, n)) / np.sqrt(m)


def discretize(A, b: int) -> np.ndarray:
    """Round every entry to a multiple of 2^-b (nearest, ties to even).

    Scaling by a power of two is exact, so the result is bit-reproducible.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    scale = 2.0**b
    return np.round(np.asarray(A, dtype=np.float64) * scale) / scale


def discretization_witness(A, A_rounded, v, b: int | None = None) -> np.ndarray:
    """s = A^T (A - A') v, which satisfies A' v = A (v - s) for orthonormal-row A.

    Raises if A is not orthonormal-row, or if the identity (or, given ``b``,
    the bound ||s|| <= n 2^-b ||v||) fails numerically.
    """
    A = np.asarray(A, dtype=np.float64)
    A_rounded = np.asarray(A_rounded, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    m, n = A.shape
    if np.max(np.abs(A @ A.T - np.eye(m))) > 1e-10:
        raise ValueError("A does not have orthonormal rows")
    s = A.T @ ((A - A_rounded) @ v)
    vn = np.linalg.norm(v)
    gap = np.linalg.norm(A_rounded @ v - A @ (v - s))
    if gap > 1e-9 * max(1.0, vn):
        raise ArithmeticError(f"witness identity off by {gap:.3g}")
    if b is not None and np.linalg.norm(s) > n * 2.0**-b * vn:
        raise ArithmeticError("witness exceeds n 2^-b ||v||")
    return s


def recover_over_net(A, y, Z, AZ=None) -> int:
    """Index of argmin_{z in Z} ||Az - y||; ties go to the lowest index.

    ``AZ`` (rows ``A @ z``) may be passed to reuse the projected net.
    """
    Z = np.asarray(Z)
    if len(Z) == 0:
        raise ValueError("net is empty")
    if AZ is None:
        AZ = Z @ np.asarray(A).T
    return int(np.argmin(np.linalg.norm(AZ - y, axis=1)))


def srec_check(A, M, G, delta: float, trials: int, seed: int, *, c: float = 10.0, noise: float | None = None) -> float:
    """Fraction of trials with ||A(x - x')|| <= c * delta.

    Each trial picks a random net point, perturbs its image by a uniform
    vector of norm <= ``noise`` (default ``delta``), and takes x' as the
    nearest image of the net.
    """
    A = np.asarray(A)
    images = np.asarray(G(np.asarray(M)))
    noise = delta if noise is None else noise
    rng = rng_for(seed)
    passed = 0
    for _ in range(trials):
        x = images[rng.integers(len(images))]
        if noise > 0:
            x = x + uniform_ball(rng, images.shape[1], noise)
        nearest = images[np.argmin(np.linalg.norm(images - x, axis=1))]
        passed += np.linalg.norm(A @ (x - nearest)) <= c * delta
    return passed / trials


@dataclass
class RecoveryConfig:
    restarts: int = 8
    max_steps: int = 2000
    step_size: float = 1.0
    tolerance: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if min(self.restarts, self.max_steps) < 1 or self.step_size <= 0 or self.tolerance <= 0:
            raise ValueError("restarts, max_steps, step_size and tolerance must be positive")


@dataclass
class LatentRecovery:
    latent: np.ndarray
    reconstruction: np.ndarray
    objective: float
    success: bool
    history: list[float] = field(default_factory=list)


def _objective_and_grad(net: ReluNetwork, A, y, x):
    pre, h = [], x
    for layer in net.layers:
        u = layer.weights @ h
        pre.append(u)
        h = layer.activation.apply(u)
    r = A @ h - y
    f = float(r @ r)
    g = 2.0 * (A.T @ r)
    for layer, u in zip(reversed(net.layers), reversed(pre)):
        g = layer.weights.T @ (g * layer.activation.derivative(u))
    return f, g


def _objective(net, A, y, x):
    r = A @ forward(net, x) - y
    return float(r @ r)


def _descend(net, A, y, x, cfg: RecoveryConfig):
    f, g = _objective_and_grad(net, A, y, x)
    history = [f]
    lr = cfg.step_size
    for _ in range(cfg.max_steps):
        if f <= cfg.tolerance:
            break
        gn = float(g @ g)
        if gn == 0.0:
            break
        # step halving until the objective does not increase
        while lr > 1e-30:
            cand = x - lr * g
            fc = _objective(net, A, y, cand)
            if fc <= f:
                break
            lr *= 0.5
        else:
            break
        x = cand
        f, g = _objective_and_grad(net, A, y, x)
        history.append(f)
        lr = min(2 * lr, cfg.step_size)
    return x, f, history


def _warm_start(gen: SparseGeneratorNet, A, y):
    z0 = np.linalg.lstsq(A, y, rcond=None)[0]
    keep = np.argsort(-np.abs(z0), kind="stable")[: gen.k]
    z = np.zeros(gen.n)
    z[keep] = z0[keep]
    return encode_k_sparse(z, gen), float(np.linalg.norm(z))


def latent_recover(net, A, y, config: RecoveryConfig | None = None, init=()) -> LatentRecovery:
    """Multi-restart subgradient descent on ||A G(x) - y||^2 over the latent space.

    Starting points are, in order: ``init``; for a sparsity generator, the
    encoding of the top-k entries of the least-squares solution; then uniform
    draws from a latent ball of matching radius.  The best run is returned.
    """
    cfg = config or RecoveryConfig()
    gen = net if isinstance(net, SparseGeneratorNet) else None
    relu = net.net if gen else net
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.shape != (len(y), relu.output_dim):
        raise ValueError(f"A must be {len(y)} x {relu.output_dim}, got {A.shape}")

    starts = [np.asarray(s, dtype=np.float64) for s in init]
    radius = max(float(np.linalg.norm(y)), 1e-12)
    if gen is not None:
        warm, radius_ws = _warm_start(gen, A, y)
        starts.append(warm)
        radius = max(radius_ws, 1e-12)
    rng = rng_for(cfg.seed)
    while len(starts) < cfg.restarts:
        starts.append(uniform_ball(rng, relu.input_dim, radius))

    best = None
    for x0 in starts:
        x, f, hist = _descend(relu, A, y, x0, cfg)
        if best is None or f < best[1]:
            best = (x, f, hist)
        if f <= cfg.tolerance:
            break
    x, f, hist = best
    return LatentRecovery(x, forward(relu, x), f, f <= cfg.tolerance, hist)
