"""Monte-Carlo view of how much randomly initialized ReLU nets stretch distances."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .relu_core import ReluNetwork, layer_outputs, random_init
from .seeding import rng_for, uniform_sphere


@dataclass
class StretchReport:
    d: int
    n: int
    k: int
    N: int
    epsilon: float
    seed: int
    # per trial, per layer: max over pairs of ||G_l(x_i) - G_l(x_j)|| / ||x_i - x_j||
    max_stretch: np.ndarray = field(repr=False)

    @property
    def trials(self) -> int:
        return len(self.max_stretch)

    @property
    def violated(self) -> np.ndarray:
        """Per trial: some pair at some layer stretched by more than 1 + epsilon."""
        return np.any(self.max_stretch > 1 + self.epsilon, axis=1)

    @property
    def violation_count(self) -> int:
        return int(self.violated.sum())

    @property
    def violation_fraction(self) -> float:
        return self.violation_count / self.trials


def pairwise_stretch(net: ReluNetwork, points: np.ndarray) -> np.ndarray:
    """Max pairwise stretch at every layer (relative to input distances)."""
    outs = layer_outputs(net, points)
    ii, jj = np.triu_indices(len(points), k=1)
    base = np.linalg.norm(points[ii] - points[jj], axis=1)
    return np.array([np.max(np.linalg.norm(h[ii] - h[jj], axis=1) / base) for h in outs])


def _distinct_sphere_points(rng, k: int, N: int) -> np.ndarray:
    while True:
        pts = uniform_sphere(rng, k, N)
        ii, jj = np.triu_indices(N, k=1)
        if np.min(np.linalg.norm(pts[ii] - pts[jj], axis=1)) > 1e-12:
            return pts


def stretch_experiment(d: int, n: int, k: int, N: int, epsilon: float, trials: int, seed: int) -> StretchReport:
    """Fresh random net and N points on the unit sphere in every trial."""
    if N < 2:
        raise ValueError("need N >= 2 points")
    rows = []
    for trial in range(trials):
        net = random_init(d, n, k, seed=int(rng_for(seed, trial, 0).integers(2**63)))
        pts = _distinct_sphere_points(rng_for(seed, trial, 1), k, N)
        rows.append(pairwise_stretch(net, pts))
    return StretchReport(d, n, k, N, epsilon, seed, np.array(rows))


def delta_l_samples(n: int, pairs: int, seed: int, *, x=None, y=None, input_dim: int | None = None) -> np.ndarray:
    """Samples of ||relu(Wx) - relu(Wy)||^2 / ||x - y||^2 over fresh W ~ N(0, 2/n)^{n x in}.

    (x, y) is fixed (random unless given).  Each row of W enters only through
    its projections onto span(x, y), which are drawn directly.
    """
    rng = rng_for(seed)
    if x is None or y is None:
        dim = input_dim or n
        x, y = rng.standard_normal(dim), rng.standard_normal(dim)
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    diff = np.linalg.norm(x - y)
    if diff == 0:
        raise ValueError("x and y must differ")
    basis, _ = np.linalg.qr(np.stack([x, y], axis=1))
    cx, cy = basis.T @ x, basis.T @ y
    scale = np.sqrt(2.0 / n)
    out = np.empty(pairs)
    for s in range(pairs):
        g = rng.standard_normal((n, 2)) * scale
        a, b = g @ cx, g @ cy
        out[s] = np.sum((np.maximum(a, 0) - np.maximum(b, 0)) ** 2) / diff**2
    return out


def tail_table(samples: np.ndarray, n: int, ts=(1, 2, 4, 8, 16, 32)) -> list[tuple[float, float]]:
    """Fraction of samples above 1 + t/n for each t."""
    return [(t, float(np.mean(samples > 1 + t / n))) for t in ts]


def mean_within(samples: np.ndarray, bound: float = 1.0, z: float = 3.0) -> tuple[bool, float, float]:
    """One-sided test mean <= bound + z * standard error."""
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(len(samples)))
    return mean <= bound + z * se, mean, se


__all__ = [
    "StretchReport",
    "delta_l_samples",
    "mean_within",
    "pairwise_stretch",
    "stretch_experiment",
    "tail_table",
]
