"""A Lipschitz map R^k -> R^n whose image holds a large well-separated set.

``g`` is a piecewise-linear path through balanced-code points in R^{n/k};
``G = g (x) ... (x) g`` applies it blockwise.  A Reed-Solomon code over a prime
subset of the path points picks latent grid points whose images pairwise
differ in at least half of the k blocks, which gives separation R/sqrt(6).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .codes import BalancedCodebook, find_prime_in, gen_balanced_codebook, rs_subset
from .errors import ConstructionFailed
from .seeding import rng_for, uniform_ball


@dataclass(frozen=True)
class PiecewiseLinearMap:
    knots: np.ndarray
    values: np.ndarray
    lipschitz_target: float = math.nan
    segment_stretch: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if len(knots) < 2 or len(knots) != len(values):
            raise ValueError("need at least two knots, one value per knot")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        gaps = np.diff(knots)
        chords = np.linalg.norm(np.diff(values, axis=0), axis=1)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "segment_stretch", chords / gaps)

    @property
    def out_dim(self) -> int:
        return self.values.shape[1]

    @property
    def stretch_constant(self) -> float:
        """Max segment stretch divided by the target L."""
        return float(self.segment_stretch.max() / self.lipschitz_target)

    def __call__(self, x):
        return eval_g(self, x)


def eval_g(gmap: PiecewiseLinearMap, x) -> np.ndarray:
    """Linear interpolation between bracketing knots, constant outside them."""
    x = np.asarray(x, dtype=np.float64)
    kn = gmap.knots
    xc = np.clip(x, kn[0], kn[-1])
    j = np.clip(np.searchsorted(kn, xc, side="right") - 1, 0, len(kn) - 2)
    w = ((xc - kn[j]) / (kn[j + 1] - kn[j]))[..., None]
    return (1.0 - w) * gmap.values[j] + w * gmap.values[j + 1]


def tensor_power_eval(gmap: PiecewiseLinearMap, k: int, x) -> np.ndarray:
    """Apply g to each of the k latent coordinates and concatenate the blocks."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != k:
        raise ValueError(f"expected latent of length {k}, got shape {x.shape}")
    out = eval_g(gmap, x)  # (..., k, n/k)
    return out.reshape(*x.shape[:-1], k * gmap.out_dim)


def path_size(L: float, r: float, R: float, available: int) -> int:
    return min(math.floor(L * r / R + 1e-9), available)


def build_g(L: float, r: float, k: int, n: int, R: float, codebook: BalancedCodebook) -> PiecewiseLinearMap:
    """Path through the first ``min(floor(Lr/R), |codebook|)`` scaled codewords.

    Knots sit at ``j * r / (sqrt(k) p)`` for j = 1..p; each segment maps a gap of
    at least ``R / (L sqrt(k))`` to a chord of at most ``2 sqrt(2/3) R / sqrt(k)``.
    """
    if R <= 0 or L <= 0 or r <= 0:
        raise ValueError("L, r and R must be positive")
    if n % k:
        raise ValueError(f"n={n} is not divisible by k={k}")
    if codebook.n != n // k:
        raise ValueError(f"codebook block length {codebook.n} != n/k = {n // k}")
    p = path_size(L, r, R, codebook.size)
    if p < 2:
        raise ValueError(f"path needs at least two points, got floor(Lr/R) -> {p}")
    gap = r / (math.sqrt(k) * p)
    knots = gap * np.arange(1, p + 1)
    values = codebook.points[:p] * (R / math.sqrt(k))
    return PiecewiseLinearMap(knots, values, lipschitz_target=L)


def lipschitz_estimate(evaluator, domain_radius: float, samples: int, seed: int, *, dim: int, pairs=()) -> float:
    """Largest observed ||f(x) - f(y)|| / ||x - y|| over sampled and supplied pairs.

    Half the sampled pairs are independent points of the ball, half are short
    steps from a random point; ``pairs`` adds known extremal directions.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    rng = rng_for(seed)
    half = samples // 2
    xa = uniform_ball(rng, dim, domain_radius, size=samples)
    xb = np.empty_like(xa)
    xb[:half] = uniform_ball(rng, dim, domain_radius, size=half)
    step = 1e-3 * domain_radius
    dirs = rng.standard_normal((samples - half, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    xb[half:] = xa[half:] + step * dirs
    if len(pairs):
        pa, pb = (np.asarray(v, dtype=np.float64).reshape(-1, dim) for v in zip(*pairs))
        xa, xb = np.vstack([xa, pa]), np.vstack([xb, pb])
    fa = np.asarray(evaluator(xa)).reshape(len(xa), -1)
    fb = np.asarray(evaluator(xb)).reshape(len(xb), -1)
    dx = np.linalg.norm(xa - xb, axis=1)
    keep = dx > 0
    return float(np.max(np.linalg.norm(fa - fb, axis=1)[keep] / dx[keep]))


def sign_hamming_min(signs: np.ndarray, chunk: int = 2048) -> int:
    """Exact minimum pairwise Hamming distance of +-1 rows via integer Gram blocks."""
    s = signs.astype(np.int64)
    n = s.shape[1]
    best = n
    for i in range(0, len(s), chunk):
        gram = s[i : i + chunk] @ s.T
        ham = (n - gram) // 2
        rows = np.arange(i, min(i + chunk, len(s)))
        ham[rows - i, rows] = n + 1
        best = min(best, int(ham.min()))
    return best


@dataclass
class WellSeparatedSet:
    latent_points: np.ndarray
    image_points: np.ndarray
    r: float
    R: float
    L: float
    k: int
    n: int
    gmap: PiecewiseLinearMap
    tuples: np.ndarray
    path_points: int
    alphabet_size: int
    min_pairwise_distance: float = math.nan
    max_norm: float = math.nan
    lipschitz: float = math.nan

    def __len__(self):
        return len(self.latent_points)

    def G(self, x):
        return tensor_power_eval(self.gmap, self.k, x)

    def knot_grid(self, refine: int = 1) -> np.ndarray:
        """Latent grid on the knots, each gap split into ``refine`` pieces.

        ``refine=1`` gives the |P'|^k knot tuples, which contain X.
        """
        if refine < 1:
            raise ValueError("refine must be >= 1")
        knots = self.gmap.knots
        kn = np.concatenate(
            [np.linspace(a, b, refine, endpoint=False) for a, b in zip(knots[:-1], knots[1:])]
            + [knots[-1:]]
        )
        mesh = np.meshgrid(*([kn] * self.k), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def certificates(self) -> dict:
        return {
            "min_dist": self.min_pairwise_distance,
            "max_norm": self.max_norm,
            "cardinality": len(self),
            "lipschitz_estimate": self.lipschitz,
            "path_points": self.path_points,
            "alphabet_size": self.alphabet_size,
        }

    def dumps(self) -> str:
        return json.dumps(
            {
                "L": self.L, "r": self.r, "R": self.R, "k": self.k, "n": self.n,
                "X": self.latent_points.tolist(),
                "Z": self.image_points.tolist(),
                "certificates": self.certificates(),
            }
        )


def _codebook_for(block: int, target: int, seed: int, max_attempts: int) -> BalancedCodebook:
    # |P'| saturates at the largest balanced code we can certify
    m = max(1, math.ceil(math.log2(max(target, 2))))
    last = None
    while m >= 1:
        try:
            return gen_balanced_codebook(block, 2**m, seed, max_attempts=max_attempts)
        except ConstructionFailed as exc:
            last = exc
            m -= 1
    raise last


def build_separated_set(
    L: float,
    r: float,
    k: int,
    n: int,
    R: float,
    seed: int,
    *,
    max_points: int | None = None,
    max_attempts: int = 500,
    lipschitz_samples: int = 2000,
) -> WellSeparatedSet:
    """Codebook -> path g -> prime alphabet -> RS tuples -> X, Z = G(X), all certified."""
    if R <= 0:
        raise ValueError("R must be positive")
    if n % k:
        raise ValueError(f"n={n} is not divisible by k={k}")
    block = n // k
    target = math.floor(L * r / R + 1e-9)
    if target < 2:
        raise ValueError(f"floor(Lr/R) = {target} < 2 gives a degenerate path")
    codebook = _codebook_for(block, target, seed, max_attempts)
    gmap = build_g(L, r, k, n, R, codebook)
    p = len(gmap.knots)

    q = find_prime_in(p // 2)
    if q < k:
        raise ConstructionFailed(
            f"prime alphabet {q} (from |P'|={p}) is smaller than k={k}", invariant="rs_alphabet"
        )
    total = q ** math.ceil(k / 2)
    count = total if max_points is None else min(total, max_points)
    rs = rs_subset(q, k, count, seed)

    X = gmap.knots[rs.tuples]
    Z = tensor_power_eval(gmap, k, X)

    norms = np.linalg.norm(Z, axis=1)
    max_norm = float(norms.max())
    if max_norm > R * (1 + 1e-12):
        raise ConstructionFailed(f"max norm {max_norm} exceeds R={R}", invariant="norm")
    if not np.allclose(np.abs(Z), R / math.sqrt(n), rtol=1e-12, atol=0):
        raise ConstructionFailed("image coordinates are not +-R/sqrt(n)", invariant="alphabet")
    if np.linalg.norm(X, axis=1).max() > r * (1 + 1e-12):
        raise ConstructionFailed("latent point outside the radius-r ball", invariant="latent_norm")
    if len(Z) >= 2:
        signs = np.sign(Z).astype(np.int8)
        min_dist = 2 * R / math.sqrt(n) * math.sqrt(sign_hamming_min(signs))
    else:
        min_dist = math.inf
    if min_dist < R / math.sqrt(6):
        raise ConstructionFailed(
            f"min pairwise distance {min_dist} < R/sqrt(6)", invariant="separation"
        )
    need = min((p / 2) ** (k / 2), count)
    if len(Z) < need:
        raise ConstructionFailed(f"|X|={len(Z)} < {need}", invariant="cardinality")

    wss = WellSeparatedSet(
        latent_points=X, image_points=Z, r=r, R=R, L=L, k=k, n=n, gmap=gmap,
        tuples=rs.tuples, path_points=p, alphabet_size=q,
        min_pairwise_distance=min_dist, max_norm=max_norm,
    )
    wss.lipschitz = lipschitz_estimate(
        wss.G, r, lipschitz_samples, seed, dim=k, pairs=_adjacent_knot_pairs(gmap, k)
    )
    return wss


def _adjacent_knot_pairs(gmap: PiecewiseLinearMap, k: int):
    kn = gmap.knots
    base = np.full(k, kn[0])
    pairs = []
    for a, b in zip(kn[:-1], kn[1:]):
        x, y = base.copy(), base.copy()
        x[0], y[0] = a, b
        pairs.append((x, y))
    return pairs
