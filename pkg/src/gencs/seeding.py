"""Counter-based seed derivation so trial results do not depend on scheduling."""

import numpy as np


def rng_for(seed, *counters):
    """Generator keyed by (seed, *counters); same key gives the same stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, counters)]))


def uniform_ball(rng, dim, radius, size=None):
    """Exact uniform sample in the dim-ball: Gaussian direction, radius * U^(1/dim)."""
    shape = (dim,) if size is None else (size, dim)
    g = rng.standard_normal(shape)
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    u = rng.random(() if size is None else (size, 1))
    return g * (radius * u ** (1.0 / dim))


def uniform_sphere(rng, dim, size):
    g = rng.standard_normal((size, dim))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)
