"""Binary balanced codes, Reed-Solomon subsets and prime search."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionFailed
from .seeding import rng_for


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def find_prime_in(z: int) -> int:
    """Smallest prime p with z < p <= 2z (exists by Bertrand's postulate)."""
    if z < 1:
        raise ValueError("z must be >= 1")
    for p in range(z + 1, 2 * z + 1):
        if is_prime(p):
            return p
    raise AssertionError("unreachable: Bertrand's postulate")


@dataclass(frozen=True)
class BalancedCodebook:
    """Codewords of a binary linear code as points of {+-1/sqrt(n)}^n.

    ``signs[j]`` holds the +-1 pattern of the j-th codeword (bit 0 -> +1).
    Codewords are in message order, so ``signs[0]`` is all +1.
    """

    n: int
    signs: np.ndarray
    tau: float = 1 / 6

    @property
    def points(self) -> np.ndarray:
        return self.signs / np.sqrt(self.n)

    @property
    def size(self) -> int:
        return len(self.signs)

    def hamming_bounds(self) -> tuple[float, float]:
        return (0.5 - self.tau) * self.n, (0.5 + self.tau) * self.n

    def l2_bounds(self) -> tuple[float, float]:
        # differing coordinates contribute (2/sqrt(n))^2 each
        lo, hi = self.hamming_bounds()
        return 2 * math.sqrt(lo / self.n), 2 * math.sqrt(hi / self.n)

    def dumps(self) -> str:
        return json.dumps(
            {"n": self.n, "tau": self.tau, "points": self.signs.astype(int).tolist()}
        )

    @classmethod
    def loads(cls, text: str) -> "BalancedCodebook":
        doc = json.loads(text)
        signs = np.asarray(doc["points"], dtype=np.int8)
        if signs.ndim != 2 or signs.shape[1] != doc["n"] or not np.all(np.abs(signs) == 1):
            raise ValueError("codebook points must be +-1 sign vectors of length n")
        return cls(int(doc["n"]), signs, float(doc["tau"]))


def _all_messages(m: int) -> np.ndarray:
    idx = np.arange(2**m)
    # big-endian bits of each message index
    return ((idx[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)


def gen_balanced_codebook(
    n: int, min_size: int, seed: int, max_attempts: int = 500, tau: float = 1 / 6
) -> BalancedCodebook:
    """Random binary linear code whose nonzero weights all lie in [(1/2-tau)n, (1/2+tau)n].

    For a linear code the pairwise Hamming distances are exactly the nonzero
    codeword weights, so checking weights certifies every pair.  Returns
    ``2**ceil(log2(min_size))`` codewords.
    """
    if n < 6:
        raise ValueError("block length n must be >= 6")
    if min_size < 2:
        raise ValueError("min_size must be >= 2")
    m = max(1, math.ceil(math.log2(min_size)))
    lo, hi = (0.5 - tau) * n, (0.5 + tau) * n
    if m > n or n - m + 1 < lo:
        # Singleton bound: min distance <= n - m + 1
        raise ConstructionFailed(
            f"no binary linear [{n},{m}] code has all weights >= {lo:g}",
            invariant="hamming_lower_bound",
        )
    messages = _all_messages(m)[1:]
    rng = rng_for(seed)
    best = math.inf
    for _ in range(max_attempts):
        gen = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
        words = (messages.astype(np.int64) @ gen) % 2
        weights = words.sum(axis=1)
        balance = float(np.max(np.abs(weights - n / 2)) / n)
        best = min(best, balance)
        if weights.min() >= lo - 1e-9 and weights.max() <= hi + 1e-9:
            full = np.vstack([np.zeros((1, n), dtype=np.int64), words])
            return BalancedCodebook(n, (1 - 2 * full).astype(np.int8), tau)
    raise ConstructionFailed(
        f"no {tau:.4g}-balanced [{n},{m}] code found in {max_attempts} attempts "
        f"(best balance {best:.4g})",
        invariant="balance",
        best=best,
    )


def pairwise_hamming(points) -> tuple[int, int]:
    """Exact (min, max) Hamming distance over all pairs, by brute force."""
    pts = np.asarray(points)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need at least two points of equal length")
    lo, hi = pts.shape[1] + 1, -1
    for i in range(len(pts) - 1):
        d = np.count_nonzero(pts[i + 1 :] != pts[i], axis=1)
        lo, hi = min(lo, int(d.min())), max(hi, int(d.max()))
    return lo, hi


@dataclass(frozen=True)
class RsSubset:
    """Reed-Solomon codewords over the prime field F_q, evaluated at 0, 1, ..., k-1."""

    q: int
    k: int
    tuples: np.ndarray

    @property
    def alphabet(self) -> list[int]:
        return list(range(self.q))

    @property
    def message_length(self) -> int:
        return math.ceil(self.k / 2)

    @property
    def distance(self) -> int:
        # MDS: block length - message length + 1
        return self.k - self.message_length + 1


def rs_subset(q: int, k: int, count: int, seed: int) -> RsSubset:
    """``count`` distinct codewords of the RS code with message length ceil(k/2).

    When ``count`` equals the full message space, every message is enumerated
    in lexicographic order; otherwise messages are sampled per ``seed`` and kept
    in ascending order.
    """
    if not is_prime(q):
        raise ValueError(f"alphabet size {q} is not prime")
    if k < 1:
        raise ValueError("block length k must be >= 1")
    if q < k:
        raise ValueError(f"need q >= k distinct evaluation points, got q={q}, k={k}")
    mlen = math.ceil(k / 2)
    total = q**mlen
    if total >= 2**62:
        raise ValueError(f"message space q^{mlen} too large to index")
    if not 1 <= count <= total:
        raise ValueError(f"count must be in [1, {total}], got {count}")
    if count == total:
        msgs = np.arange(total)
    else:
        msgs = np.sort(rng_for(seed).choice(total, size=count, replace=False))
    # base-q digits, lowest-degree coefficient first
    coeffs = (msgs[:, None] // q ** np.arange(mlen)) % q
    vander = np.array([[pow(x, j, q) for j in range(mlen)] for x in range(k)], dtype=np.int64)
    tuples = (coeffs @ vander.T) % q
    return RsSubset(q, k, tuples.astype(np.int64))


def min_disagreement(tuples) -> int:
    t = np.asarray(tuples)
    if len(t) < 2:
        raise ValueError("need at least two tuples")
    return pairwise_hamming(t)[0]
