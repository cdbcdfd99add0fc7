"""Simulation of the Augmented Indexing protocol built on function-sparse recovery.

Alice holds bits y in {0,1}^d, cut into t chunks of ``floor(log2 |Z|)``
bits.  Chunk j picks a codeword x_j of the separated set Z, and she sends the
b-bit rounded measurement ``A' x`` of ``x = sum_j D^j x_j``.  Bob knows bit
index i and every bit after it, so he can subtract the layers above the chunk
j holding bit i, rescale by D^-j, add smoothing noise, run the recovery
algorithm, and round to the nearest codeword.

Bits and chunks are 0-based here; layer numbers j run 1..t as in
``x = D^1 x_1 + ... + D^t x_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PeelFailure
from .seeding import rng_for, uniform_ball
from .sensing import discretization_witness, recover_over_net, sample_orthonormal
from .separated_set import WellSeparatedSet, build_separated_set

RAW_ENTRY_BITS = 64


def weight_for(C: float) -> float:
    return 16 * math.sqrt(3) * (C + 1)


def working_measurements(n: int, k: int, L: float, r: float, delta: float) -> int:
    """4 k ceil(log2(Lr/delta)) rows, capped at n (orthonormal rows need m <= n)."""
    return min(n, 4 * k * math.ceil(math.log2(L * r / delta)))


@dataclass(frozen=True)
class GameParams:
    n: int = 64
    k: int = 4
    L: float = 64.0
    r: float = 1.0
    delta: float = 1.0
    C: float = 1.0
    m: int | None = None
    b: int = 16
    t: int | None = None
    smoothing: bool = True
    recovery_net: str = "grid"
    net_refine: int = 1
    jitter: float = 0.0

    def __post_init__(self):
        if self.recovery_net not in ("grid", "codewords"):
            raise ValueError("recovery_net must be 'grid' or 'codewords'")
        if self.delta > self.L * self.r / 4:
            raise ValueError("delta must be <= Lr/4")

    @property
    def R(self) -> float:
        return math.sqrt(self.L * self.r * self.delta)

    @property
    def chunks(self) -> int:
        return self.t if self.t is not None else math.ceil(math.log2(self.n))

    @property
    def measurements(self) -> int:
        if self.m is not None:
            return self.m
        return working_measurements(self.n, self.k, self.L, self.r, self.delta)


@dataclass
class GameInstance:
    """One input pair: Alice's bits ``y`` and Bob's index ``i`` (0-based)."""

    wss: WellSeparatedSet
    y: np.ndarray
    i: int
    C: float
    t: int

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int8)
        if len(self.y) != self.d:
            raise ValueError(f"need {self.d} bits, got {len(self.y)}")
        if not 0 <= self.i < self.d:
            raise ValueError(f"index {self.i} outside [0, {self.d})")

    @property
    def D(self) -> float:
        return weight_for(self.C)

    @property
    def R(self) -> float:
        return self.wss.R

    @property
    def chunk_bits(self) -> int:
        return int(math.floor(math.log2(len(self.wss))))

    @property
    def d(self) -> int:
        return self.chunk_bits * self.t

    @property
    def suffix(self) -> np.ndarray:
        return self.y[self.i + 1 :]

    @property
    def layer(self) -> int:
        """Layer j (1-based) whose chunk contains bit i."""
        return self.i // self.chunk_bits + 1

    def codebook(self) -> np.ndarray:
        """The codewords chunk indices can address, in stored order."""
        return self.wss.image_points[: 2**self.chunk_bits]


def chunk_index(bits) -> int:
    # big-endian
    return int("".join(str(int(b)) for b in bits), 2) if len(bits) else 0


def index_bits(index: int, width: int) -> np.ndarray:
    return np.array([(index >> (width - 1 - p)) & 1 for p in range(width)], dtype=np.int8)


def layer_indices(inst: GameInstance) -> list[int]:
    cb = inst.chunk_bits
    return [chunk_index(inst.y[j * cb : (j + 1) * cb]) for j in range(inst.t)]


def layered_sum(Z: np.ndarray, indices, D: float, start: int = 1) -> np.ndarray:
    """sum_l D^l Z[indices[l - start]] for layers l = start, start+1, ..."""
    x = np.zeros(Z.shape[1])
    for off, idx in enumerate(indices):
        x += D ** (start + off) * Z[idx]
    return x


def alice_encode(inst: GameInstance, A_rounded: np.ndarray, jitter: float = 0.0, rng=None):
    """x = sum_j D^j x_j with x_j indexed by chunk j; message is A' x."""
    Z = inst.codebook()
    idx = layer_indices(inst)
    if max(idx) >= len(inst.wss):
        raise ValueError("chunk index out of range of Z")
    x = layered_sum(Z, idx, inst.D)
    if jitter > 0:
        x = x + jitter * rng.standard_normal(x.shape)
    return x, A_rounded @ x


@dataclass
class BobResult:
    bit: int
    layer: int
    estimate: np.ndarray
    decoded_index: int
    measured: np.ndarray
    u: np.ndarray
    u_norm_ok: bool


def bob_decode(
    inst: GameInstance,
    message: np.ndarray,
    A: np.ndarray,
    A_rounded: np.ndarray,
    rng_seed,
    *,
    smoothing: bool = True,
    net: np.ndarray | None = None,
    A_net: np.ndarray | None = None,
) -> BobResult:
    """Bob's side; uses only i, the suffix bits, both matrices and the set.

    ``net`` is the finite set the recovery algorithm searches (defaults to Z);
    ``A_net`` may carry its precomputed image under A.
    """
    Z = inst.codebook()
    cb, j, D, R = inst.chunk_bits, inst.layer, inst.D, inst.R
    n = Z.shape[1]
    # layers above j are fully determined by the suffix
    known = [chunk_index(inst.y[l * cb : (l + 1) * cb]) for l in range(j, inst.t)]
    z = layered_sum(Z, known, D, start=j + 1)
    Aw = (message - A_rounded @ z) / D**j

    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    radius = R / D**j
    u = uniform_ball(rng, n, radius) if smoothing else np.zeros(n)
    measured = Aw - A @ u

    search = Z if net is None else net
    w_hat = search[recover_over_net(A, measured, search, A_net)]
    decoded = int(np.argmin(np.linalg.norm(Z - w_hat, axis=1)))
    bit = int(index_bits(decoded, cb)[inst.i - (j - 1) * cb])
    u_ok = bool(np.linalg.norm(u) <= radius * (1 - 1 / n**2))
    return BobResult(bit, j, w_hat, decoded, measured, u, u_ok)


@dataclass
class PeelResult:
    indices: list[int]
    log: list[dict] = field(default_factory=list)

    @property
    def failed_layers(self) -> list[int]:
        return [e["layer"] for e in self.log if not e["ok"]]


def peel_decode(Ax, A, Z, D: float, t: int, *, strict: bool = True, corrupt: dict | None = None) -> PeelResult:
    """Recover x_t, ..., x_1 from A(sum_l D^l x_l) top layer first.

    A layer is flagged when its best match is farther than R/(2 sqrt 6) in
    measurement space.  ``corrupt`` maps layer -> forced codeword index (fault
    injection).  Returns indices ordered [x_t, ..., x_1].
    """
    Z = np.asarray(Z, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    AZ = Z @ A.T
    R = float(np.linalg.norm(Z, axis=1).max())
    threshold = R / (2 * math.sqrt(6))
    resid = np.array(Ax, dtype=np.float64)
    out = PeelResult([])
    for layer in range(t, 0, -1):
        target = resid / D**layer
        idx = recover_over_net(A, target, Z, AZ)
        dist = float(np.linalg.norm(AZ[idx] - target))
        ok = dist <= threshold
        if corrupt and layer in corrupt:
            idx = int(corrupt[layer])
        out.log.append({"layer": layer, "index": idx, "distance": dist, "ok": ok})
        if not ok and strict:
            raise PeelFailure(f"layer {layer}: nearest codeword at {dist:.4g} > {threshold:.4g}", layer=layer)
        out.indices.append(idx)
        resid = resid - D**layer * AZ[idx]
    return out


@dataclass
class GameTranscript:
    trial: int
    i: int
    layer: int
    message: np.ndarray
    bits_sent: int
    bits_analytic: int
    recovered_bit: int
    success: bool
    codeword_correct: bool
    margin: float
    u_norm_ok: bool
    w_norm: float
    witness_gap: float


def analytic_entry_bits(A_rounded: np.ndarray, x: np.ndarray, b: int) -> int:
    """Sign + integer bits of max |<a', x>| + b fractional bits."""
    bound = np.abs(A_rounded).sum(axis=1).max() * np.abs(x).max()
    return 1 + max(0, math.ceil(math.log2(bound))) + b if bound > 0 else 1 + b


def recovery_grid(params: GameParams, wss: WellSeparatedSet) -> np.ndarray:
    """Images of the latent grid the recovery algorithm searches exhaustively."""
    return wss.G(wss.knot_grid(params.net_refine))


def build_game_set(params: GameParams, seed: int) -> WellSeparatedSet:
    return build_separated_set(params.L, params.r, params.k, params.n, params.R, seed)


def play(params: GameParams, wss: WellSeparatedSet, trial: int, seed: int, net=None) -> GameTranscript:
    """Run one trial; all randomness is keyed on (seed, trial)."""
    t = params.chunks
    cb = int(math.floor(math.log2(len(wss))))
    d = cb * t
    inputs = rng_for(seed, trial, 0)
    y = inputs.integers(0, 2, size=d)
    i = int(inputs.integers(d))
    inst = GameInstance(wss, y, i, params.C, t)

    # common random string: the measurement matrix
    ens = sample_orthonormal(params.measurements, params.n, int(rng_for(seed, trial, 1).integers(2**63))).rounded(params.b)
    A, Ar = ens.A, ens.A_rounded
    x, message = alice_encode(inst, Ar, params.jitter, rng_for(seed, trial, 3))

    if params.recovery_net == "grid":
        net = net if net is not None else recovery_grid(params, wss)
    else:
        net = inst.codebook()
    bob = bob_decode(inst, message, A, Ar, rng_for(seed, trial, 2), smoothing=params.smoothing,
                     net=net, A_net=net @ A.T)

    # simulator-side bookkeeping (uses Alice's secret)
    j, D = inst.layer, inst.D
    idx = layer_indices(inst)
    Z = inst.codebook()
    w = layered_sum(Z, idx[:j], D) / D**j
    s = A.T @ ((A - Ar) @ w)
    gap = float(np.linalg.norm(bob.measured - A @ (w - s - bob.u)))
    if params.jitter == 0:
        discretization_witness(A, Ar, w)
    truth = Z[idx[j - 1]]
    margin = wss.R / (2 * math.sqrt(6)) - float(np.linalg.norm(bob.estimate - truth))

    entry = analytic_entry_bits(Ar, x, params.b)
    return GameTranscript(
        trial=trial, i=i, layer=j, message=message,
        bits_sent=params.measurements * RAW_ENTRY_BITS,
        bits_analytic=params.measurements * entry,
        recovered_bit=bob.bit, success=bob.bit == int(y[i]),
        codeword_correct=bob.decoded_index == idx[j - 1],
        margin=margin, u_norm_ok=bob.u_norm_ok,
        w_norm=float(np.linalg.norm(w)), witness_gap=gap,
    )


def run_game_trials(params: GameParams, trials: int, seed: int, wss: WellSeparatedSet | None = None):
    """Play ``trials`` independent rounds; returns (summary dict, transcripts)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    wss = wss if wss is not None else build_game_set(params, seed)
    net = recovery_grid(params, wss) if params.recovery_net == "grid" else None
    rows = [play(params, wss, trial, seed, net) for trial in range(trials)]
    D = weight_for(params.C)
    summary = {
        "success_rate": float(np.mean([r.success for r in rows])),
        "codeword_rate": float(np.mean([r.codeword_correct for r in rows])),
        "bits_sent": rows[0].bits_sent,
        "bits_analytic_max": max(r.bits_analytic for r in rows),
        "d": int(math.floor(math.log2(len(wss)))) * params.chunks,
        "m": params.measurements,
        "u_norm_ok_rate": float(np.mean([r.u_norm_ok for r in rows])),
        "max_w_norm": max(r.w_norm for r in rows),
        "w_norm_bound": wss.R * D / (D - 1),
        "max_witness_gap": max(r.witness_gap for r in rows),
    }
    return summary, rows
