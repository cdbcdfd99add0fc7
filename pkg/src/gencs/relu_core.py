"""Unbiased feedforward ReLU networks.

A network is a chain of weight matrices, each followed by one activation:
``positive`` keeps ``x * 1(x >= 0)``, ``negative`` keeps ``x * 1(x <= 0)`` and
``none`` is the identity.  There are no biases, so every network built here is
positively homogeneous.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .seeding import rng_for


class ActivationKind(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NONE = "none"

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self is ActivationKind.POSITIVE:
            return np.where(v >= 0, v, 0.0)
        if self is ActivationKind.NEGATIVE:
            return np.where(v <= 0, v, 0.0)
        return v

    def derivative(self, v: np.ndarray) -> np.ndarray:
        # kink at 0 gets derivative 0
        if self is ActivationKind.POSITIVE:
            return (v > 0).astype(float)
        if self is ActivationKind.NEGATIVE:
            return (v < 0).astype(float)
        return np.ones_like(v)


@dataclass(frozen=True)
class AffineReluLayer:
    weights: np.ndarray
    activation: ActivationKind = ActivationKind.POSITIVE

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError(f"weights must be a non-empty matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "activation", ActivationKind(self.activation))

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ReluNetwork:
    layers: tuple[AffineReluLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for t, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.out_dim != b.in_dim:
                raise ValueError(
                    f"layer {t} has out_dim {a.out_dim} but layer {t + 1} has in_dim {b.in_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def width(self) -> int:
        return max(layer.out_dim for layer in self.layers)

    def __call__(self, x):
        return forward(self, x)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "layers": [
                {
                    "rows": layer.out_dim,
                    "cols": layer.in_dim,
                    "activation": layer.activation.value,
                    "weights": layer.weights.ravel().tolist(),
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReluNetwork":
        layers = []
        for entry in doc["layers"]:
            w = np.asarray(entry["weights"], dtype=np.float64).reshape(entry["rows"], entry["cols"])
            layers.append(AffineReluLayer(w, ActivationKind(entry["activation"])))
        net = cls(tuple(layers))
        if net.input_dim != doc["input_dim"]:
            raise ValueError("input_dim does not match first layer")
        return net


def _check_input(net: ReluNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != net.input_dim:
        raise ValueError(f"expected input of length {net.input_dim}, got shape {x.shape}")
    return x


def forward(net: ReluNetwork, x) -> np.ndarray:
    """Evaluate the network.  ``x`` may be a vector or a batch of row vectors."""
    h = _check_input(net, x)
    for layer in net.layers:
        h = layer.activation.apply(h @ layer.weights.T)
    return h


def layer_outputs(net: ReluNetwork, x) -> list[np.ndarray]:
    """Outputs after each layer; the last entry equals ``forward(net, x)``."""
    h = _check_input(net, x)
    outs = []
    for layer in net.layers:
        h = layer.activation.apply(h @ layer.weights.T)
        outs.append(h)
    return outs


def random_init(depth: int, width: int, input_dim: int, seed: int) -> ReluNetwork:
    """Dense ReLU net with i.i.d. N(0, 2/width) weights (He initialization)."""
    if depth < 1 or width < 1 or input_dim < 1:
        raise ValueError("depth, width and input_dim must all be >= 1")
    rng = rng_for(seed)
    scale = np.sqrt(2.0 / width)
    layers = []
    in_dim = input_dim
    for _ in range(depth):
        layers.append(AffineReluLayer(rng.standard_normal((width, in_dim)) * scale))
        in_dim = width
    return ReluNetwork(tuple(layers))


def operator_norm(w: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral norm of ``w``."""
    w = np.asarray(w, dtype=np.float64)
    v = rng_for(seed).standard_normal(w.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        u = w.T @ (w @ v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = u / nu
        sigma = np.sqrt(nu)
    return float(sigma)


def dumps(net: ReluNetwork, **extra) -> str:
    doc = net.to_dict()
    doc.update(extra)
    return json.dumps(doc)


def loads(text: str) -> ReluNetwork:
    return ReluNetwork.from_dict(json.loads(text))
