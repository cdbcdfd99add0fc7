"""Generative-model compressed sensing: sparse ReLU generators, separated sets,
recovery solvers and the lower-bound protocol simulation."""

from .errors import ConstructionFailed, PeelFailure
from .relu_core import ActivationKind, AffineReluLayer, ReluNetwork, forward, layer_outputs, random_init
from .sparse_gen import SparseGeneratorNet, build_sparsity_net, encode_k_sparse, gadget_oracle

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "AffineReluLayer",
    "ConstructionFailed",
    "PeelFailure",
    "ReluNetwork",
    "SparseGeneratorNet",
    "build_sparsity_net",
    "encode_k_sparse",
    "forward",
    "gadget_oracle",
    "layer_outputs",
    "random_init",
]
