"""Forward-only eSCN message-passing model."""

from so2conv.escn.blocks import (
    aggregate,
    edge_embedding,
    message,
    pointwise_nonlinearity,
    radial_basis,
    rotated_nonlinearity_error,
    so2_block,
)
from so2conv.escn.config import ModelConfig, activate
from so2conv.escn.graph import AtomicGraph, build_graph, canonical_order
from so2conv.escn.model import Prediction, forward, predict
from so2conv.escn.weights import ModelWeights, parameter_shapes

__all__ = [
    "AtomicGraph", "ModelConfig", "ModelWeights", "Prediction", "activate", "aggregate",
    "build_graph", "canonical_order", "edge_embedding", "forward", "message",
    "parameter_shapes", "pointwise_nonlinearity", "predict", "radial_basis",
    "rotated_nonlinearity_error", "so2_block",
]
