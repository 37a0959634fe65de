"""Forward pass: energy and per-atom forces of a finite cluster."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from so2conv.escn.blocks import aggregate, edge_embedding, message, mlp3
from so2conv.escn.config import ModelConfig
from so2conv.escn.graph import AtomicGraph, build_graph, canonical_order, check_structure
from so2conv.escn.weights import ModelWeights
from so2conv.irreps import num_coeffs
from so2conv.sphere import make_grid, sample

_output_grids: dict = {}


def output_grid(config: ModelConfig):
    n = config.output_points
    if n not in _output_grids:
        _output_grids[n] = make_grid("fibonacci", n)
    return _output_grids[n]


@dataclass(frozen=True)
class Prediction:
    energy: float
    forces: np.ndarray
    embeddings: np.ndarray
    graph: AtomicGraph


def initial_embeddings(atomic_numbers, weights: ModelWeights) -> np.ndarray:
    """``x^(0)``: degree-0 coefficients from the atomic-number table, higher degrees zero."""
    config = weights.config
    z = np.asarray(atomic_numbers)
    if np.any(z > config.max_atomic_number):
        raise ValueError(f"atomic numbers must lie in [1, {config.max_atomic_number}]")
    x = np.zeros((len(z), num_coeffs(config.lmax), config.channels))
    x[:, 0, :] = weights["node_embedding"][z]
    return x


def output_heads(x: np.ndarray, weights: ModelWeights) -> tuple[float, np.ndarray]:
    """Energy ``sum_i int P_energy(F_i)`` and forces ``int r P_force(F_i)`` on the Fibonacci set."""
    config = weights.config
    grid = output_grid(config)
    f = sample(x, grid)
    e_atom = mlp3(weights, "energy", f, config.activation)[..., 0] @ grid.weights
    g = mlp3(weights, "force", f, config.activation)[..., 0]
    forces = (g * grid.weights) @ grid.points
    energy = 0.0
    for v in e_atom:
        energy += float(v)
    return energy, forces


def forward(graph: AtomicGraph, weights: ModelWeights) -> Prediction:
    """Run every layer on ``graph`` in its given atom and edge order."""
    config = weights.config
    x = initial_embeddings(graph.atomic_numbers, weights)
    src, tgt = graph.sources, graph.targets
    dirs = graph.directions()
    for k in range(config.layers):
        if graph.num_edges:
            emb = edge_embedding(
                graph.lengths, graph.atomic_numbers[src], graph.atomic_numbers[tgt], weights, k
            )
            msgs = message(x[src], x[tgt], dirs, emb, weights, k)
        else:
            msgs = np.zeros((0,) + x.shape[1:])
        x = aggregate(x, msgs, tgt, weights, k)
    energy, forces = output_heads(x, weights)
    return Prediction(energy, forces, x, graph)


def predict(positions, atomic_numbers, weights: ModelWeights) -> Prediction:
    """Energy and forces with atoms processed in canonical (lexicographic position) order.

    Results are returned in the caller's atom order. Because the computation
    itself never sees the caller's labels, relabeling the input permutes the
    forces and leaves the energy unchanged bit for bit.
    """
    pos, z = check_structure(positions, atomic_numbers)
    config = weights.config
    perm = canonical_order(pos)
    graph = build_graph(pos[perm], z[perm], config.cutoff, config.max_neighbors)
    out = forward(graph, weights)
    forces = np.empty_like(out.forces)
    forces[perm] = out.forces
    x = np.empty_like(out.embeddings)
    x[perm] = out.embeddings
    return Prediction(out.energy, forces, x, out.graph)
