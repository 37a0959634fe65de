"""Building blocks of the message-passing layer.

Edge arrays carry the edge axis first: coefficients are ``(E, (L+1)**2, C)``,
per-edge embeddings ``(E, 2, M+1, H)`` with axis 1 selecting the source or
target SO(2) block.
"""

from __future__ import annotations

import numpy as np

from so2conv.conv import order_layout
from so2conv.escn.config import ModelConfig, activate
from so2conv.escn.weights import PATHS, ModelWeights
from so2conv.irreps import num_coeffs, orders
from so2conv.rotations import align_to_y, rotate_irreps, rotation_about_y, wigner_d
from so2conv.sphere import SphereGrid, make_grid, project_to_coeffs, sample


def linear(weights: ModelWeights, name: str, v: np.ndarray) -> np.ndarray:
    out = v @ weights[f"{name}.weight"].T
    bias = weights.arrays.get(f"{name}.bias")
    return out if bias is None else out + bias


def mlp3(weights: ModelWeights, name: str, v: np.ndarray, activation: str) -> np.ndarray:
    v = activate(activation, linear(weights, f"{name}.fc1", v))
    v = activate(activation, linear(weights, f"{name}.fc2", v))
    return linear(weights, f"{name}.fc3", v)


def radial_basis(lengths, config: ModelConfig) -> np.ndarray:
    """Gaussians centred every ``rbf_spacing`` from 0 to ``cutoff``, shape ``(E, num_rbf)``."""
    centers = config.rbf_spacing * np.arange(config.num_rbf)
    d = np.asarray(lengths, dtype=float)[..., None]
    return np.exp(-0.5 * ((d - centers) / config.rbf_sigma) ** 2)


def edge_embedding(lengths, z_source, z_target, weights: ModelWeights, layer: int) -> np.ndarray:
    """Invariant per-order embeddings of shape ``(E, 2, M+1, H)``."""
    config = weights.config
    z_source = np.asarray(z_source)
    z_target = np.asarray(z_target)
    zmax = config.max_atomic_number
    if np.any(z_source > zmax) or np.any(z_target > zmax) or np.any(z_source < 1) or np.any(z_target < 1):
        raise ValueError(f"atomic numbers must lie in [1, {zmax}]")
    v = linear(weights, "edge.rbf", radial_basis(lengths, config))
    v = v + weights["edge.source_embedding"][z_source] + weights["edge.target_embedding"][z_target]
    v = activate(config.activation, v)
    v = activate(config.activation, linear(weights, f"layer{layer}.edge.fc1", v))
    v = linear(weights, f"layer{layer}.edge.fc2", v)
    return v.reshape(-1, 2, config.mmax + 1, config.hidden)


def so2_block(xt: np.ndarray, emb: np.ndarray, weights: ModelWeights, prefix: str) -> np.ndarray:
    """Aligned-frame SO(2) convolution with a hidden bottleneck.

    For each order ``m <= M`` the ``(L+1-m) * C`` coefficients of ``+m`` and
    ``-m`` are projected to ``H`` hidden units with the paired weights
    ``[[A, -B], [B, A]]``, scaled by the edge embedding ``emb[:, m]`` and
    expanded back with ``[[U, -V], [V, U]]``. Orders above ``M`` are zero in
    the output.
    """
    config = weights.config
    L, M, C = config.lmax, config.mmax, config.channels
    if xt.shape[-2:] != (num_coeffs(L), C) or emb.shape[-2:] != (M + 1, config.hidden):
        raise ValueError("so2_block inputs do not match the model config")
    E = xt.shape[0]
    out = np.zeros(xt.shape)
    layout = order_layout(L, M)
    (rows0,) = layout[0]
    z = xt[:, rows0, :].reshape(E, -1) @ weights[f"{prefix}.m0.down_a"].T
    z = z * emb[:, 0]
    out[:, rows0, :] = (z @ weights[f"{prefix}.m0.up_a"].T).reshape(E, -1, C)
    for m in range(1, M + 1):
        rp, rn = layout[m]
        a, b = weights[f"{prefix}.m{m}.down_a"], weights[f"{prefix}.m{m}.down_b"]
        u, v = weights[f"{prefix}.m{m}.up_a"], weights[f"{prefix}.m{m}.up_b"]
        xp = xt[:, rp, :].reshape(E, -1)
        xn = xt[:, rn, :].reshape(E, -1)
        zp = (xp @ a.T - xn @ b.T) * emb[:, m]
        zn = (xp @ b.T + xn @ a.T) * emb[:, m]
        out[:, rp, :] = (zp @ u.T - zn @ v.T).reshape(E, -1, C)
        out[:, rn, :] = (zp @ v.T + zn @ u.T).reshape(E, -1, C)
    return out


def pointwise_nonlinearity(x: np.ndarray, grid: SphereGrid, activation: str,
                           mmax: int | None = None) -> np.ndarray:
    """Sample ``F_x`` on ``grid``, apply ``activation`` per point and channel, project back.

    Orders above ``mmax`` are dropped from the result (they are aliased on a
    grid built for ``|m| <= mmax``).
    """
    lmax = int(np.sqrt(x.shape[-2])) - 1
    out = project_to_coeffs(activate(activation, sample(x, grid)), grid, lmax)
    if mmax is not None and mmax < lmax:
        out[..., np.abs(orders(lmax)) > mmax, :] = 0.0
    return out


def message_grid(config: ModelConfig) -> SphereGrid:
    return _grid(config.message_grid)


def aggregate_grid(config: ModelConfig) -> SphereGrid:
    return _grid(config.aggregate_grid)


_grids: dict = {}


def _grid(shape: tuple) -> SphereGrid:
    if shape not in _grids:
        _grids[shape] = make_grid("equiangular", shape)
    return _grids[shape]


def message_preactivation(x_source, x_target, dirs, emb, weights: ModelWeights,
                          layer: int, roll=None):
    """Aligned sum of the two SO(2) blocks and the alignment rotation ``D``."""
    L = weights.config.lmax
    R = align_to_y(dirs)
    if roll is not None:
        R = rotation_about_y(roll) @ R
    D = wigner_d(L, R)
    y = so2_block(rotate_irreps(x_source, D), emb[:, 0], weights, f"layer{layer}.so2.{PATHS[0]}")
    y = y + so2_block(rotate_irreps(x_target, D), emb[:, 1], weights, f"layer{layer}.so2.{PATHS[1]}")
    return y, D


def message(x_source, x_target, dirs, emb, weights: ModelWeights, layer: int, roll=None) -> np.ndarray:
    """Messages ``a_st``: align, two SO(2) blocks, point-wise map on the message grid, rotate back."""
    config = weights.config
    y, D = message_preactivation(x_source, x_target, dirs, emb, weights, layer, roll)
    y = pointwise_nonlinearity(y, message_grid(config), config.activation, config.mmax)
    return rotate_irreps(y, D.transpose())


def aggregate(x: np.ndarray, messages: np.ndarray, targets: np.ndarray,
              weights: ModelWeights, layer: int, edge_ids=None) -> np.ndarray:
    """Residual update ``x + int Y P_agg(F_a, F_x)`` with ``a_t`` the sum (or mean) of messages.

    Messages are accumulated in ascending ``edge_ids`` (default: the given
    order), so the floating-point result does not depend on how the
    messages were shuffled.
    """
    config = weights.config
    if edge_ids is not None:
        order = np.argsort(edge_ids, kind="stable")
        messages, targets = messages[order], targets[order]
    a = np.zeros(x.shape)
    np.add.at(a, targets, messages)
    if config.aggregation == "mean":
        counts = np.bincount(targets, minlength=len(x)).astype(float)
        a /= np.maximum(counts, 1.0)[:, None, None]
    grid = aggregate_grid(config)
    joint = np.concatenate([sample(a, grid), sample(x, grid)], axis=-1)
    p = mlp3(weights, f"layer{layer}.agg", joint, config.activation)
    return x + project_to_coeffs(p, grid, config.lmax)


def rotated_nonlinearity_error(a: np.ndarray, grid: SphereGrid, activation: str,
                               rotations: np.ndarray) -> float:
    """Mean relative gap between ``NL(a)`` and ``D(R)^T NL(D(R) a)`` over ``rotations``.

    The gap is ``mean |.|`` over coefficients, channels and rotations divided
    by ``mean |NL(a)|``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    lmax = int(np.sqrt(a.shape[0])) - 1
    ref = pointwise_nonlinearity(a, grid, activation)
    D = wigner_d(lmax, rotations)
    rot = rotate_irreps(pointwise_nonlinearity(rotate_irreps(a, D), grid, activation), D.transpose())
    return float(np.abs(rot - ref).mean() / np.abs(ref).mean())
