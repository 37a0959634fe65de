"""Model hyperparameters and scalar activations."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit

ACTIVATIONS = ("silu", "identity", "relu")


def activate(name: str, v: np.ndarray) -> np.ndarray:
    if name == "silu":
        return v * expit(v)
    if name == "identity":
        return v
    if name == "relu":
        return np.maximum(v, 0.0)
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class ModelConfig:
    """Shapes and switches of the forward model.

    ``message_grid`` and ``aggregate_grid`` are ``(n_theta, n_phi)`` for the
    equiangular grids of the two point-wise maps; ``None`` picks
    ``(2L+1, 2M+1)`` and ``(2L+1, 2L+1)``. ``activation`` is used by every
    nonlinearity in the network, so ``"identity"`` makes the model affine.
    """

    lmax: int = 6
    mmax: int = 2
    channels: int = 128
    hidden: int = 256
    layers: int = 12
    cutoff: float = 12.0
    max_neighbors: int = 20
    edge_channels: int = 128
    max_atomic_number: int = 100
    rbf_spacing: float = 0.02
    rbf_sigma: float = 0.04
    message_grid: tuple | None = None
    aggregate_grid: tuple | None = None
    output_points: int = 128
    activation: str = "silu"
    aggregation: str = "sum"

    def __post_init__(self):
        if not 0 <= self.mmax <= self.lmax:
            raise ValueError("need 0 <= mmax <= lmax")
        for name in ("channels", "hidden", "layers", "max_neighbors", "edge_channels",
                     "max_atomic_number", "output_points"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.cutoff <= 0 or self.rbf_spacing <= 0 or self.rbf_sigma <= 0:
            raise ValueError("cutoff and radial basis parameters must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.aggregation not in ("sum", "mean"):
            raise ValueError("aggregation must be 'sum' or 'mean'")
        for name, default in (
            ("message_grid", (2 * self.lmax + 1, 2 * self.mmax + 1)),
            ("aggregate_grid", (2 * self.lmax + 1, 2 * self.lmax + 1)),
        ):
            grid = getattr(self, name)
            grid = default if grid is None else tuple(int(g) for g in grid)
            if len(grid) != 2 or min(grid) < 1:
                raise ValueError(f"{name} must be two positive sizes")
            object.__setattr__(self, name, grid)

    @property
    def num_rbf(self) -> int:
        return int(round(self.cutoff / self.rbf_spacing)) + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["message_grid"] = list(self.message_grid)
        d["aggregate_grid"] = list(self.aggregate_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)
