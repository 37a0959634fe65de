"""Coefficient layout shared by every module.

Coefficients are stored degree-major with the order ``m`` ascending from
``-l`` to ``l`` inside each degree, so degree ``l`` occupies rows
``l**2 .. (l+1)**2 - 1`` and ``(l, m)`` sits at row ``l*l + l + m``.
Channels are the trailing axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def num_coeffs(lmax: int) -> int:
    return (lmax + 1) ** 2


def lmax_from_size(n: int) -> int:
    lmax = math.isqrt(n) - 1
    if lmax < 0 or (lmax + 1) ** 2 != n:
        raise ValueError(f"{n} is not a valid coefficient count (L+1)^2")
    return lmax


def index(l: int, m: int) -> int:
    if abs(m) > l:
        raise ValueError(f"order {m} out of range for degree {l}")
    return l * l + l + m


def degree_slice(l: int) -> slice:
    return slice(l * l, (l + 1) ** 2)


def degrees(lmax: int) -> np.ndarray:
    """Degree of every row, shape ``((lmax+1)**2,)``."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(lmax + 1)])


def orders(lmax: int) -> np.ndarray:
    """Order of every row, shape ``((lmax+1)**2,)``."""
    return np.concatenate([np.arange(-l, l + 1) for l in range(lmax + 1)])


@dataclass(frozen=True)
class IrrepsCoeffs:
    """Dense block of spherical-harmonic coefficients for ``channels`` channels.

    ``data`` has shape ``((lmax+1)**2, channels)``.
    """

    lmax: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] != num_coeffs(self.lmax):
            raise ValueError(
                f"expected shape ({num_coeffs(self.lmax)}, C), got {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, lmax: int, channels: int) -> "IrrepsCoeffs":
        return cls(lmax, np.zeros((num_coeffs(lmax), channels)))

    @classmethod
    def from_array(cls, data) -> "IrrepsCoeffs":
        data = np.asarray(data, dtype=float)
        return cls(lmax_from_size(data.shape[0]), data)

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    def block(self, l: int) -> np.ndarray:
        return self.data[degree_slice(l)]

    def __len__(self) -> int:
        return self.data.size
