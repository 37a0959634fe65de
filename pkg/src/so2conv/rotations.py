"""3D rotations, edge alignment and real Wigner-D matrices.

``D(R)`` is defined by steerability of the harmonics, ``Y(R r) = D(R) Y(r)``,
which makes ``R -> D(R)`` a homomorphism and gives
``F_{D(R) x}(r) = F_x(R^-1 r)``.

A general rotation is factored as ``Ry(a) Rx(b) Ry(c)``. Rotations about the
primary axis are block sparse (2x2 cos/sin blocks pairing ``+-m``), and
``Rx(b) = S Ry(b) S`` for the fixed axis swap ``S: (x, y, z) -> (y, x, -z)``,
so ``D(R) = Dy(a) J Dy(b) J Dy(c)`` with ``J = D(S)`` computed once per degree
by quadrature and cached.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from so2conv.irreps import degree_slice, lmax_from_size, num_coeffs
from so2conv.sphere import eval_real_sh, make_grid

Y_AXIS = np.array([0.0, 1.0, 0.0])
SWAP_XY = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])


def check_rotation(R, tol: float = 1e-10) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    eye = np.eye(3)
    if np.abs(np.swapaxes(R, -1, -2) @ R - eye).max(initial=0.0) > tol:
        raise ValueError("matrix is not orthogonal")
    if np.abs(np.linalg.det(R) - 1.0).max(initial=0.0) > tol:
        raise ValueError("matrix is not a proper rotation")
    return R


def rotation_about_y(angle) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(np.shape(angle) + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


def rotation_about_x(angle) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(np.shape(angle) + (3, 3))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = c
    out[..., 1, 2] = -s
    out[..., 2, 1] = s
    out[..., 2, 2] = c
    return out


def random_rotation(rng: np.random.Generator, size=None) -> np.ndarray:
    """Haar-uniform rotations from normalized Gaussian quaternions."""
    shape = () if size is None else (size,) if np.ndim(size) == 0 else tuple(size)
    q = rng.standard_normal(shape + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    return Rotation.from_quat(q.reshape(-1, 4)).as_matrix().reshape(shape + (3, 3))


def _great_circle(d: np.ndarray) -> np.ndarray:
    """Rotation about ``d x y`` taking ``d`` to +y; requires ``d[..., 1] >= 0``."""
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    # v = d x y = (-z, 0, x); R = I + [v]x + [v]x^2 / (1 + y)
    k = np.zeros(d.shape[:-1] + (3, 3))
    k[..., 0, 1] = -x
    k[..., 1, 0] = x
    k[..., 1, 2] = z
    k[..., 2, 1] = -z
    return np.eye(3) + k + (k @ k) / (1.0 + y)[..., None, None]


def align_to_y(dirs) -> np.ndarray:
    """Rotation ``R`` with ``R @ r = (0, 1, 0)`` for unit ``r`` (batched).

    The roll about y is fixed by taking the great-circle rotation about
    ``r x y``. Every southern-hemisphere input is first flipped by a half turn
    about x, so ``-y`` maps to that half turn exactly and the great-circle
    formula never divides by a small ``1 + r.y``.
    """
    d = np.asarray(dirs, dtype=float)
    if abs(np.linalg.norm(d, axis=-1) - 1.0).max(initial=0.0) > 1e-9:
        raise ValueError("direction is not a unit vector")
    flip = d[..., 1] < 0
    half_turn = rotation_about_x(np.pi)
    half_turn[np.abs(half_turn) < 1e-15] = 0.0
    pre = np.where(flip[..., None, None], half_turn, np.eye(3))
    d2 = (pre @ d[..., None])[..., 0]
    return _great_circle(d2) @ pre


def _euler_yxy(R: np.ndarray) -> np.ndarray:
    """Angles ``(a, b, c)`` with ``R = Ry(a) Rx(b) Ry(c)``, shape ``(..., 3)``."""
    flat = R.reshape(-1, 3, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        angles = Rotation.from_matrix(flat).as_euler("YXY")
    return angles.reshape(R.shape[:-2] + (3,))


def y_rotation_block(l: int, angle) -> np.ndarray:
    """Degree-``l`` Wigner block of ``Ry(angle)``, shape ``angle.shape + (2l+1, 2l+1)``."""
    angle = np.asarray(angle, dtype=float)
    out = np.zeros(angle.shape + (2 * l + 1, 2 * l + 1))
    out[..., l, l] = 1.0
    for k in range(1, l + 1):
        c, s = np.cos(k * angle), np.sin(k * angle)
        p, n = l + k, l - k
        out[..., p, p] = c
        out[..., p, n] = s
        out[..., n, n] = c
        out[..., n, p] = -s
    return out


_swap_lock = threading.Lock()
_swap_blocks: list[np.ndarray] = []


def _compute_swap_blocks(lmax: int) -> list[np.ndarray]:
    grid = make_grid("gauss-legendre", (lmax + 1, 2 * lmax + 1))
    y = grid.harmonics(lmax)
    y_swapped = eval_real_sh(lmax, grid.points @ SWAP_XY.T)
    blocks = []
    for l in range(lmax + 1):
        sl = degree_slice(l)
        j = (y_swapped[:, sl] * grid.weights[:, None]).T @ y[:, sl]
        j[np.abs(j) < 1e-14] = 0.0
        if l == 0:
            j[:] = 1.0
        j.setflags(write=False)
        blocks.append(j)
    return blocks


def swap_blocks(lmax: int) -> list[np.ndarray]:
    """Cached ``J_l = D_l(S)`` for ``l <= lmax``; extended under a lock on demand."""
    global _swap_blocks
    if len(_swap_blocks) <= lmax:
        with _swap_lock:
            if len(_swap_blocks) <= lmax:
                _swap_blocks = _compute_swap_blocks(max(lmax, 2 * len(_swap_blocks)))
    return _swap_blocks[: lmax + 1]


@dataclass(frozen=True)
class WignerDBlocks:
    """One orthogonal ``(2l+1, 2l+1)`` block per degree, batched over leading axes."""

    blocks: tuple

    @property
    def lmax(self) -> int:
        return len(self.blocks) - 1

    @property
    def batch_shape(self) -> tuple:
        return self.blocks[0].shape[:-2]

    def transpose(self) -> "WignerDBlocks":
        return WignerDBlocks(tuple(np.swapaxes(b, -1, -2) for b in self.blocks))

    inverse = transpose

    def to_dense(self) -> np.ndarray:
        n = num_coeffs(self.lmax)
        out = np.zeros(self.batch_shape + (n, n))
        for l, b in enumerate(self.blocks):
            sl = degree_slice(l)
            out[..., sl, sl] = b
        return out

    def __getitem__(self, l: int) -> np.ndarray:
        return self.blocks[l]


def wigner_d(lmax: int, R) -> WignerDBlocks:
    """Real Wigner-D blocks of ``R`` (shape ``(..., 3, 3)``) for degrees ``0..lmax``."""
    R = np.asarray(R, dtype=float)
    angles = _euler_yxy(R)
    a, b, c = angles[..., 0], angles[..., 1], angles[..., 2]
    blocks = []
    for l, j in enumerate(swap_blocks(lmax)):
        blocks.append(
            y_rotation_block(l, a) @ j @ y_rotation_block(l, b) @ j @ y_rotation_block(l, c)
        )
    return WignerDBlocks(tuple(blocks))


def roll_d(lmax: int, angle) -> WignerDBlocks:
    """Wigner blocks of a roll ``Ry(angle)`` about the primary axis."""
    return WignerDBlocks(tuple(y_rotation_block(l, angle) for l in range(lmax + 1)))


def rotate_irreps(x, D: WignerDBlocks) -> np.ndarray:
    """Apply ``D`` degree by degree to coefficients of shape ``(..., (L+1)**2, C)``.

    Batch axes of ``x`` and ``D`` broadcast against each other.
    """
    x = np.asarray(getattr(x, "data", x), dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    lmax = lmax_from_size(x.shape[-2])
    if lmax != D.lmax:
        raise ValueError(f"coefficients have lmax {lmax}, rotation has lmax {D.lmax}")
    parts = [D.blocks[l] @ x[..., degree_slice(l), :] for l in range(lmax + 1)]
    out = np.concatenate(parts, axis=-2)
    return out[..., 0] if squeeze else out


def sh_l1_permutation() -> np.ndarray:
    """Signed permutation ``P`` with ``Y_1(r) = sqrt(3 / 4 pi) P r``, so ``D_1(R) = P R P^T``."""
    return np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
