"""Real spherical harmonics, circular harmonics and quadrature grids on S^2.

Conventions
-----------
* Orthonormal real harmonics, no Condon-Shortley phase.
* The primary axis is +y: the colatitude ``theta`` is measured from +y and
  the longitude ``phi`` is the angle about y, with

  .. math:: (x, y, z) = (\\sin\\theta \\sin\\phi, \\cos\\theta, \\sin\\theta \\cos\\phi)

* ``Y_m^l = P_m^l(theta) sin(m phi)`` for ``m > 0`` and
  ``P_m^l(theta) cos(m phi)`` for ``m <= 0``.

Harmonics are evaluated directly from Cartesian components: the
``sin^m(theta) * trig(m phi)`` factor is the real/imaginary part of
``(z + i x)^m``, so nothing is divided by ``sin(theta)`` near the poles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import SphericalVoronoi

from so2conv.irreps import lmax_from_size, num_coeffs

UNIT_TOL = 1e-9
FOUR_PI = 4.0 * math.pi


def check_unit(dirs) -> np.ndarray:
    dirs = np.asarray(dirs, dtype=float)
    if dirs.shape[-1] != 3:
        raise ValueError(f"directions must have a trailing axis of 3, got {dirs.shape}")
    norms = np.linalg.norm(dirs, axis=-1)
    if not np.all(np.abs(norms - 1.0) < UNIT_TOL):
        raise ValueError("direction is not a unit vector")
    return dirs


def to_angles(dirs) -> tuple[np.ndarray, np.ndarray]:
    """Colatitude from +y in [0, pi] and longitude about y in [0, 2 pi)."""
    dirs = check_unit(dirs)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    theta = np.arctan2(np.hypot(x, z), y)
    phi = np.mod(np.arctan2(x, z), 2 * np.pi)
    return theta, phi


def from_angles(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sin(theta)
    return np.stack([s * np.sin(phi), np.cos(theta), s * np.cos(phi)], axis=-1)


def _reduced_legendre(lmax: int, cos_t: np.ndarray) -> np.ndarray:
    """Normalized ``P_m^l / sin^m(theta)`` for ``0 <= m <= l <= lmax``.

    Returns shape ``cos_t.shape + (lmax+1, lmax+1)`` indexed ``[..., l, m]``;
    entries with ``m > l`` are zero. The ``sqrt(2)`` of the ``m != 0`` real
    harmonics is folded in.
    """
    out = np.zeros(cos_t.shape + (lmax + 1, lmax + 1))
    diag = 1.0 / math.sqrt(FOUR_PI)
    for m in range(lmax + 1):
        if m > 0:
            diag *= math.sqrt((2 * m + 1) / (2 * m))
        out[..., m, m] = diag
        if m + 1 <= lmax:
            out[..., m + 1, m] = math.sqrt(2 * m + 3) * cos_t * diag
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            out[..., l, m] = a * (cos_t * out[..., l - 1, m] - b * out[..., l - 2, m])
    out[..., :, 1:] *= math.sqrt(2.0)
    return out


def assoc_legendre(l: int, m: int, theta: float) -> float:
    """Normalized associated Legendre factor ``P_m^l(theta)``.

    ``Y_{+-m}^l = P_m^l(theta) * trig(m phi)``, so ``P_0^0 = 1 / (2 sqrt(pi))``.
    """
    if m < 0 or m > l:
        raise ValueError(f"need 0 <= m <= l, got l={l}, m={m}")
    theta = float(theta)
    table = _reduced_legendre(l, np.asarray(math.cos(theta)))
    return float(table[l, m] * math.sin(theta) ** m)


def eval_real_sh(lmax: int, dirs) -> np.ndarray:
    """Real spherical harmonics up to ``lmax``.

    Parameters
    ----------
    lmax : int
        Degree bound.
    dirs : array_like, shape (..., 3)
        Unit vectors.

    Returns
    -------
    np.ndarray, shape (..., (lmax+1)**2)
    """
    dirs = check_unit(dirs)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    leg = _reduced_legendre(lmax, y)
    # (z + i x)^m = sin^m(theta) (cos(m phi) + i sin(m phi))
    w = z + 1j * x
    powers = np.ones(dirs.shape[:-1] + (lmax + 1,), dtype=complex)
    for m in range(1, lmax + 1):
        powers[..., m] = powers[..., m - 1] * w
    out = np.empty(dirs.shape[:-1] + (num_coeffs(lmax),))
    for l in range(lmax + 1):
        base = l * l + l
        out[..., base] = leg[..., l, 0]
        for m in range(1, l + 1):
            out[..., base + m] = leg[..., l, m] * powers[..., m].imag
            out[..., base - m] = leg[..., l, m] * powers[..., m].real
    return out


def eval_circular_harmonic(k: int, j: int, phi):
    """``sin(k phi)`` for ``j = 1`` and ``cos(k phi)`` for ``j = -1``."""
    if k < 0:
        raise ValueError("circular harmonic degree must be >= 0")
    if j == 1:
        return np.sin(k * np.asarray(phi))
    if j == -1:
        return np.cos(k * np.asarray(phi))
    raise ValueError("order j must be +1 or -1")


def sphere_function_eval(x, dirs) -> np.ndarray:
    """``F_x(dir) = sum_lm x_lm Y_lm(dir)`` per channel.

    ``x`` has shape ``((L+1)**2, C)``, giving ``dirs.shape[:-1] + (C,)``, or
    ``((L+1)**2,)``, giving ``dirs.shape[:-1]``.
    """
    x = np.asarray(getattr(x, "data", x), dtype=float)
    lmax = lmax_from_size(x.shape[0])
    return eval_real_sh(lmax, dirs) @ x


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Quadrature rule on the unit sphere.

    Product grids (``equiangular``, ``gauss-legendre``) are stored
    latitude-major: point ``i * n_phi + k`` sits at ``(theta[i], phi[k])``.
    """

    points: np.ndarray
    weights: np.ndarray
    kind: str
    shape: tuple[int, ...] = ()
    _sh: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - FOUR_PI) > 1e-9:
            raise ValueError(f"weights sum to {self.weights.sum()}, expected 4 pi")

    def __len__(self) -> int:
        return len(self.weights)

    def harmonics(self, lmax: int) -> np.ndarray:
        """``Y`` at every grid point, shape ``(N, (lmax+1)**2)``; cached."""
        if lmax not in self._sh:
            y = eval_real_sh(lmax, self.points)
            y.setflags(write=False)
            self._sh[lmax] = y
        return self._sh[lmax]


def fejer_weights(n: int) -> np.ndarray:
    """Fejer's first rule on ``theta_j = pi (j + 1/2) / n`` for the measure d(cos theta).

    Integrates polynomials in ``cos(theta)`` of degree ``< n`` exactly.
    """
    theta = np.pi * (np.arange(n) + 0.5) / n
    k = np.arange(1, n // 2 + 1)
    s = (np.cos(2 * np.outer(theta, k)) / (4 * k * k - 1)).sum(axis=1)
    return 2.0 / n * (1.0 - 2.0 * s)


def _product_grid(kind: str, theta: np.ndarray, wtheta: np.ndarray, n_phi: int) -> SphereGrid:
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    points = from_angles(tt, pp).reshape(-1, 3)
    weights = np.repeat(wtheta, n_phi) * (2 * np.pi / n_phi)
    return SphereGrid(points, weights, kind, (len(theta), n_phi))


def fibonacci_points(n: int) -> np.ndarray:
    """Spherical Fibonacci lattice with +y as the polar axis."""
    i = np.arange(n) + 0.5
    cos_t = 1.0 - 2.0 * i / n
    phi = np.mod(np.pi * (3.0 - math.sqrt(5.0)) * np.arange(n), 2 * np.pi)
    return from_angles(np.arccos(cos_t), phi)


def fibonacci_degree(n: int) -> int:
    """Largest ``L`` with ``(L+1)**2 <= n / 2``: the degree made exact by :func:`fibonacci_weights`."""
    return max(math.isqrt(n // 2) - 1, 0)


def fibonacci_weights(points: np.ndarray) -> np.ndarray:
    """Voronoi cell areas nudged to integrate every harmonic up to :func:`fibonacci_degree` exactly.

    The correction is the minimum-norm change to the areas that zeroes the
    low-degree moment residuals (raw areas leave ~1e-4 on the first moment).
    """
    areas = SphericalVoronoi(points).calculate_areas()
    lq = fibonacci_degree(len(points))
    a = eval_real_sh(lq, points).T
    target = np.zeros(a.shape[0])
    target[0] = math.sqrt(FOUR_PI)
    w = areas + a.T @ np.linalg.solve(a @ a.T, target - a @ areas)
    if np.any(w <= 0):
        raise ArithmeticError("moment-corrected fibonacci weights are not positive")
    return w


def make_grid(kind: str, resolution=None) -> SphereGrid:
    """Build a quadrature grid.

    ``resolution`` is ``n`` or ``(n_theta, n_phi)`` for the product grids and a
    point count for ``fibonacci`` (default 128). Fibonacci weights are
    moment-corrected Voronoi areas (:func:`fibonacci_weights`).
    """
    if kind == "fibonacci":
        n = 128 if resolution is None else int(resolution)
        if n < 4:
            raise ValueError("fibonacci grid needs at least 4 points")
        points = fibonacci_points(n)
        return SphereGrid(points, fibonacci_weights(points), kind, (n,))

    if resolution is None:
        raise ValueError(f"{kind} grid needs a resolution")
    if np.ndim(resolution) == 0:
        n_theta = n_phi = int(resolution)
    else:
        n_theta, n_phi = (int(r) for r in resolution)
    if n_theta < 1 or n_phi < 1:
        raise ValueError("grid resolution must be >= 1")

    if kind == "equiangular":
        theta = np.pi * (np.arange(n_theta) + 0.5) / n_theta
        return _product_grid(kind, theta, fejer_weights(n_theta), n_phi)
    if kind == "gauss-legendre":
        nodes, w = np.polynomial.legendre.leggauss(n_theta)
        return _product_grid(kind, np.arccos(nodes), w, n_phi)
    raise ValueError(f"unknown grid kind {kind!r}")


def sample(x, grid: SphereGrid) -> np.ndarray:
    """Values of ``F_x`` at every grid point, shape ``(N, C)`` (batched over leading axes of ``x``)."""
    x = np.asarray(getattr(x, "data", x), dtype=float)
    lmax = lmax_from_size(x.shape[-2] if x.ndim >= 2 else x.shape[0])
    return grid.harmonics(lmax) @ x


def project_to_coeffs(samples, grid: SphereGrid, lmax: int) -> np.ndarray:
    """Discrete ``int Y(r) f(r) dr``: ``c_lm = sum_p w_p Y_lm(p) f_p``.

    ``samples`` has shape ``(..., N, C)`` or ``(N,)``; the result has shape
    ``(..., (lmax+1)**2, C)`` (or ``((lmax+1)**2,)``).
    """
    samples = np.asarray(samples, dtype=float)
    axis = 0 if samples.ndim == 1 else -2
    if samples.shape[axis] != len(grid):
        raise ValueError(
            f"{samples.shape[axis]} samples for a grid of {len(grid)} points"
        )
    yw = (grid.harmonics(lmax) * grid.weights[:, None]).T
    return yw @ samples
