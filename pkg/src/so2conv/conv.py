"""Three equivalent implementations of the equivariant edge convolution.

``naive_conv``
    Literal Clebsch-Gordan tensor product between node coefficients and the
    edge-direction harmonics, summed over ``(m_i, m_f, m_o)``. Reference.
``aligned_conv``
    Rotates the node coefficients so the edge points along +y, keeps only the
    ``m_f = 0`` slice of each coupling block, rotates back.
``so2_conv``
    Same alignment, then one dense matrix multiply per order ``m`` over
    coefficients regrouped by order.

The filter harmonics are scaled to unit norm per degree,
``Yhat^l = sqrt(4 pi / (2l + 1)) Y^l``, so that ``Yhat^l(+y)`` is exactly the
Kronecker delta at ``m = 0``. All inputs broadcast over leading edge axes:
coefficients are ``(..., (L+1)**2, C)`` and directions ``(..., 3)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from so2conv.cg import HTensor, HTildeTensor, admissible_triples, real_cg_table, triangle
from so2conv.irreps import degree_slice, index, lmax_from_size, num_coeffs
from so2conv.rotations import (
    align_to_y,
    random_rotation,
    rotate_irreps,
    rotation_about_y,
    wigner_d,
)
from so2conv.sphere import eval_real_sh


@dataclass(frozen=True)
class ConvSpec:
    lmax: int
    mmax: int | None = None
    channels: int = 1
    triples: tuple = field(default=None)

    def __post_init__(self):
        if self.mmax is None:
            object.__setattr__(self, "mmax", self.lmax)
        if not 0 <= self.mmax <= self.lmax:
            raise ValueError("need 0 <= mmax <= lmax")
        if self.triples is None:
            object.__setattr__(self, "triples", tuple(admissible_triples(self.lmax)))
        for li, lf, lo in self.triples:
            if not triangle(li, lf, lo) or max(li, lo) > self.lmax:
                raise ValueError(f"inadmissible path ({li},{lf},{lo})")


def filter_harmonics(lmax: int, dirs) -> np.ndarray:
    """Unit-norm-per-degree harmonics used as the edge filter."""
    y = eval_real_sh(lmax, dirs)
    y[..., 0] = 1.0
    for l in range(1, lmax + 1):
        y[..., degree_slice(l)] *= math.sqrt(4 * math.pi / (2 * l + 1))
    return y


def _check(x, spec: ConvSpec) -> np.ndarray:
    x = np.asarray(getattr(x, "data", x), dtype=float)
    if x.shape[-2:] != (num_coeffs(spec.lmax), spec.channels):
        raise ValueError(
            f"coefficients {x.shape} do not match lmax={spec.lmax}, C={spec.channels}"
        )
    return x


def _alignment(dirs, roll):
    R = align_to_y(dirs)
    if roll is not None:
        R = rotation_about_y(roll) @ R
    return R


def naive_conv(x, dirs, h: HTensor, spec: ConvSpec) -> np.ndarray:
    """Full tensor product ``sum_{l_i,l_f} x^{l_i} (x)^{l_o} h Yhat^{l_f}(r)`` over ``spec.triples``."""
    x = _check(x, spec)
    dirs = np.asarray(dirs, dtype=float)
    lf_max = max(lf for _, lf, _ in spec.triples)
    table = real_cg_table(spec.lmax)
    y = filter_harmonics(lf_max, dirs)
    batch = np.broadcast_shapes(x.shape[:-2], dirs.shape[:-1])
    out = np.zeros(batch + x.shape[-2:])
    for li, lf, lo in spec.triples:
        cg = table[li, lf, lo]
        term = np.einsum(
            "...ic,ijk,...j->...kc",
            x[..., degree_slice(li), :], cg, y[..., degree_slice(lf)],
        )
        out[..., degree_slice(lo), :] += h.values[(li, lf, lo)] * term
    return out


def aligned_conv(x, dirs, h: HTensor, spec: ConvSpec, roll=None) -> np.ndarray:
    """Edge-aligned product: only the ``m_f = 0`` column of each coupling block is used."""
    x = _check(x, spec)
    D = wigner_d(spec.lmax, _alignment(dirs, roll))
    xt = rotate_irreps(x, D)
    table = real_cg_table(spec.lmax)
    w = np.zeros(xt.shape)
    for li, lf, lo in spec.triples:
        # Yhat^{lf}(+y) is the delta at m_f = 0
        slab = table[li, lf, lo][:, lf, :]
        w[..., degree_slice(lo), :] += h.values[(li, lf, lo)] * np.einsum(
            "ik,...ic->...kc", slab, xt[..., degree_slice(li), :]
        )
    return rotate_irreps(w, D.transpose())


@dataclass(frozen=True)
class SO2Weights:
    """Per-order weights ``y_{l, m, l'}`` of the SO(2) convolution.

    ``plus[m]`` and ``minus[m]`` have shape ``(C, L+1-m, L+1-m)`` indexed
    ``[c, l_o - m, l_i - m]``; ``minus[0]`` is unused. Order ``m > 0`` maps the
    pair ``(x_m, x_-m)`` through ``[[plus, -minus], [minus, plus]]``.
    """

    lmax: int
    mmax: int
    plus: tuple
    minus: tuple

    @property
    def channels(self) -> int:
        return self.plus[0].shape[0]

    @classmethod
    def from_htilde(cls, ht: HTildeTensor, mmax: int | None = None) -> "SO2Weights":
        """Weights realizing the aligned tensor product parametrized by ``h~``.

        With ``(c)_m`` taken from the antidiagonal ``C[(l_i,m),(l_f,0)->(l_o,-m)]``
        for ``m < 0``, the aligned product gives
        ``w_m = h~_m x_m + h~_-m x_-m``, so the lower-left weight is ``-h~_-m``.
        """
        lmax = ht.lmax
        mmax = lmax if mmax is None else mmax
        C = ht.channels
        plus, minus = [], []
        for m in range(mmax + 1):
            n = lmax + 1 - m
            p = np.zeros((C, n, n))
            q = np.zeros((C, n, n))
            for li in range(m, lmax + 1):
                for lo in range(m, lmax + 1):
                    vec = ht.values[(li, lo)]
                    mid = min(li, lo)
                    p[:, lo - m, li - m] = vec[mid + m]
                    q[:, lo - m, li - m] = -vec[mid - m]
            plus.append(p)
            minus.append(q)
        return cls(lmax, mmax, tuple(plus), tuple(minus))

    @classmethod
    def random(cls, lmax: int, mmax: int, channels: int, rng) -> "SO2Weights":
        shapes = [(channels, lmax + 1 - m, lmax + 1 - m) for m in range(mmax + 1)]
        return cls(
            lmax, mmax,
            tuple(rng.standard_normal(s) for s in shapes),
            tuple(rng.standard_normal(s) if m else np.zeros(s) for m, s in enumerate(shapes)),
        )


@lru_cache(maxsize=None)
def order_layout(lmax: int, mmax: int) -> tuple:
    """Row indices grouped by order: ``[(rows_m0,), (rows_+1, rows_-1), ...]`` with degree ascending."""
    groups = [(np.array([index(l, 0) for l in range(lmax + 1)]),)]
    for m in range(1, mmax + 1):
        groups.append((
            np.array([index(l, m) for l in range(m, lmax + 1)]),
            np.array([index(l, -m) for l in range(m, lmax + 1)]),
        ))
    return tuple(groups)


def so2_apply(xt: np.ndarray, weights: SO2Weights) -> np.ndarray:
    """SO(2) convolution in the aligned frame; orders above ``weights.mmax`` are dropped."""
    lmax, mmax = weights.lmax, weights.mmax
    out = np.zeros(xt.shape)
    layout = order_layout(lmax, mmax)
    (rows0,) = layout[0]
    out[..., rows0, :] = np.einsum("cij,...jc->...ic", weights.plus[0], xt[..., rows0, :])
    for m in range(1, mmax + 1):
        rp, rn = layout[m]
        p, q = weights.plus[m], weights.minus[m]
        # one dense product per order over the stacked (+m, -m) coefficients
        block = np.concatenate(
            [np.concatenate([p, -q], axis=2), np.concatenate([q, p], axis=2)], axis=1
        )
        stacked = xt[..., np.concatenate([rp, rn]), :]
        res = np.einsum("cij,...jc->...ic", block, stacked)
        n = len(rp)
        out[..., rp, :] = res[..., :n, :]
        out[..., rn, :] = res[..., n:, :]
    return out


def so2_conv(x, dirs, weights, spec: ConvSpec, roll=None) -> np.ndarray:
    """Align, apply the per-order SO(2) convolution, rotate back.

    ``weights`` is an :class:`SO2Weights` or an :class:`HTildeTensor`
    (converted with ``spec.mmax``). ``roll`` adds a rotation about y after
    the canonical alignment; the result does not depend on it.
    """
    x = _check(x, spec)
    if isinstance(weights, HTildeTensor):
        weights = SO2Weights.from_htilde(weights, spec.mmax)
    if weights.lmax != spec.lmax or weights.mmax != spec.mmax or weights.channels != spec.channels:
        raise ValueError("weights do not match the convolution spec")
    D = wigner_d(spec.lmax, _alignment(dirs, roll))
    xt = rotate_irreps(x, D)
    return rotate_irreps(so2_apply(xt, weights), D.transpose())


def so2_project(x) -> list:
    """Split aligned coefficients into SO(2) irreps.

    Returns one list per degree ``l``: ``[w_0, w_1, ..., w_l]`` with
    ``w_0 = x_0`` (shape ``(..., C)``) and ``w_k = (x_-k, x_k)`` (shape ``(..., 2, C)``).
    """
    x = np.asarray(getattr(x, "data", x), dtype=float)
    lmax = lmax_from_size(x.shape[-2])
    out = []
    for l in range(lmax + 1):
        parts = [x[..., index(l, 0), :]]
        for k in range(1, l + 1):
            parts.append(np.stack([x[..., index(l, -k), :], x[..., index(l, k), :]], axis=-2))
        out.append(parts)
    return out


def so2_unproject(parts: list) -> np.ndarray:
    lmax = len(parts) - 1
    w0 = parts[0][0]
    out = np.zeros(w0.shape[:-1] + (num_coeffs(lmax), w0.shape[-1]))
    for l, degree in enumerate(parts):
        out[..., index(l, 0), :] = degree[0]
        for k in range(1, l + 1):
            out[..., index(l, -k), :] = degree[k][..., 0, :]
            out[..., index(l, k), :] = degree[k][..., 1, :]
    return out


@dataclass
class CostReport:
    """Analytic operation counts for one edge, plus an optional measured wall time.

    ``multiplies``/``adds`` cover the per-channel work (contraction and, for
    the SO(2) path, the two rotations); ``setup_multiplies`` is per-edge work
    shared by all channels (filter harmonics or Wigner-D assembly).
    """

    path: str
    lmax: int
    mmax: int
    channels: int
    multiplies: int
    adds: int
    setup_multiplies: int
    peak_live: int
    wall_time: float | None = None
    edges: int = 0


def count_cost(path: str, lmax: int, mmax: int | None = None, channels: int = 1,
               edges: int = 0, seed: int = 0) -> CostReport:
    """Exact counts from each path's loop structure; times ``edges`` random edges when > 0."""
    L, C = lmax, channels
    M = L if mmax is None else mmax
    n = num_coeffs(L)
    if path == "naive":
        mul = add = 0
        table_size = 0
        for li, lf, lo in admissible_triples(L):
            terms = (2 * li + 1) * (2 * lf + 1) * (2 * lo + 1)
            # x * C * Y per term, h once per output row, then accumulate
            mul += 2 * terms + (2 * lo + 1)
            add += terms
            table_size += terms
        setup = num_coeffs(2 * L)
        mul, add = mul * C, add * C
        peak = table_size + 2 * n * C + num_coeffs(2 * L)
    elif path == "so2":
        rot = sum((2 * l + 1) ** 2 for l in range(L + 1))
        rot_add = sum((2 * l + 1) * 2 * l for l in range(L + 1))
        mul = 2 * rot + (L + 1) ** 2
        add = 2 * rot_add + (L + 1) * L
        weights = (L + 1) ** 2
        for m in range(1, M + 1):
            k = L + 1 - m
            mul += (2 * k) ** 2
            add += 2 * k * (2 * k - 1)
            weights += 2 * k * k
        # D = Dy J Dy J Dy: three sparse (2 per row) and two dense products per degree
        setup = sum(3 * 2 * (2 * l + 1) ** 2 + 2 * (2 * l + 1) ** 3 for l in range(L + 1))
        mul, add = mul * C, add * C
        peak = weights * C + 2 * n * C + sum((2 * l + 1) ** 2 for l in range(L + 1))
    else:
        raise ValueError(f"unknown path {path!r}")
    report = CostReport(path, L, M, C, mul, add, setup, peak)
    if edges > 0:
        report.wall_time = time_path(path, L, M, C, edges, seed)
        report.edges = edges
    return report


def time_path(path: str, lmax: int, mmax: int, channels: int, edges: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    spec = ConvSpec(lmax, mmax if path == "so2" else lmax, channels)
    x = rng.standard_normal((edges, num_coeffs(lmax), channels))
    dirs = rng.standard_normal((edges, 3))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    if path == "naive":
        h = HTensor.random(lmax, channels, rng)
        real_cg_table(lmax)
        t0 = time.perf_counter()
        naive_conv(x, dirs, h, spec)
    else:
        w = SO2Weights.random(lmax, spec.mmax, channels, rng)
        wigner_d(lmax, random_rotation(rng))
        t0 = time.perf_counter()
        so2_conv(x, dirs, w, spec)
    return time.perf_counter() - t0


def loglog_slope(ls, values) -> float:
    return float(np.polyfit(np.log(ls), np.log(values), 1)[0])
