"""Clebsch-Gordan coefficients and the edge-aligned reparametrization.

Complex (SU(2)) coefficients come from the Racah sum evaluated in exact
rational arithmetic. Real coefficients are obtained by conjugating each
complex block with the change of basis between complex harmonics and the
real harmonics of :mod:`so2conv.sphere`; the result intertwines the real
Wigner-D matrices of :mod:`so2conv.rotations`.

Tables are indexed ``[m_i + l_i, m_f + l_f, m_o + l_o]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

COMPLEX = "complex-su2"
REAL = "real-so3"


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def triangle(l1: int, l2: int, l3: int) -> bool:
    return abs(l1 - l3) <= l2 <= l1 + l3


def su2_cg(li: int, mi: int, lf: int, mf: int, lo: int, mo: int) -> float:
    """``<l_i m_i; l_f m_f | l_o m_o>`` in the Condon-Shortley convention.

    Zero outside the triangle rule or when ``m_o != m_i + m_f``.
    """
    if abs(mi) > li or abs(mf) > lf or abs(mo) > lo:
        raise ValueError("order out of range")
    if mo != mi + mf or not triangle(li, lf, lo):
        return 0.0
    num = Fraction(
        (2 * lo + 1) * _fact(lo + li - lf) * _fact(lo - li + lf) * _fact(li + lf - lo),
        _fact(li + lf + lo + 1),
    )
    num *= (
        _fact(lo + mo) * _fact(lo - mo) * _fact(li - mi)
        * _fact(li + mi) * _fact(lf - mf) * _fact(lf + mf)
    )
    kmin = max(0, lf - lo - mi, li - lo + mf)
    kmax = min(li + lf - lo, li - mi, lf + mf)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            _fact(k) * _fact(li + lf - lo - k) * _fact(li - mi - k)
            * _fact(lf + mf - k) * _fact(lo - lf + mi + k) * _fact(lo - li - mf + k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    return math.copysign(math.sqrt(total * total * num), total)


@lru_cache(maxsize=None)
def _complex_block(li: int, lf: int, lo: int) -> np.ndarray:
    out = np.zeros((2 * li + 1, 2 * lf + 1, 2 * lo + 1))
    for mi in range(-li, li + 1):
        for mf in range(-lf, lf + 1):
            mo = mi + mf
            if abs(mo) <= lo:
                out[mi + li, mf + lf, mo + lo] = su2_cg(li, mi, lf, mf, lo, mo)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def real_to_complex(l: int) -> np.ndarray:
    """Unitary ``A`` with ``Y_real = A @ Y_complex`` (complex harmonics with Condon-Shortley phase).

    ``Y_{-k} = (Y^{-k} + (-1)^k Y^k) / sqrt 2`` (cosine) and
    ``Y_{k} = i (Y^{-k} - (-1)^k Y^k) / sqrt 2`` (sine), scaled by ``(-i)^l``
    so that the real coupling blocks come out real.
    """
    a = np.zeros((2 * l + 1, 2 * l + 1), dtype=complex)
    a[l, l] = 1.0
    r = 1.0 / math.sqrt(2.0)
    for k in range(1, l + 1):
        sign = (-1) ** k
        a[l - k, l - k] = r
        a[l - k, l + k] = sign * r
        a[l + k, l - k] = 1j * r
        a[l + k, l + k] = -1j * sign * r
    return (-1j) ** l * a


@lru_cache(maxsize=None)
def _real_block(li: int, lf: int, lo: int) -> np.ndarray:
    c = _complex_block(li, lf, lo)
    # coefficients transform contragrediently to basis functions
    ai, af, ao = (real_to_complex(l) for l in (li, lf, lo))
    out = np.einsum("ai,bj,ck,ijk->abc", ai.conj(), af.conj(), ao, c, optimize=True)
    if np.abs(out.imag).max(initial=0.0) > 1e-10:
        raise ArithmeticError(f"real CG block ({li},{lf},{lo}) has an imaginary residue")
    out = out.real.copy()
    out[np.abs(out) < 1e-15] = 0.0
    out.setflags(write=False)
    return out


def admissible_triples(lmax: int, lf_max: int | None = None) -> list[tuple[int, int, int]]:
    """All ``(l_i, l_f, l_o)`` with ``l_i, l_o <= lmax`` and ``|l_i - l_o| <= l_f <= l_i + l_o``."""
    lf_max = 2 * lmax if lf_max is None else lf_max
    return [
        (li, lf, lo)
        for li in range(lmax + 1)
        for lo in range(lmax + 1)
        for lf in range(abs(li - lo), min(li + lo, lf_max) + 1)
    ]


@dataclass(frozen=True)
class CGTable:
    lmax: int
    blocks: dict
    basis: str

    def __getitem__(self, key: tuple[int, int, int]) -> np.ndarray:
        li, lf, lo = key
        if key in self.blocks:
            return self.blocks[key]
        return np.zeros((2 * li + 1, 2 * lf + 1, 2 * lo + 1))

    def __contains__(self, key) -> bool:
        return key in self.blocks

    def triples(self):
        return list(self.blocks)


@lru_cache(maxsize=None)
def complex_cg_table(lmax: int, lf_max: int | None = None) -> CGTable:
    blocks = {t: _complex_block(*t) for t in admissible_triples(lmax, lf_max)}
    return CGTable(lmax, blocks, COMPLEX)


@lru_cache(maxsize=None)
def real_cg_table(lmax: int, lf_max: int | None = None) -> CGTable:
    """Real-basis coupling blocks for every admissible triple with ``l_i, l_o <= lmax``.

    The filter degree runs up to ``lf_max`` (default ``2 * lmax``, the
    largest degree that couples).
    """
    blocks = {t: _real_block(*t) for t in admissible_triples(lmax, lf_max)}
    return CGTable(lmax, blocks, REAL)


@dataclass(frozen=True)
class CompactCG:
    """``(c_{l_i,l_f,l_o})_m`` for ``m`` in ``[-min(l_i,l_o), min(l_i,l_o)]``, stored at ``m + min``."""

    li: int
    lf: int
    lo: int
    values: np.ndarray

    @property
    def mmax(self) -> int:
        return min(self.li, self.lo)

    def __getitem__(self, m: int) -> float:
        return float(self.values[m + self.mmax])


def compact_cg(li: int, lf: int, lo: int, table: CGTable) -> CompactCG:
    """Diagonal ``C[(l_i,m),(l_f,0)->(l_o,m)]`` for ``m >= 0``, antidiagonal ``C[(l_i,m),(l_f,0)->(l_o,-m)]`` for ``m < 0``."""
    if table.basis != REAL:
        raise ValueError("compact form needs a real-basis table")
    if not triangle(li, lf, lo):
        raise ValueError(f"({li},{lf},{lo}) violates the triangle rule")
    return CompactCG(li, lf, lo, _compact_values(table[li, lf, lo], li, lf, lo))


def _compact_values(block: np.ndarray, li: int, lf: int, lo: int) -> np.ndarray:
    ms = np.arange(-min(li, lo), min(li, lo) + 1)
    return block[ms + li, lf, np.abs(ms) + lo]


@dataclass(frozen=True)
class HTensor:
    """Per-channel scalars ``h[l_i, l_f, l_o]``, each an array of shape ``(C,)``."""

    lmax: int
    values: dict

    @classmethod
    def random(cls, lmax: int, channels: int, rng: np.random.Generator) -> "HTensor":
        return cls(
            lmax,
            {t: rng.standard_normal(channels) for t in admissible_triples(lmax)},
        )

    @classmethod
    def zeros(cls, lmax: int, channels: int) -> "HTensor":
        return cls(lmax, {t: np.zeros(channels) for t in admissible_triples(lmax)})

    @property
    def channels(self) -> int:
        return len(next(iter(self.values.values())))

    def vector(self, li: int, lo: int) -> np.ndarray:
        """``h[l_i, l_f, l_o]`` stacked over ``l_f`` ascending, shape ``(2 min + 1, C)``."""
        lfs = range(abs(li - lo), li + lo + 1)
        return np.stack([self.values[(li, lf, lo)] for lf in lfs])


@dataclass(frozen=True)
class HTildeTensor:
    """Per-channel ``h~^{(l_i, l_o)}_m``, each pair an array of shape ``(2 min + 1, C)`` indexed ``m + min``."""

    lmax: int
    values: dict

    @classmethod
    def random(cls, lmax: int, channels: int, rng: np.random.Generator) -> "HTildeTensor":
        return cls(lmax, {
            (li, lo): rng.standard_normal((2 * min(li, lo) + 1, channels))
            for li in range(lmax + 1) for lo in range(lmax + 1)
        })

    @property
    def channels(self) -> int:
        return next(iter(self.values.values())).shape[1]


@lru_cache(maxsize=None)
def coupling_matrix(li: int, lo: int) -> np.ndarray:
    """Square map from ``h[l_i, :, l_o]`` (over ``l_f``) to ``h~^{(l_i,l_o)}`` (over ``m``)."""
    cols = [
        _compact_values(_real_block(li, lf, lo), li, lf, lo)
        for lf in range(abs(li - lo), li + lo + 1)
    ]
    mat = np.stack(cols, axis=1)
    mat.setflags(write=False)
    return mat


def h_to_htilde(h: HTensor, table: CGTable | None = None) -> HTildeTensor:
    """``h~^{(l_i,l_o)}_m = sum_{l_f} h[l_i,l_f,l_o] (c_{l_i,l_f,l_o})_m``."""
    if table is not None and table.basis != REAL:
        raise ValueError("reparametrization needs a real-basis table")
    out = {}
    for li in range(h.lmax + 1):
        for lo in range(h.lmax + 1):
            if table is None:
                mat = coupling_matrix(li, lo)
            else:
                mat = np.stack(
                    [compact_cg(li, lf, lo, table).values
                     for lf in range(abs(li - lo), li + lo + 1)],
                    axis=1,
                )
            out[(li, lo)] = mat @ h.vector(li, lo)
    return HTildeTensor(h.lmax, out)


def htilde_to_h(ht: HTildeTensor, table: CGTable | None = None) -> HTensor:
    """Inverse of :func:`h_to_htilde`, one square solve per ``(l_i, l_o)``."""
    if table is not None and table.basis != REAL:
        raise ValueError("reparametrization needs a real-basis table")
    out = {}
    for (li, lo), vec in ht.values.items():
        mat = coupling_matrix(li, lo)
        if np.linalg.cond(mat) > 1e12:
            raise ArithmeticError(f"coupling matrix ({li},{lo}) is singular")
        sol = np.linalg.solve(mat, vec)
        for k, lf in enumerate(range(abs(li - lo), li + lo + 1)):
            out[(li, lf, lo)] = sol[k]
    return HTensor(ht.lmax, out)
