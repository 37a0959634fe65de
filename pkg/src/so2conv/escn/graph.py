"""Neighbor graphs for finite atomic clusters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COINCIDENT_TOL = 1e-8


@dataclass(frozen=True)
class AtomicGraph:
    """Directed edges ``s -> t`` with displacement ``r_st = p_t - p_s`` (Angstrom).

    Edges are sorted by target, then by ``(distance, source)``.
    """

    positions: np.ndarray
    atomic_numbers: np.ndarray
    sources: np.ndarray
    targets: np.ndarray
    vectors: np.ndarray
    lengths: np.ndarray

    @property
    def num_atoms(self) -> int:
        return len(self.atomic_numbers)

    @property
    def num_edges(self) -> int:
        return len(self.sources)

    def directions(self) -> np.ndarray:
        return self.vectors / self.lengths[:, None]


def check_structure(positions, atomic_numbers) -> tuple[np.ndarray, np.ndarray]:
    pos = np.asarray(positions, dtype=float)
    z = np.asarray(atomic_numbers)
    if pos.ndim != 2 or pos.shape[1] != 3 or len(pos) < 1:
        raise ValueError(f"positions must have shape (n, 3) with n >= 1, got {pos.shape}")
    if z.shape != (len(pos),):
        raise ValueError("need one atomic number per atom")
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions must be finite")
    if not np.issubdtype(z.dtype, np.integer) or np.any(z < 1):
        raise ValueError("atomic numbers must be integers >= 1")
    return pos, z.astype(np.int64)


def build_graph(positions, atomic_numbers, cutoff: float, max_neighbors: int) -> AtomicGraph:
    """Each atom receives edges from its ``max_neighbors`` nearest atoms within ``cutoff``.

    Ties are broken by ``(distance, source index)``. Brute force, ``O(n^2)``.
    """
    pos, z = check_structure(positions, atomic_numbers)
    n = len(pos)
    disp = pos[None, :, :] - pos[:, None, :]  # disp[s, t] = p_t - p_s
    dist = np.linalg.norm(disp, axis=-1)
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] < COINCIDENT_TOL):
        s, t = np.argwhere((dist < COINCIDENT_TOL) & off)[0]
        raise ValueError(f"atoms {s} and {t} coincide")
    src, tgt = [], []
    for t in range(n):
        cand = np.flatnonzero((dist[:, t] <= cutoff) & (np.arange(n) != t))
        order = np.lexsort((cand, dist[cand, t]))
        chosen = cand[order[:max_neighbors]]
        src.extend(chosen)
        tgt.extend([t] * len(chosen))
    src = np.asarray(src, dtype=np.int64)
    tgt = np.asarray(tgt, dtype=np.int64)
    vec = disp[src, tgt] if len(src) else np.zeros((0, 3))
    lengths = dist[src, tgt] if len(src) else np.zeros(0)
    return AtomicGraph(pos, z, src, tgt, vec, lengths)


def canonical_order(positions) -> np.ndarray:
    """Permutation sorting atoms lexicographically by ``(x, y, z)``.

    Relabeling the atoms does not change the canonical sequence, which is
    what makes the forward pass permutation equivariant bit for bit.
    """
    pos = np.asarray(positions, dtype=float)
    return np.lexsort((pos[:, 2], pos[:, 1], pos[:, 0]))
