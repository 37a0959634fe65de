"""Minimal XYZ reader and writer for finite clusters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()
ATOMIC_NUMBER = {s: i + 1 for i, s in enumerate(SYMBOLS)}


class XYZError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class XYZStructure:
    comment: str
    symbols: tuple
    positions: np.ndarray

    @property
    def num_atoms(self) -> int:
        return len(self.symbols)

    @property
    def atomic_numbers(self) -> np.ndarray:
        return np.array([ATOMIC_NUMBER[s] for s in self.symbols], dtype=np.int64)


def atomic_number(symbol: str) -> int:
    key = symbol.strip().capitalize()
    if key not in ATOMIC_NUMBER:
        raise KeyError(symbol)
    return ATOMIC_NUMBER[key]


def parse_xyz(text: str) -> XYZStructure:
    """Parse a single-frame XYZ document; errors carry 1-based line numbers."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise XYZError(1, "expected the atom count")
    try:
        n = int(lines[0].split()[0])
    except ValueError:
        raise XYZError(1, f"atom count {lines[0].strip()!r} is not an integer") from None
    if n < 1:
        raise XYZError(1, "atom count must be >= 1")
    if len(lines) < 2:
        raise XYZError(2, "missing comment line")
    body = lines[2:2 + n]
    if len(body) < n:
        raise XYZError(len(lines) + 1, f"expected {n} atom lines, found {len(body)}")
    for lineno, extra in enumerate(lines[2 + n:], start=3 + n):
        if extra.strip():
            raise XYZError(lineno, "unexpected content after the last atom")
    symbols, coords = [], []
    for lineno, line in enumerate(body, start=3):
        parts = line.split()
        if len(parts) < 4:
            raise XYZError(lineno, "expected 'symbol x y z'")
        try:
            z = atomic_number(parts[0])
        except KeyError:
            raise XYZError(lineno, f"unknown element {parts[0]!r}") from None
        try:
            xyz = [float(v) for v in parts[1:4]]
        except ValueError:
            raise XYZError(lineno, "coordinates must be numbers") from None
        if not np.all(np.isfinite(xyz)):
            raise XYZError(lineno, "coordinates must be finite")
        symbols.append(SYMBOLS[z - 1])
        coords.append(xyz)
    return XYZStructure(lines[1], tuple(symbols), np.array(coords))


def read_xyz(path) -> XYZStructure:
    with open(path) as fh:
        return parse_xyz(fh.read())


def format_xyz(structure: XYZStructure) -> str:
    rows = [str(structure.num_atoms), structure.comment]
    for s, p in zip(structure.symbols, structure.positions):
        rows.append(" ".join([s, *(repr(float(v)) for v in p)]))
    return "\n".join(rows) + "\n"
