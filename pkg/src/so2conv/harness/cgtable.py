"""Plain-text dump and reload of coupling tables.

Layout::

    cgtable basis=<real-so3|complex-su2> form=<full|compact> lmax=<L> blocks=<n>
    block <li> <lf> <lo> shape <a> <b> <c>      (full form)
    <one line per (m_i, m_f) with the 2 l_o + 1 values over m_o>
    compact <li> <lf> <lo> size <k>             (compact form)
    <one line with the k values over m>

Values use ``%.17g`` (exact for binary64) and negative zero is written as 0.
"""

from __future__ import annotations

import numpy as np

from so2conv.cg import COMPLEX, REAL, CGTable, CompactCG, compact_cg, complex_cg_table, real_cg_table


def _fmt(values) -> str:
    return " ".join("%.17g" % (float(v) + 0.0) for v in values)


def dump_table(lmax: int, basis: str = "real", form: str = "full") -> str:
    if basis not in ("real", "complex"):
        raise ValueError("basis must be 'real' or 'complex'")
    if form not in ("full", "compact"):
        raise ValueError("form must be 'full' or 'compact'")
    if form == "compact" and basis != "real":
        raise ValueError("the compact form is defined for the real basis only")
    table = real_cg_table(lmax) if basis == "real" else complex_cg_table(lmax)
    if form == "full":
        return render(table)
    return render({t: compact_cg(*t, table) for t in table.triples()}, lmax)


def render(obj, lmax: int | None = None) -> str:
    """Text of a :class:`CGTable` or of a dict of real :class:`CompactCG` keyed by triple.

    The ``(lmax, dict)`` pair returned by :func:`load_table` is accepted too.
    """
    if isinstance(obj, tuple):
        lmax, obj = obj
    if isinstance(obj, CGTable):
        lines = [f"cgtable basis={obj.basis} form=full lmax={obj.lmax} blocks={len(obj.blocks)}"]
        for (li, lf, lo), block in obj.blocks.items():
            lines.append(f"block {li} {lf} {lo} shape {' '.join(map(str, block.shape))}")
            lines.extend(_fmt(row) for row in block.reshape(-1, block.shape[2]))
    else:
        lines = [f"cgtable basis={REAL} form=compact lmax={lmax} blocks={len(obj)}"]
        for (li, lf, lo), c in obj.items():
            lines.append(f"compact {li} {lf} {lo} size {len(c.values)}")
            lines.append(_fmt(c.values))
    return "\n".join(lines) + "\n"


def load_table(text: str):
    """Inverse of :func:`render`: a :class:`CGTable`, or ``(lmax, dict of CompactCG)`` for the compact form."""
    lines = text.splitlines()
    head = dict(item.split("=", 1) for item in lines[0].split()[1:])
    if not lines[0].startswith("cgtable") or head.get("basis") not in (REAL, COMPLEX):
        raise ValueError("not a cgtable dump")
    lmax, form = int(head["lmax"]), head["form"]
    blocks = {}
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        key = tuple(int(v) for v in parts[1:4])
        if parts[0] == "block":
            shape = tuple(int(v) for v in parts[5:8])
            rows = lines[i + 1:i + 1 + shape[0] * shape[1]]
            data = np.array([[float(v) for v in r.split()] for r in rows]).reshape(shape)
            blocks[key] = data
            i += 1 + len(rows)
        elif parts[0] == "compact":
            blocks[key] = CompactCG(*key, np.array([float(v) for v in lines[i + 1].split()]))
            i += 2
        else:
            raise ValueError(f"line {i + 1}: unexpected {parts[0]!r}")
    if len(blocks) != int(head["blocks"]):
        raise ValueError("block count does not match the header")
    if form == "compact":
        return lmax, blocks
    return CGTable(lmax, blocks, head["basis"])
