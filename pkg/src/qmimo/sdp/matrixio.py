"""Plain-text matrix files for exchanging (Q, R, J) with external SDP tools.

Format, one or more sections per file::

    # free-form comment lines
    matrix <name> <rows> <cols>
    <re> <im> <re> <im> ...     (one line per row, row-major)

Numbers are written with 17 significant digits so a round trip is exact.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np

HEADER = "matrix"


def format_matrices(matrices: Mapping[str, np.ndarray], comments: tuple[str, ...] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    for name, M in matrices.items():
        M = np.asarray(M, dtype=complex)
        if M.ndim != 2 or not name or any(ch.isspace() for ch in name):
            raise ValueError(f"cannot write {name!r} with shape {M.shape}")
        lines.append(f"{HEADER} {name} {M.shape[0]} {M.shape[1]}")
        for row in M:
            lines.append(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def parse_matrices(text: str) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    i = 0
    while i < len(rows):
        head = rows[i].split()
        if len(head) != 4 or head[0] != HEADER:
            raise ValueError(f"expected '{HEADER} <name> <rows> <cols>', got {rows[i]!r}")
        name, r, c = head[1], int(head[2]), int(head[3])
        vals = []
        for line in rows[i + 1:i + 1 + r]:
            nums = np.array(line.split(), dtype=float)
            if nums.size != 2 * c:
                raise ValueError(f"matrix {name}: row with {nums.size} numbers, expected {2 * c}")
            vals.append(nums[0::2] + 1j * nums[1::2])
        if len(vals) != r:
            raise ValueError(f"matrix {name} truncated: {len(vals)} of {r} rows")
        out[name] = np.array(vals).reshape(r, c)
        i += 1 + r
    return out


def dump_matrices(path: str | Path, matrices: Mapping[str, np.ndarray], comments: tuple[str, ...] = ()) -> Path:
    path = Path(path)
    path.write_text(format_matrices(matrices, comments))
    return path


def load_matrices(path: str | Path) -> dict[str, np.ndarray]:
    return parse_matrices(Path(path).read_text())
