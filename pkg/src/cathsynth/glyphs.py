"""Fallback radiograph marker glyphs.

Clinical text crops are not redistributable, so the default text templates
are blocky marker glyphs (side markers like "R"/"L" and a "PORTABLE"-style
technique label) built from a 5x7 bitmap font and upscaled with hard edges.
A user-supplied template directory overrides these.
"""

from __future__ import annotations

import numpy as np

_FONT = {
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "B": ["11110", "10001", "10001", "11110", "10001", "10001", "11110"],
    "E": ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
    "L": ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
    "O": ["01110", "10001", "10001", "10001", "10001", "10001", "01110"],
    "P": ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
    "R": ["11110", "10001", "10001", "11110", "10100", "10010", "10001"],
    "T": ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
}


def glyph(ch: str) -> np.ndarray:
    rows = _FONT[ch.upper()]
    return np.array([[float(c) for c in row] for row in rows])


def render_text(text: str, scale: int = 4, spacing: int = 1) -> np.ndarray:
    """Binary bitmap of ``text``, each glyph upscaled by ``scale``."""
    cells = [glyph(c) for c in text]
    h = cells[0].shape[0]
    gap = np.zeros((h, spacing))
    row = cells[0]
    for cell in cells[1:]:
        row = np.concatenate([row, gap, cell], axis=1)
    return np.kron(row, np.ones((scale, scale)))


def default_templates() -> list[np.ndarray]:
    """Shipped marker set: side markers plus a technique label."""
    return [
        render_text("R", scale=6),
        render_text("L", scale=6),
        render_text("PORTABLE", scale=3),
        render_text("AP", scale=4),
    ]
