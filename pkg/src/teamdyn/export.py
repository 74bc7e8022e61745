"""Record writers: CSV and JSON streams, and an SVG quiver plot for two-type fields.

Floats are written with ``repr`` so every value round-trips exactly; CSV uses
LF line endings.
"""

from __future__ import annotations

import csv
import io
import json
from typing import IO, Iterable, Sequence

from teamdyn.dynamics import CellClass, FieldGrid

FIELD_COLUMNS = ("n_a", "n_b", "gain_a", "gain_b", "class")
LATTICE = 10


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: Iterable[dict], columns: Sequence[str], out: IO[str]) -> int:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    n = 0
    for rec in records:
        writer.writerow([_cell(rec[c]) for c in columns])
        n += 1
    return n


def write_json(records: Iterable[dict], out: IO[str]) -> int:
    """Stream records as a JSON array, one object per line."""
    out.write("[")
    n = 0
    for rec in records:
        out.write(",\n" if n else "\n")
        out.write(json.dumps(rec, allow_nan=False))
        n += 1
    out.write("\n]\n" if n else "]\n")
    return n


def field_records(grid: FieldGrid) -> Iterable[dict]:
    for n_a, n_b, ga, gb, cls in grid.records():
        yield {"n_a": n_a, "n_b": n_b, "gain_a": ga, "gain_b": gb, "class": cls.value}


_DIRECTION = {
    CellClass.ADD_A: (1, 0),
    CellClass.ADD_B: (0, -1),
    CellClass.ADD_EITHER: (1, -1),
}


def render_field_svg(grid: FieldGrid) -> str:
    """One element of class ``cell`` per grid cell: an arrow, or a dot for STAY.

    ``n_a`` runs left to right and ``n_b`` bottom to top on a fixed lattice.
    """
    width = LATTICE * (grid.n_max_a + 1)
    height = LATTICE * (grid.n_max_b + 1)
    buf = io.StringIO()
    buf.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        "<defs><marker id=\"head\" viewBox=\"0 0 6 6\" refX=\"5\" refY=\"3\" "
        "markerWidth=\"3\" markerHeight=\"3\" orient=\"auto\">"
        "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#333\"/></marker></defs>\n"
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )
    half = LATTICE * 0.35
    for n_a, n_b, _, _, cls in grid.records():
        x = LATTICE * n_a
        y = height - LATTICE * n_b
        if cls is CellClass.STAY:
            buf.write(f'<circle class="cell stay" cx="{x}" cy="{y}" r="1.2" fill="#999"/>\n')
            continue
        dx, dy = _DIRECTION[cls]
        norm = (dx * dx + dy * dy) ** 0.5
        ex, ey = half * dx / norm, half * dy / norm
        buf.write(
            f'<line class="cell {cls.value.lower()}" x1="{x - ex:.2f}" y1="{y - ey:.2f}" '
            f'x2="{x + ex:.2f}" y2="{y + ey:.2f}" stroke="#333" stroke-width="0.8" '
            'marker-end="url(#head)"/>\n'
        )
    buf.write("</svg>\n")
    return buf.getvalue()
