"""SVG rendering of a region grid: one rect per cell, D0 overlay, level-set contour and equilibria."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..regions import RegionGrid

PALETTE = ("#4c72b0", "#c8c8c8", "#dd8452")  # Omega, Omega0, Omega1
D0_FILL = "#2ca02c"
WIDTH = 600


def _f(v: float) -> str:
    return f"{v:.12g}"


def regions_svg(grid: RegionGrid, contours: Sequence[np.ndarray] = (), equilibria: Sequence = ()) -> str:
    x0, x1, y0, y1 = grid.bbox
    scale = WIDTH / (x1 - x0)
    height = (y1 - y0) * scale
    dx, dy = grid.cell_size
    w, h = dx * scale, dy * scale

    def px(x, y):
        return (x - x0) * scale, (y1 - y) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(WIDTH)}" height="{_f(height)}" '
           f'viewBox="0 0 {_f(WIDTH)} {_f(height)}">',
           '<g id="regions" shape-rendering="crispEdges">']
    for j in range(grid.ny):
        for i in range(grid.nx):
            cx, cy = px(x0 + i * dx, y0 + (j + 1) * dy)
            out.append(f'<rect x="{_f(cx)}" y="{_f(cy)}" width="{_f(w)}" height="{_f(h)}" '
                       f'fill="{PALETTE[int(grid.codes[j, i])]}"/>')
    out.append("</g>")
    out.append(f'<g id="d0" fill="{D0_FILL}" fill-opacity="0.45" shape-rendering="crispEdges">')
    for j, i in np.argwhere(grid.in_D0):
        cx, cy = px(x0 + i * dx, y0 + (j + 1) * dy)
        out.append(f'<rect x="{_f(cx)}" y="{_f(cy)}" width="{_f(w)}" height="{_f(h)}"/>')
    out.append("</g>")
    out.append('<g id="level-set" fill="none" stroke="#000000" stroke-width="1.5">')
    for c in contours:
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (px(x, y) for x, y in c))
        out.append(f'<polyline points="{pts}"/>')
    out.append("</g>")
    out.append('<g id="equilibria" stroke="#000000" fill="#ffffff">')
    for e in equilibria:
        loc = getattr(e, "location", e)
        cx, cy = px(*loc)
        out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="4"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
