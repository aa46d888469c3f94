"""SVG output: 2D scenes with roadmap and path; 3D grids as per-layer slice panels."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .geometry import OccupancyGrid, Workspace

SCALE = 20.0


def _svg(width: float, height: float, body: list[str], title: str = "") -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
            f'viewBox="0 0 {width:.1f} {height:.1f}">')
    parts = [head]
    if title:
        parts.append(f"<title>{escape(title)}</title>")
    parts += body
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_scene(ws: Workspace, roadmap=None, path=None, query=None, scale: float = SCALE) -> str:
    """Obstacles, roadmap edges/nodes (x, y of each config), path polyline, start/goal markers."""
    if ws.dim != 2:
        raise ValueError("scene rendering is 2D only; use render_slices for 3D grids")
    W, H = ws.extents[0] * scale, ws.extents[1] * scale

    def px(x, y):
        return x * scale, H - y * scale

    body = [f'<rect x="0" y="0" width="{W:.1f}" height="{H:.1f}" fill="white" stroke="black"/>']
    for b in ws.obstacles:
        x0, y1 = px(b.min[0], b.min[1])
        x1, y0 = px(b.max[0], b.max[1])
        body.append(f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" '
                    'fill="#444"/>')
    if roadmap is not None:
        nodes = roadmap.nodes
        for i, j, _ in roadmap.edges():
            a, b = px(*nodes[i][:2]), px(*nodes[j][:2])
            body.append(f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{b[0]:.2f}" y2="{b[1]:.2f}" '
                        'stroke="#9ab" stroke-width="0.6"/>')
        for q in nodes:
            c = px(*q[:2])
            body.append(f'<circle cx="{c[0]:.2f}" cy="{c[1]:.2f}" r="1.5" fill="#357"/>')
    if path is not None and len(path.configs):
        pts = " ".join("{:.2f},{:.2f}".format(*px(*q[:2])) for q in path.configs)
        body.append(f'<polyline points="{pts}" fill="none" stroke="#c22" stroke-width="2"/>')
    if query is not None:
        for q, color in ((query.start, "#2a2"), (query.goal, "#d80")):
            c = px(*np.asarray(q)[:2])
            body.append(f'<circle cx="{c[0]:.2f}" cy="{c[1]:.2f}" r="4" fill="{color}"/>')
    return _svg(W, H, body, f"{ws.wclass.value} seed {ws.seed}")


def render_slices(grid: OccupancyGrid, axis: int = 2, cell: float = 8.0, gap: float = 6.0) -> str:
    """One panel per layer along ``axis`` (0=x, 1=y, 2=z), occupied cells filled."""
    dims = tuple(grid.dims)
    if len(dims) == 2:
        dims = dims + (1,)
        axis = 2
    vol = grid.values.reshape(dims[::-1]).transpose(2, 1, 0)  # (x, y, z)
    vol = np.moveaxis(vol, axis, 0)
    layers, u, v = vol.shape
    pw, ph = u * cell, v * cell
    body = []
    for k in range(layers):
        ox = k * (pw + gap)
        body.append(f'<rect x="{ox:.1f}" y="0" width="{pw:.1f}" height="{ph:.1f}" fill="white" stroke="black"/>')
        occ = np.argwhere(vol[k] > 0)
        for i, j in occ:
            body.append(f'<rect x="{ox + i * cell:.1f}" y="{ph - (j + 1) * cell:.1f}" '
                        f'width="{cell:.1f}" height="{cell:.1f}" fill="#444"/>')
    return _svg(layers * (pw + gap) - gap, ph, body, f"slices along axis {axis}")


def write_svg(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
