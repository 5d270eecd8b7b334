"""SVG output for maps, alpha shapes and graphs; synthetic two-room maps."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import ConfigError, MapIOError
from .geometry import AlphaShapeResult
from .gridmap import GridMap
from .topograph import Kind, TopologyGraph

EDGE_COLOR = "#1f4fff"
POLY_COLOR = "#e00000"
ROOM_FILL = "#ffe34d"
OUTSIDE_EDGE_COLOR = "#19a319"
VERTEX_COLORS = {
    Kind.ORDINARY: "#1f4fff",
    Kind.DEAD_END: "#1f4fff",
    Kind.BORDER: "#ff7f00",
    Kind.ROOM_CENTER: "#b000b0",
}


def _num(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _occupied_runs(grid: GridMap):
    """Horizontal runs of occupied cells as (x, y, length)."""
    for y in range(grid.height):
        row = grid.cells[y]
        if not row.any():
            continue
        padded = np.concatenate([[False], row, [False]])
        diff = np.diff(padded.astype(np.int8))
        starts = np.nonzero(diff == 1)[0]
        ends = np.nonzero(diff == -1)[0]
        for s, e in zip(starts.tolist(), ends.tolist()):
            yield s, y, e - s


def svg_document(grid: GridMap | None, graph: TopologyGraph | None = None,
                 shapes: AlphaShapeResult | None = None, scale: float = 4.0,
                 extra_edges: TopologyGraph | None = None, labels: bool = True) -> str:
    """Render to an SVG string.

    Cells are unit squares centred on integer coordinates. ``extra_edges``
    is drawn in green under the main graph (e.g. Voronoi edges removed as
    outside the map).
    """
    w = grid.width if grid is not None else 1
    h = grid.height if grid is not None else 1
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(w * scale)}" height="{_num(h * scale)}" '
        f'viewBox="-0.5 -0.5 {w} {h}">',
        f'<rect x="-0.5" y="-0.5" width="{w}" height="{h}" fill="white"/>',
    ]
    if shapes is not None:
        out.append('<g id="rooms" fill="%s" fill-opacity="0.8" stroke="none">' % ROOM_FILL)
        for poly in shapes.inner:
            pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in poly.vertices.tolist())
            out.append(f'<polygon data-id="{poly.id}" points="{pts}"/>')
        out.append("</g>")
    if grid is not None:
        out.append('<g id="map" fill="black" stroke="none">')
        for x, y, n in _occupied_runs(grid):
            out.append(f'<rect x="{_num(x - 0.5)}" y="{_num(y - 0.5)}" width="{n}" height="1"/>')
        out.append("</g>")
    if shapes is not None:
        out.append('<g id="polygons" fill="none" stroke="%s" stroke-width="0.3">' % POLY_COLOR)
        for poly in shapes.polygons:
            pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in poly.vertices.tolist())
            out.append(f'<polygon data-id="{poly.id}" points="{pts}"/>')
        out.append("</g>")
    for g, color, gid in ((extra_edges, OUTSIDE_EDGE_COLOR, "outside-edges"), (graph, EDGE_COLOR, "edges")):
        if g is None:
            continue
        out.append(f'<g id="{gid}" fill="none" stroke="{color}" stroke-width="0.4">')
        for e in g.edges():
            pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in e.path.points.tolist())
            out.append(f'<polyline data-id="{e.id}" points="{pts}"/>')
        out.append("</g>")
    if graph is not None:
        out.append('<g id="vertices" stroke="none">')
        for vid, v in sorted(graph.vertices.items()):
            r = 1.2 if v.kind is Kind.ROOM_CENTER else 0.8
            out.append(f'<circle data-id="{vid}" data-kind="{v.kind.value}" cx="{_num(v.x)}" cy="{_num(v.y)}" '
                       f'r="{r}" fill="{VERTEX_COLORS[v.kind]}"/>')
            if labels:
                out.append(f'<text x="{_num(v.x + 1.2)}" y="{_num(v.y - 1.2)}" font-size="3" '
                           f'fill="black">{escape(str(vid))}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_graph(grid: GridMap | None, graph: TopologyGraph | None, shapes: AlphaShapeResult | None, path,
                 **kwargs) -> None:
    doc = svg_document(grid, graph, shapes, **kwargs)
    try:
        with open(path, "w") as fh:
            fh.write(doc)
    except OSError as exc:
        raise MapIOError(f"cannot write {path}: {exc}") from None


# ---------------------------------------------------------------------------
# synthetic maps

def _draw_rect_walls(cells: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> None:
    cells[y0, x0:x1 + 1] = True
    cells[y1, x0:x1 + 1] = True
    cells[y0:y1 + 1, x0] = True
    cells[y0:y1 + 1, x1] = True


def make_two_room_fixture(room_w: int = 60, room_h: int = 60, corridor_len: int = 40, corridor_w: int = 10,
                          noise_pixels: int = 12, seed: int = 0, margin: int = 5) -> GridMap:
    """Two equal rectangular rooms joined by a straight corridor.

    Walls are one pixel thick and the whole map is mirror symmetric about
    its vertical centre line. ``noise_pixels`` extra occupied cells sit on
    free room cells touching a wall: half are drawn in the left room with
    ``numpy.random.Generator(PCG64(seed))`` and reflected into the right
    room. An odd count leaves one unreflected pixel in the left room.
    """
    if min(room_w, room_h, corridor_len, corridor_w) <= 0 or margin < 0:
        raise ConfigError("fixture dimensions must be positive")
    if corridor_w >= min(room_w, room_h):
        raise ConfigError("corridor must be narrower than the rooms")
    width = 2 * margin + 2 * (room_w + 2) + corridor_len
    height = 2 * margin + room_h + 2
    cells = np.zeros((height, width), dtype=bool)
    top, bottom = margin, margin + room_h + 1
    left_room = (margin, margin + room_w + 1)
    right_room = (width - 1 - margin - room_w - 1, width - 1 - margin)
    for x0, x1 in (left_room, right_room):
        _draw_rect_walls(cells, x0, top, x1, bottom)
    cy0 = top + 1 + (room_h - corridor_w) // 2  # first free corridor row
    cy1 = cy0 + corridor_w - 1
    cx0, cx1 = left_room[1], right_room[0]
    cells[cy0 - 1, cx0:cx1 + 1] = True
    cells[cy1 + 1, cx0:cx1 + 1] = True
    cells[cy0:cy1 + 1, cx0] = False
    cells[cy0:cy1 + 1, cx1] = False

    if noise_pixels:
        # candidates in the left room only; the right room gets the mirror image
        free_room = np.zeros_like(cells)
        free_room[top + 1:bottom, left_room[0] + 1:left_room[1]] = True
        touching = np.zeros_like(cells)
        touching[1:, :] |= cells[:-1, :]
        touching[:-1, :] |= cells[1:, :]
        touching[:, 1:] |= cells[:, :-1]
        touching[:, :-1] |= cells[:, 1:]
        # keep the doorway clear
        free_room[cy0 - 1:cy1 + 2, cx0 - 2:cx0 + 1] = False
        ys, xs = np.nonzero(free_room & touching & ~cells)
        n_left = (noise_pixels + 1) // 2
        if n_left > len(xs):
            raise ConfigError(f"cannot place {noise_pixels} noise pixels")
        rng = np.random.Generator(np.random.PCG64(seed))
        pick = np.sort(rng.choice(len(xs), size=n_left, replace=False))
        cells[ys[pick], xs[pick]] = True
        mirror = pick[:noise_pixels // 2]
        cells[ys[mirror], width - 1 - xs[mirror]] = True
    return GridMap(cells)


def make_big_room_map(room: int = 120, corridor_len: int = 60, corridor_w: int = 16, margin: int = 5) -> GridMap:
    """Clean two-large-rooms map used by the noise experiments."""
    return make_two_room_fixture(room, room, corridor_len, corridor_w, noise_pixels=0, margin=margin)
