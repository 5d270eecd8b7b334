"""Planar geometry kernel: Delaunay, alpha shapes and polygon predicates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .errors import GeometryError

TOL = 1e-9


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError(f"expected an (n, 2) point array, got shape {pts.shape}")
    return pts


# ---------------------------------------------------------------------------
# polygons

def signed_area(points) -> float:
    """Shoelace area, positive for counter-clockwise vertex order."""
    p = as_points(getattr(points, "vertices", points))
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * math.fsum(x * yn - xn * y)


def centroid(points) -> tuple[float, float]:
    p = as_points(getattr(points, "vertices", points))
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * math.fsum(cross)
    if abs(area) <= TOL:
        raise GeometryError("centroid of a zero-area polygon is undefined")
    cx = math.fsum((x + xn) * cross) / (6.0 * area)
    cy = math.fsum((y + yn) * cross) / (6.0 * area)
    return cx, cy


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple closed polygon; vertices are stored counter-clockwise."""

    vertices: np.ndarray
    id: int = -1

    def __post_init__(self):
        v = as_points(self.vertices).copy()
        if len(v) < 3:
            raise GeometryError("a polygon needs at least 3 vertices")
        if np.any(np.all(v == np.roll(v, -1, axis=0), axis=1)):
            raise GeometryError("polygon has consecutive duplicate vertices")
        if signed_area(v) < 0:
            v = v[::-1].copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    def __eq__(self, other):
        if not isinstance(other, Polygon):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.vertices, other.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def with_id(self, new_id: int) -> "Polygon":
        return Polygon(self.vertices, new_id)


def _on_segments(p, a, b, tol=TOL) -> np.ndarray:
    ab = b - a
    ap = p - a
    cross = ab[:, 0] * ap[:, 1] - ab[:, 1] * ap[:, 0]
    dot = ab[:, 0] * ap[:, 0] + ab[:, 1] * ap[:, 1]
    len2 = ab[:, 0] ** 2 + ab[:, 1] ** 2
    scale = np.sqrt(len2)
    return (np.abs(cross) <= tol * np.maximum(scale, 1.0)) & (dot >= -tol) & (dot <= len2 + tol)


def contains(poly: Polygon, p) -> bool:
    """Point-in-polygon by ray casting; points on the boundary count as inside."""
    p = np.asarray(p, dtype=np.float64)
    a, b = poly.edges()
    if _on_segments(p, a, b).any():
        return True
    x, y = p
    straddle = (a[:, 1] > y) != (b[:, 1] > y)
    if not straddle.any():
        return False
    a, b = a[straddle], b[straddle]
    xcross = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    return bool(np.count_nonzero(xcross > x) % 2)


def contains_many(poly: Polygon, pts, chunk: int = 2048) -> np.ndarray:
    """Vectorised :func:`contains` for an ``(m, 2)`` array of points."""
    pts = as_points(pts)
    a, b = poly.edges()
    ab = b - a
    len2 = np.einsum("ij,ij->i", ab, ab)
    scale = np.maximum(np.sqrt(len2), 1.0)
    out = np.zeros(len(pts), dtype=bool)
    for lo in range(0, len(pts), chunk):
        p = pts[lo:lo + chunk, None, :]
        ap = p - a
        cross = ab[:, 0] * ap[..., 1] - ab[:, 1] * ap[..., 0]
        dot = ab[:, 0] * ap[..., 0] + ab[:, 1] * ap[..., 1]
        on_edge = ((np.abs(cross) <= TOL * scale) & (dot >= -TOL) & (dot <= len2 + TOL)).any(axis=1)
        y = p[..., 1]
        straddle = (a[:, 1] > y) != (b[:, 1] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = a[:, 0] + (y - a[:, 1]) * ab[:, 0] / ab[:, 1]
        hits = np.count_nonzero(straddle & (xcross > p[..., 0]), axis=1)
        out[lo:lo + chunk] = on_edge | (hits % 2 == 1)
    return out


def segment_intersections(poly: Polygon, a, b) -> list[tuple[float, tuple[float, float]]]:
    """Intersections of segment ``a -> b`` with the polygon boundary.

    Returns ``(t, point)`` pairs sorted by the parameter ``t`` along the
    segment. Collinear overlaps contribute both overlap endpoints.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.array_equal(a, b):
        raise GeometryError("degenerate segment")
    ts = _segment_polygon_params(poly.vertices, a, b)
    return [(t, (float(a[0] + t * (b[0] - a[0])), float(a[1] + t * (b[1] - a[1])))) for t in ts]


def _segment_polygon_params(verts: np.ndarray, a: np.ndarray, b: np.ndarray) -> list[float]:
    c = verts
    d = np.roll(verts, -1, axis=0)
    r = b - a
    s = d - c
    denom = r[0] * s[:, 1] - r[1] * s[:, 0]
    ca = c - a
    num_t = ca[:, 0] * s[:, 1] - ca[:, 1] * s[:, 0]
    num_u = ca[:, 0] * r[1] - ca[:, 1] * r[0]
    rlen = math.hypot(r[0], r[1])
    slen = np.hypot(s[:, 0], s[:, 1])
    scale = rlen * slen
    out: list[float] = []
    proper = np.abs(denom) > 1e-12 * scale
    if proper.any():
        t = num_t[proper] / denom[proper]
        u = num_u[proper] / denom[proper]
        tt = TOL / rlen
        tu = TOL / slen[proper]
        ok = (t >= -tt) & (t <= 1 + tt) & (u >= -tu) & (u <= 1 + tu)
        out.extend(np.clip(t[ok], 0.0, 1.0).tolist())
    par = ~proper
    if par.any():
        # parallel edges: only collinear ones (zero offset) can touch
        coll = par & (np.abs(num_u) <= TOL * np.maximum(rlen, 1.0))
        for i in np.nonzero(coll)[0]:
            r2 = r @ r
            t0 = float((c[i] - a) @ r / r2)
            t1 = float((d[i] - a) @ r / r2)
            lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
            if lo <= hi + TOL / rlen:
                out.extend([lo, min(max(hi, lo), 1.0)])
    out.sort()
    dedup: list[float] = []
    for t in out:
        if not dedup or t - dedup[-1] > TOL:
            dedup.append(t)
    return dedup


def point_segment_distance(p, a, b) -> np.ndarray:
    """Distance from point(s) ``p`` to segment(s) ``a -> b`` (broadcasting)."""
    p, a, b = (np.asarray(v, dtype=np.float64) for v in (p, a, b))
    ab = b - a
    len2 = np.sum(ab * ab, axis=-1)
    safe = np.where(len2 > 0, len2, 1.0)
    t = np.clip(np.sum((p - a) * ab, axis=-1) / safe, 0.0, 1.0)
    t = np.where(len2 > 0, t, 0.0)
    proj = a + t[..., None] * ab
    return np.sqrt(np.sum((p - proj) ** 2, axis=-1))


# ---------------------------------------------------------------------------
# Delaunay triangulation

@dataclass(frozen=True, eq=False)
class Triangulation:
    """Delaunay triangulation with CCW triangles.

    ``neighbors[t, j]`` is the triangle across the edge opposite corner ``j``
    (``-1`` on the convex hull).
    """

    points: np.ndarray
    triangles: np.ndarray
    neighbors: np.ndarray

    def __len__(self):
        return len(self.triangles)

    def circumcenters(self) -> np.ndarray:
        return circumcircles(self.points, self.triangles)[0]

    def circumradius2(self) -> np.ndarray:
        return circumcircles(self.points, self.triangles)[1]


def dedupe_points(points) -> np.ndarray:
    pts = as_points(points)
    if len(pts) == 0:
        return pts
    _, first = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(first)]


def delaunay(points) -> Triangulation:
    pts = dedupe_points(points)
    if len(pts) < 3:
        raise GeometryError(f"need at least 3 distinct points, got {len(pts)}")
    if _collinear(pts):
        raise GeometryError("all points are collinear")
    try:
        dt = Delaunay(pts)
    except QhullError as exc:
        raise GeometryError(f"triangulation failed: {exc}") from None
    tris = dt.simplices.astype(np.int64).copy()
    nbrs = dt.neighbors.astype(np.int64).copy()
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    orient = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    cw = orient < 0
    # swapping corners 1 and 2 keeps neighbors[j] opposite corner j
    tris[cw, 1], tris[cw, 2] = tris[cw, 2].copy(), tris[cw, 1].copy()
    nbrs[cw, 1], nbrs[cw, 2] = nbrs[cw, 2].copy(), nbrs[cw, 1].copy()
    return Triangulation(pts, tris, nbrs)


def _collinear(pts: np.ndarray) -> bool:
    d = pts - pts[0]
    far = d[np.argmax(np.einsum("ij,ij->i", d, d))]
    cross = far[0] * d[:, 1] - far[1] * d[:, 0]
    return bool(np.all(np.abs(cross) <= 1e-12 * max(1.0, float(np.hypot(*far)))))


def circumcircles(points: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circumcenters and squared circumradii; degenerate triangles get ``inf``."""
    a = points[triangles[:, 0]]
    b = points[triangles[:, 1]] - a
    c = points[triangles[:, 2]] - a
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    b2 = b[:, 0] ** 2 + b[:, 1] ** 2
    c2 = c[:, 0] ** 2 + c[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = (c[:, 1] * b2 - b[:, 1] * c2) / d
        uy = (b[:, 0] * c2 - c[:, 0] * b2) / d
    r2 = ux ** 2 + uy ** 2
    bad = d == 0
    r2[bad] = np.inf
    ux[bad] = np.nan
    uy[bad] = np.nan
    return np.column_stack([ux + a[:, 0], uy + a[:, 1]]), r2


def incircle(a, b, c, d) -> float:
    """Positive iff ``d`` lies inside the circle through CCW ``a, b, c``."""
    m = np.array([[a[0] - d[0], a[1] - d[1]],
                  [b[0] - d[0], b[1] - d[1]],
                  [c[0] - d[0], c[1] - d[1]]], dtype=np.float64)
    sq = (m ** 2).sum(axis=1)
    return float(m[0, 0] * (m[1, 1] * sq[2] - sq[1] * m[2, 1])
                 - m[0, 1] * (m[1, 0] * sq[2] - sq[1] * m[2, 0])
                 + sq[0] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))


# ---------------------------------------------------------------------------
# alpha shapes

@dataclass(frozen=True, eq=False)
class AlphaShapeResult:
    alpha: float
    polygons: list[Polygon]
    outer_id: int
    triangulation: Triangulation | None = None
    open_mask: np.ndarray | None = None

    @property
    def outer(self) -> Polygon | None:
        return self.polygons[self.outer_id] if self.outer_id >= 0 else None

    @property
    def inner(self) -> list[Polygon]:
        return [p for p in self.polygons if p.id != self.outer_id]


class _DSU:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, i):
        parent = self.parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            if ri < rj:
                self.parent[rj] = ri
            else:
                self.parent[ri] = rj


def _edge_is_wall(p, q, o1, o2, alpha) -> np.ndarray:
    """Edges short enough to belong to the alpha complex (and Gabriel)."""
    pq = q - p
    short = (pq[:, 0] ** 2 + pq[:, 1] ** 2) / 4.0 < alpha
    gabriel = np.ones(len(p), dtype=bool)
    for o in (o1, o2):
        if o is None:
            continue
        valid = ~np.isnan(o[:, 0])
        dot = np.einsum("ij,ij->i", p - np.nan_to_num(o), q - np.nan_to_num(o))
        gabriel &= ~(valid & (dot < 0))
    return short & gabriel


def classify_triangles(tri: Triangulation, alpha: float) -> np.ndarray:
    """True for "open" triangles: squared circumradius >= alpha."""
    return tri.circumradius2() >= alpha


def open_components(tri: Triangulation, open_mask: np.ndarray, alpha: float) -> np.ndarray:
    """Label connected components of open triangles.

    Open triangles are joined across edges that are not wall edges of the
    alpha complex. Label ``0`` marks the unbounded component (touching the
    outside of the convex hull); closed triangles get ``-1``.
    """
    n = len(tri)
    pts, tris, nbrs = tri.points, tri.triangles, tri.neighbors
    dsu = _DSU(n + 1)
    outside = n
    for j in range(3):
        t_idx = np.arange(n)
        u_idx = nbrs[:, j]
        cand = open_mask & ((u_idx < 0) | ((u_idx > t_idx) & open_mask[np.maximum(u_idx, 0)]))
        if not cand.any():
            continue
        t_c, u_c = t_idx[cand], u_idx[cand]
        p = pts[tris[t_c, (j + 1) % 3]]
        q = pts[tris[t_c, (j + 2) % 3]]
        o1 = pts[tris[t_c, j]]
        o2 = np.full_like(o1, np.nan)
        has_u = u_c >= 0
        if has_u.any():
            u_tris = tris[u_c[has_u]]
            p_idx = tris[t_c[has_u], (j + 1) % 3]
            q_idx = tris[t_c[has_u], (j + 2) % 3]
            opp = np.where((u_tris != p_idx[:, None]) & (u_tris != q_idx[:, None]))
            o2_idx = np.empty(has_u.sum(), dtype=np.int64)
            o2_idx[opp[0]] = u_tris[opp]
            o2[has_u] = pts[o2_idx]
        wall = _edge_is_wall(p, q, o1, o2, alpha)
        for t, u in zip(t_c[~wall].tolist(), u_c[~wall].tolist()):
            dsu.union(t, outside if u < 0 else u)
    labels = np.full(n, -1, dtype=np.int64)
    root_out = dsu.find(outside)
    next_label = 1
    seen: dict[int, int] = {root_out: 0}
    for t in np.nonzero(open_mask)[0].tolist():
        r = dsu.find(t)
        if r not in seen:
            seen[r] = next_label
            next_label += 1
        labels[t] = seen[r]
    return labels


def _trace_loops(tri: Triangulation, region: np.ndarray) -> list[np.ndarray]:
    """Boundary loops (as point-index arrays) of a set of CCW triangles."""
    tris, nbrs = tri.triangles, tri.neighbors
    out_edges: dict[int, list[int]] = {}
    for t in np.nonzero(region)[0].tolist():
        for j in range(3):
            u = nbrs[t, j]
            if u >= 0 and region[u]:
                continue
            a, b = int(tris[t, (j + 1) % 3]), int(tris[t, (j + 2) % 3])
            out_edges.setdefault(a, []).append(b)
    pts = tri.points
    loops = []
    for start in sorted(out_edges):
        while out_edges.get(start):
            first = min(out_edges[start])
            out_edges[start].remove(first)
            loop = [start]
            prev, cur = start, first
            while cur != start:
                loop.append(cur)
                cands = out_edges[cur]
                if len(cands) == 1:
                    nxt = cands[0]
                else:
                    back = pts[prev] - pts[cur]
                    ang_back = math.atan2(back[1], back[0])

                    def cw_turn(w):
                        d = pts[w] - pts[cur]
                        return (ang_back - math.atan2(d[1], d[0])) % (2 * math.pi) or 2 * math.pi

                    nxt = min(cands, key=lambda w: (cw_turn(w), w))
                cands.remove(nxt)
                prev, cur = cur, nxt
            loops.append(np.array(loop, dtype=np.int64))
    return loops


def _simplify_loop(coords: np.ndarray) -> np.ndarray:
    """Drop vertices lying exactly on the straight line through their neighbours."""
    prv, nxt = np.roll(coords, 1, axis=0), np.roll(coords, -1, axis=0)
    cross = (coords[:, 0] - prv[:, 0]) * (nxt[:, 1] - prv[:, 1]) - (coords[:, 1] - prv[:, 1]) * (nxt[:, 0] - prv[:, 0])
    dot = np.einsum("ij,ij->i", coords - prv, nxt - coords)
    flat = (cross == 0) & (dot > 0)
    if len(coords) - flat.sum() < 3:
        return coords
    return coords[~flat]


def _loop_polygon(tri: Triangulation, loop: np.ndarray) -> tuple[float, np.ndarray]:
    coords = tri.points[loop]
    return signed_area(coords), coords


def _outer_loop(tri: Triangulation, region: np.ndarray) -> np.ndarray | None:
    best = None
    for loop in _trace_loops(tri, region):
        if len(loop) < 3:
            continue
        area, coords = _loop_polygon(tri, loop)
        if area > 0 and (best is None or area > best[0]):
            best = (area, coords)
    return None if best is None else _simplify_loop(best[1])


def alpha_shape(points, alpha: float, min_room_area: float | None = None) -> AlphaShapeResult:
    """Outer boundary and inner (room) polygons of a point set.

    Triangles with squared circumradius >= ``alpha`` are open. Each bounded
    component of open triangles inside the outer boundary yields one inner
    polygon; those smaller than ``min_room_area`` (default ``4 * alpha``) are
    dropped. Inner polygons get ids sorted by the (min y, min x) corner of
    their bounding box; the outer polygon gets the last id.
    """
    if not alpha > 0:
        raise GeometryError(f"alpha must be positive, got {alpha}")
    if min_room_area is None:
        min_room_area = 4.0 * alpha
    tri = delaunay(points)
    open_mask = classify_triangles(tri, alpha)
    labels = open_components(tri, open_mask, alpha)

    solid = labels != 0
    outer_coords = _outer_loop(tri, solid) if solid.any() else None
    outer = Polygon(outer_coords) if outer_coords is not None else None

    inner: list[Polygon] = []
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(1, labels.max() + 2))
    for k in range(1, labels.max() + 1):
        members = order[bounds[k - 1]:bounds[k]]
        region = np.zeros(len(tri), dtype=bool)
        region[members] = True
        coords = _outer_loop(tri, region)
        if coords is None or len(coords) < 3:
            continue
        poly = Polygon(coords)
        if poly.area < min_room_area:
            continue
        if outer is not None and not contains(outer, poly.vertices[0]):
            continue
        inner.append(poly)
    inner.sort(key=lambda p: (p.bbox[1], p.bbox[0], p.bbox[3], p.bbox[2]))
    polygons = [p.with_id(i) for i, p in enumerate(inner)]
    outer_id = -1
    if outer is not None:
        outer_id = len(polygons)
        polygons.append(outer.with_id(outer_id))
    return AlphaShapeResult(alpha, polygons, outer_id, tri, open_mask)
