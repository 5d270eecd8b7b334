"""Voronoi skeleton of obstacle points and its clean-up passes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ConfigError
from .geometry import Polygon, contains_many, delaunay, point_segment_distance
from .gridmap import GridMap, occupied_points
from .topograph import Kind, TopologyGraph, polyline_length, split_polyline


@dataclass(frozen=True)
class SkeletonConfig:
    min_clearance: float = 3.0
    merge_dist: float = 2.0
    dead_end_length: float = 10.0
    min_component_length: float = 50.0

    def __post_init__(self):
        for name in ("min_clearance", "merge_dist", "dead_end_length", "min_component_length"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")


def _ray_end(start: np.ndarray, direction: np.ndarray, bbox) -> np.ndarray:
    """Clip a ray to the bounding box (or a unit step if it starts outside)."""
    x0, y0, x1, y1 = bbox
    inside = x0 <= start[0] <= x1 and y0 <= start[1] <= y1
    if not inside:
        return start + direction
    ts = []
    for k, (lo, hi) in enumerate(((x0, x1), (y0, y1))):
        if direction[k] > 0:
            ts.append((hi - start[k]) / direction[k])
        elif direction[k] < 0:
            ts.append((lo - start[k]) / direction[k])
    t = min(ts) if ts else 1.0
    return start + direction * max(t, 1.0)


COINCIDENT_TOL = 1e-9


def _coincident_groups(centers: np.ndarray) -> np.ndarray:
    """Map each triangle to the lowest-index triangle with the same circumcenter."""
    rep = np.arange(len(centers))
    finite = np.nonzero(np.isfinite(centers).all(axis=1))[0]
    if len(finite) < 2:
        return rep
    pairs = cKDTree(centers[finite]).query_pairs(COINCIDENT_TOL, output_type="ndarray")
    if len(pairs) == 0:
        return rep
    n = len(finite)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    first = np.full(n, n)
    np.minimum.at(first, labels, np.arange(n))
    rep[finite] = finite[first[labels]]
    return rep


def voronoi_graph(points, bbox=None, min_clearance: float | None = None) -> TopologyGraph:
    """Voronoi diagram of obstacle points as a Topology Graph.

    Vertices are triangle circumcenters of the Delaunay triangulation and
    every interior Delaunay edge gives one straight Voronoi edge. Rays from
    hull edges are clipped at ``bbox`` = ``(xmin, ymin, xmax, ymax)``. Each
    half-edge carries ``clearance``: the closest approach of the Voronoi edge
    to its two generating points. With ``min_clearance`` set, edges below it
    are never materialised (same result as a later :func:`filter_clearance`).
    Circumcenters of cocircular triangles (within ``COINCIDENT_TOL``) share a
    single vertex; the zero-length edges between them are dropped.
    """
    tri = delaunay(points)
    pts, tris, nbrs = tri.points, tri.triangles, tri.neighbors
    centers = tri.circumcenters()
    if bbox is None:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        bbox = (lo[0], lo[1], hi[0], hi[1])

    t_all, j_all = np.nonzero(np.ones_like(nbrs, dtype=bool))
    u_all = nbrs[t_all, j_all]
    keep = (u_all < 0) | (t_all < u_all)
    t_all, j_all, u_all = t_all[keep], j_all[keep], u_all[keep]
    p_idx = tris[t_all, (j_all + 1) % 3]
    q_idx = tris[t_all, (j_all + 2) % 3]
    c1 = centers[t_all]
    interior = u_all >= 0
    c2 = np.empty_like(c1)
    c2[interior] = centers[u_all[interior]]
    hull = np.nonzero(~interior)[0]
    for i in hull:
        pq = pts[q_idx[i]] - pts[p_idx[i]]
        normal = np.array([pq[1], -pq[0]]) / np.hypot(*pq)
        c2[i] = _ray_end(c1[i], normal, bbox)
    finite = np.isfinite(c1).all(axis=1) & np.isfinite(c2).all(axis=1)
    clearance = point_segment_distance(pts[p_idx], c1, c2)
    take = finite if min_clearance is None else finite & (clearance >= min_clearance)

    rep = _coincident_groups(centers)
    g = TopologyGraph()
    tri_vertex: dict[int, int] = {}

    def vertex_for(t: int) -> int:
        t = rep[t]
        vid = tri_vertex.get(t)
        if vid is None:
            vid = g.add_vertex(*centers[t])
            tri_vertex[t] = vid
        return vid

    for i in np.nonzero(take)[0].tolist():
        a = vertex_for(int(t_all[i]))
        if interior[i]:
            if rep[t_all[i]] == rep[u_all[i]]:
                continue
            b = vertex_for(int(u_all[i]))
        else:
            b = g.add_vertex(*c2[i])
        g.add_halfedge_pair(a, b, [g.vertices[a].pos, g.vertices[b].pos], clearance=float(clearance[i]))
    return g


def skeleton_from_map(grid: GridMap, min_clearance: float | None = None) -> TopologyGraph:
    return voronoi_graph(occupied_points(grid), (0.0, 0.0, grid.width - 1.0, grid.height - 1.0), min_clearance)


def remove_isolated(graph: TopologyGraph, kinds=(Kind.ORDINARY, Kind.DEAD_END)) -> TopologyGraph:
    for vid in sorted(graph.vertices):
        if graph.degree(vid) == 0 and graph.vertices[vid].kind in kinds:
            graph.remove_vertex(vid)
    return graph


def _obstacle_clearance(graph: TopologyGraph, grid: GridMap, points: np.ndarray) -> float:
    obstacles = occupied_points(grid)
    if len(obstacles) == 0:
        return float("inf")
    dist, _ = cKDTree(obstacles).query(points)
    return float(dist.min())


def filter_clearance(graph: TopologyGraph, min_clearance: float, grid: GridMap | None = None) -> TopologyGraph:
    """Drop edges whose clearance is below ``min_clearance``, then isolated vertices.

    Edges without a clearance annotation are measured against ``grid``.
    """
    for e in graph.edges():
        c = e.clearance
        if c is None:
            if grid is None:
                continue
            c = _obstacle_clearance(graph, grid, e.path.points)
        if c < min_clearance:
            graph.remove_halfedge_pair(e.id)
    return remove_isolated(graph)


def filter_outside(graph: TopologyGraph, outer: Polygon) -> TopologyGraph:
    """Drop edges whose path midpoint lies outside the outer boundary polygon."""
    edges = graph.edges()
    if not edges:
        return graph
    mids = np.array([e.path.point_at(0.5 * e.length) for e in edges])
    inside = contains_many(outer, mids)
    for e, ok in zip(edges, inside):
        if not ok:
            graph.remove_halfedge_pair(e.id)
    return remove_isolated(graph)


def _dead_end_chain(graph: TopologyGraph, leaf: int):
    """Follow a chain from a degree-1 vertex through degree-2 vertices.

    Returns ``(vertices, halfedges, length, end)`` where ``end`` is the
    first vertex of degree other than 2 (or a protected vertex).
    """
    verts = [leaf]
    edges = []
    length = 0.0
    prev_edge = None
    cur = leaf
    while True:
        out = [e for e in graph.outgoing(cur) if e != prev_edge]
        e = graph.halfedges[out[0]]
        edges.append(e.id)
        length += e.length
        nxt = e.target
        prev_edge = e.twin
        if graph.degree(nxt) != 2 or graph.vertices[nxt].kind is not Kind.ORDINARY or nxt == leaf:
            return verts, edges, length, nxt
        verts.append(nxt)
        cur = nxt


def prune_dead_ends(graph: TopologyGraph, min_length: float) -> TopologyGraph:
    """Repeatedly remove dead-end chains shorter than ``min_length``.

    A dead-end chain runs from a degree-1 vertex through degree-2 vertices
    up to the first junction; the junction itself is kept. All short chains
    of one round go together, so the result does not depend on vertex ids.
    """
    while True:
        doomed_edges: set[int] = set()
        doomed_verts: set[int] = set()
        ends: set[int] = set()
        for leaf in sorted(graph.vertices):
            if graph.degree(leaf) != 1 or graph.vertices[leaf].kind is not Kind.ORDINARY:
                continue
            verts, edges, length, end = _dead_end_chain(graph, leaf)
            if length < min_length:
                doomed_edges.update(min(e, graph.halfedges[e].twin) for e in edges)
                doomed_verts.update(verts)
                ends.add(end)
        if not doomed_edges:
            return graph
        for eid in sorted(doomed_edges):
            graph.remove_halfedge_pair(eid)
        for v in sorted(doomed_verts):
            graph.remove_vertex(v)
        for v in sorted(ends - doomed_verts):
            if graph.degree(v) == 0 and graph.vertices[v].kind is Kind.ORDINARY:
                graph.remove_vertex(v)


def merge_close_vertices(graph: TopologyGraph, merge_dist: float) -> TopologyGraph:
    """Union vertices closer than ``merge_dist`` and move each group to its centroid.

    Grouping is the transitive closure of the proximity relation. The
    lowest id of a group survives. Edges inside a group shorter than
    ``merge_dist`` are dropped; longer ones are kept as two-edge loops
    through a new vertex at the path midpoint.
    """
    ids = sorted(graph.vertices)
    if len(ids) < 2 or merge_dist <= 0:
        return graph
    pos = np.array([graph.vertices[v].pos for v in ids])
    pairs = cKDTree(pos).query_pairs(merge_dist, output_type="ndarray")
    if len(pairs) == 0:
        return graph
    parent = list(range(len(ids)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(map(tuple, pairs.tolist())):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(len(ids)):
        groups.setdefault(find(i), []).append(i)
    rep: dict[int, int] = {}
    for members in groups.values():
        if len(members) == 1:
            continue
        keep = ids[members[0]]
        c = pos[members].mean(axis=0)
        v = graph.vertices[keep]
        v.x, v.y = float(c[0]), float(c[1])
        for m in members:
            rep[ids[m]] = keep

    touched = [e for e in graph.edges() if e.source in rep or e.target in rep]
    for e in touched:
        graph.remove_halfedge_pair(e.id)
    for e in touched:
        a, b = rep.get(e.source, e.source), rep.get(e.target, e.target)
        pts = np.array(e.path.points)
        pts[0] = graph.vertices[a].pos
        pts[-1] = graph.vertices[b].pos
        if a == b:
            length = polyline_length(pts)
            if length < merge_dist:
                continue
            head, tail, mid = split_polyline(pts, 0.5 * length)
            m = graph.add_vertex(*mid)
            graph.add_halfedge_pair(a, m, head, e.room_id, e.clearance)
            graph.add_halfedge_pair(m, b, tail, e.room_id, e.clearance)
            continue
        graph.add_halfedge_pair(a, b, pts, e.room_id, e.clearance)
    for old, keep in rep.items():
        if old != keep:
            graph.remove_vertex(old)
    return graph


def drop_small_components(graph: TopologyGraph, min_length: float) -> TopologyGraph:
    """Remove connected components whose summed path length is below ``min_length``.

    Catches skeleton fragments in wall corners the outer boundary does not
    reach; they have no junction to be pruned back to.
    """
    if min_length <= 0:
        return graph
    seen: set[int] = set()
    for start in sorted(graph.vertices):
        if start in seen:
            continue
        comp, stack, edges = [], [start], set()
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            for eid in graph.outgoing(v):
                e = graph.halfedges[eid]
                edges.add(min(eid, e.twin))
                if e.target not in seen:
                    seen.add(e.target)
                    stack.append(e.target)
        total = sum(graph.halfedges[e].length for e in edges)
        if total < min_length:
            for eid in edges:
                graph.remove_halfedge_pair(eid)
            for v in comp:
                graph.remove_vertex(v)
    return graph


def contract_chains(graph: TopologyGraph, kinds=(Kind.ORDINARY,)) -> TopologyGraph:
    """Replace degree-2 vertices of the given kinds by one edge with the joined path."""
    for vid in sorted(graph.vertices):
        v = graph.vertices.get(vid)
        if v is None or v.kind not in kinds or graph.degree(vid) != 2:
            continue
        e1, e2 = (graph.halfedges[e] for e in graph.outgoing(vid))
        a, b = e1.target, e2.target
        if a == b:
            continue
        pts = np.vstack([e1.path.points[::-1], e2.path.points[1:]])
        room = e1.room_id if e1.room_id == e2.room_id else -1
        clear = None
        if e1.clearance is not None and e2.clearance is not None:
            clear = min(e1.clearance, e2.clearance)
        graph.remove_halfedge_pair(e1.id)
        graph.remove_halfedge_pair(e2.id)
        graph.remove_vertex(vid)
        graph.add_halfedge_pair(a, b, pts, room, clear)
    return graph


def build_skeleton(grid: GridMap, outer: Polygon | None, config: SkeletonConfig = SkeletonConfig(),
                   stages: list | None = None) -> TopologyGraph:
    """Voronoi graph -> clearance filter -> outside filter -> prune/merge/contract.

    ``stages`` (if given) collects ``(name, graph copy)`` after every step.
    """
    def record(name, g):
        if stages is not None:
            stages.append((name, g.copy()))
        return g

    g = record("voronoi", skeleton_from_map(grid, config.min_clearance))
    g = record("filter_clearance", filter_clearance(g, config.min_clearance))
    if outer is not None:
        g = record("filter_outside", filter_outside(g, outer))
    g = record("contract", contract_chains(g))
    g = record("prune_dead_ends", prune_dead_ends(g, config.dead_end_length))
    g = record("merge_close_vertices", merge_close_vertices(g, config.merge_dist))
    g = record("contract", contract_chains(g))
    g = record("prune_dead_ends", prune_dead_ends(g, config.dead_end_length))
    g = record("drop_small_components", drop_small_components(g, config.min_component_length))
    g = record("contract", contract_chains(g))
    return g
