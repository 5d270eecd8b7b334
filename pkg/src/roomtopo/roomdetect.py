"""Room detection on a Topology Graph.

Paths are cut where they cross room polygons, vertices and edges get room
ids, short dead ends hanging off border vertices are dropped and each room
is finally replaced by one centroid vertex joined to its border vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GraphError
from .geometry import AlphaShapeResult, Polygon, _segment_polygon_params, centroid, contains, contains_many
from .skeleton import contract_chains, remove_isolated
from .topograph import Kind, Room, TopologyGraph, split_polyline


@dataclass(frozen=True)
class RoomDetectConfig:
    epsilon: float = 1e-8
    min_len_threshold: float = 20.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.min_len_threshold > 0:
            raise ConfigError("min_len_threshold must be positive")


@dataclass(frozen=True, order=True)
class CutPoint:
    halfedge: int
    cut_distance: float
    polygon_id: int


def _bbox_overlap(pts: np.ndarray, bbox) -> bool:
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return not (hi[0] < bbox[0] or lo[0] > bbox[2] or hi[1] < bbox[1] or lo[1] > bbox[3])


def path_polygon_cuts(points: np.ndarray, poly: Polygon, tol: float = 1e-9) -> list[float]:
    """Arc-length distances at which a polyline crosses the polygon boundary."""
    seg = np.hypot(*np.diff(points, axis=0).T)
    offsets = np.concatenate([[0.0], np.cumsum(seg)])
    bbox = poly.bbox
    lo = np.minimum(points[:-1], points[1:])
    hi = np.maximum(points[:-1], points[1:])
    near = ~((hi[:, 0] < bbox[0]) | (lo[:, 0] > bbox[2]) | (hi[:, 1] < bbox[1]) | (lo[:, 1] > bbox[3]))
    found = []
    for i in np.nonzero(near & (seg > 0))[0]:
        for t in _segment_polygon_params(poly.vertices, points[i], points[i + 1]):
            found.append(float(offsets[i] + t * seg[i]))
    found.sort()
    out: list[float] = []
    for d in found:
        if not out or d - out[-1] > tol:
            out.append(d)
    return out


def find_border_cuts(graph: TopologyGraph, shapes: AlphaShapeResult) -> list[CutPoint]:
    """Where every edge's path meets an inner (room) polygon boundary."""
    polys = sorted(shapes.inner, key=lambda p: p.id)
    cuts = []
    for e in graph.edges():
        pts = e.path.points
        for poly in polys:
            if not _bbox_overlap(pts, poly.bbox):
                continue
            for d in path_polygon_cuts(pts, poly):
                cuts.append(CutPoint(e.id, min(d, e.length), poly.id))
    cuts.sort(key=lambda c: (c.halfedge, c.cut_distance, c.polygon_id))
    return cuts


def _mark_border(graph: TopologyGraph, vid: int, polygon_id: int) -> None:
    v = graph.vertices[vid]
    if v.kind is Kind.BORDER:
        return
    v.kind = Kind.BORDER
    v.room_id = polygon_id


def cut_halfedge(graph: TopologyGraph, cut: CutPoint, config: RoomDetectConfig = RoomDetectConfig()) -> list[int]:
    """Split one half-edge (and its twin) at a border crossing.

    Cuts within ``epsilon`` of either end only mark that end vertex as a
    border vertex and return ``[halfedge]``. Otherwise a new border vertex is
    inserted and the two new source-to-target half-edges are returned,
    source side first.
    """
    e = graph.halfedges.get(cut.halfedge)
    if e is None:
        raise GraphError(f"cut references dead half-edge {cut.halfedge}")
    length = e.length
    d = cut.cut_distance
    eps = config.epsilon
    if d < -eps or d > length + eps or math.isnan(d):
        raise GraphError(f"cut distance {d} outside [0, {length}] on half-edge {e.id}")
    if abs(d) <= eps:
        _mark_border(graph, e.source, cut.polygon_id)
        return [e.id]
    if abs(length - d) <= eps:
        _mark_border(graph, e.target, cut.polygon_id)
        return [e.id]
    head, tail, p = split_polyline(e.path.points, d)
    source, target, room, clear = e.source, e.target, e.room_id, e.clearance
    graph.remove_halfedge_pair(e.id)
    mid = graph.add_vertex(*p, room_id=cut.polygon_id, kind=Kind.BORDER)
    first, _ = graph.add_halfedge_pair(source, mid, head, room, clear)
    second, _ = graph.add_halfedge_pair(mid, target, tail, room, clear)
    return [first, second]


def apply_all_cuts(graph: TopologyGraph, cuts: list[CutPoint],
                   config: RoomDetectConfig = RoomDetectConfig()) -> TopologyGraph:
    """Apply cuts edge by edge, farthest first, following the source-side fragment."""
    by_edge: dict[int, list[CutPoint]] = {}
    for c in cuts:
        by_edge.setdefault(c.halfedge, []).append(c)
    for eid in sorted(by_edge):
        current = eid
        for c in sorted(by_edge[eid], key=lambda c: (-c.cut_distance, c.polygon_id)):
            res = cut_halfedge(graph, CutPoint(current, c.cut_distance, c.polygon_id), config)
            current = res[0]
    return graph


def _polygon_membership(graph: TopologyGraph, polys: list[Polygon], vids: list[int]) -> dict[int, int]:
    rooms = {v: -1 for v in vids}
    if not vids:
        return rooms
    pos = np.array([graph.vertices[v].pos for v in vids])
    for poly in sorted(polys, key=lambda p: p.id, reverse=True):
        inside = contains_many(poly, pos)
        for v, ok in zip(vids, inside):
            if ok:
                rooms[v] = poly.id
    return rooms


def assign_room_ids(graph: TopologyGraph, shapes: AlphaShapeResult,
                    config: RoomDetectConfig = RoomDetectConfig()) -> TopologyGraph:
    polys = {p.id: p for p in shapes.inner}
    plain = [v.id for v in graph.vertices.values() if v.kind in (Kind.ORDINARY, Kind.DEAD_END)]
    for vid, rid in _polygon_membership(graph, list(polys.values()), sorted(plain)).items():
        graph.vertices[vid].room_id = rid
    for e in graph.edges():
        src, dst = graph.vertices[e.source], graph.vertices[e.target]
        rid = -1
        if src.room_id == dst.room_id:
            rid = src.room_id
            if rid >= 0 and src.kind is Kind.BORDER and dst.kind is Kind.BORDER:
                # border-to-border paths can also run outside the room
                if not contains(polys[rid], e.path.point_at(0.5 * e.length)):
                    rid = -1
        elif e.length <= config.min_len_threshold:
            for end, other in ((dst, src), (src, dst)):
                if graph.degree(end.id) == 1 and end.room_id == -1 and other.room_id >= 0:
                    rid = other.room_id
                    break
        e.room_id = rid
        graph.halfedges[e.twin].room_id = rid
    return graph


def remove_short_dead_ends(graph: TopologyGraph, config: RoomDetectConfig = RoomDetectConfig()) -> TopologyGraph:
    """Drop short dead ends leaving a border vertex, plus the border vertex.

    The room-side edge attached to the border vertex goes too. If the
    border vertex also carries edges that are neither the stub nor inside
    the room, only the stub is removed.
    """
    for bid in sorted(v.id for v in graph.vertices.values() if v.kind is Kind.BORDER):
        if bid not in graph.vertices:
            continue
        b = graph.vertices[bid]
        for eid in graph.outgoing(bid):
            if eid not in graph.halfedges or bid not in graph.vertices:
                continue
            e = graph.halfedges[eid]
            far = graph.vertices[e.target]
            if (far.kind not in (Kind.ORDINARY, Kind.DEAD_END) or far.room_id != -1
                    or graph.degree(far.id) != 1 or e.length >= config.min_len_threshold):
                continue
            rest = [graph.halfedges[o] for o in graph.outgoing(bid) if o != eid]
            inner = [o for o in rest if o.room_id == b.room_id]
            graph.remove_halfedge_pair(eid)
            graph.remove_vertex(far.id)
            if len(inner) == len(rest):
                for o in inner:
                    graph.remove_halfedge_pair(o.id)
                graph.remove_vertex(bid)
    return graph


def demote_enclosed_borders(graph: TopologyGraph) -> TopologyGraph:
    """Border vertices with no edge leaving their room become room-interior vertices.

    This happens when a path merely touches the polygon boundary, e.g. a
    dead end whose tip lies on it: there is no passage out of the room.
    """
    for v in sorted(graph.vertices.values(), key=lambda v: v.id):
        if v.kind is not Kind.BORDER:
            continue
        if all(graph.halfedges[e].room_id == v.room_id for e in graph.outgoing(v.id)):
            v.kind = Kind.ORDINARY
    return graph


def collapse_rooms(graph: TopologyGraph, shapes: AlphaShapeResult) -> TopologyGraph:
    """Replace each room's interior by a centroid vertex with straight star edges."""
    for poly in sorted(shapes.inner, key=lambda p: p.id):
        k = poly.id
        for e in graph.edges():
            if e.room_id == k:
                graph.remove_halfedge_pair(e.id)
        for v in sorted(graph.vertices.values(), key=lambda v: v.id):
            if v.room_id == k and v.kind is not Kind.BORDER:
                graph.remove_vertex_and_edges(v.id)
        border = sorted(v.id for v in graph.vertices.values() if v.kind is Kind.BORDER and v.room_id == k)
        cx, cy = centroid(poly)
        center = graph.add_vertex(cx, cy, room_id=k, kind=Kind.ROOM_CENTER)
        for b in border:
            graph.add_halfedge_pair(center, b, room_id=k)
        graph.rooms.append(Room(k, poly, center, tuple(border)))
    remove_isolated(graph)
    contract_chains(graph)
    return graph


def label_dead_ends(graph: TopologyGraph) -> TopologyGraph:
    for v in graph.vertices.values():
        if v.kind is Kind.ORDINARY and graph.degree(v.id) == 1:
            v.kind = Kind.DEAD_END
    return graph


def detect_rooms(graph: TopologyGraph, shapes: AlphaShapeResult, config: RoomDetectConfig = RoomDetectConfig(),
                 stages: list | None = None) -> TopologyGraph:
    def record(name, g):
        if stages is not None:
            stages.append((name, g.copy()))
        return g

    cuts = find_border_cuts(graph, shapes)
    g = record("apply_all_cuts", apply_all_cuts(graph, cuts, config))
    g = record("assign_room_ids", assign_room_ids(g, shapes, config))
    g = record("remove_short_dead_ends", remove_short_dead_ends(g, config))
    g = record("demote_enclosed_borders", demote_enclosed_borders(g))
    g = record("collapse_rooms", collapse_rooms(g, shapes))
    return g
