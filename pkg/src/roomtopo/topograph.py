"""Half-edge Topology Graph with metric paths, room ids and JSON I/O."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError
from .geometry import Polygon

ENDPOINT_TOL = 1e-9


class Kind(str, enum.Enum):
    ORDINARY = "ordinary"
    BORDER = "border"
    ROOM_CENTER = "room_center"
    DEAD_END = "dead_end"


class Path:
    """Polyline from a half-edge's source to its target."""

    __slots__ = ("points", "length")

    def __init__(self, points):
        pts = np.array(points, dtype=np.float64).reshape(-1, 2)
        if len(pts) < 2:
            raise GraphError("a path needs at least 2 points")
        pts.setflags(write=False)
        self.points = pts
        self.length = polyline_length(pts)

    def reversed(self) -> "Path":
        return Path(self.points[::-1])

    @property
    def start(self) -> tuple[float, float]:
        return float(self.points[0, 0]), float(self.points[0, 1])

    @property
    def end(self) -> tuple[float, float]:
        return float(self.points[-1, 0]), float(self.points[-1, 1])

    def point_at(self, distance: float) -> tuple[float, float]:
        return split_polyline(self.points, distance)[2]

    def __eq__(self, other):
        return isinstance(other, Path) and np.array_equal(self.points, other.points)

    def __repr__(self):
        return f"Path({len(self.points)} pts, length={self.length:.3f})"


def polyline_length(points: np.ndarray) -> float:
    d = np.diff(points, axis=0)
    return math.fsum(np.hypot(d[:, 0], d[:, 1]))


def split_polyline(points: np.ndarray, distance: float):
    """Split a polyline at an arc-length distance.

    Walks the segments, summing their lengths until the running total
    passes ``distance``, and interpolates inside that segment. Returns
    ``(head, tail, point)``; the split point ends ``head`` and starts ``tail``.
    """
    points = np.asarray(points, dtype=np.float64)
    seg = np.hypot(*np.diff(points, axis=0).T)
    acc = 0.0
    k = len(seg) - 1
    for i, s in enumerate(seg):
        if acc + s >= distance:
            k = i
            break
        acc += s
    s = seg[k]
    frac = 0.0 if s == 0 else min(max((distance - acc) / s, 0.0), 1.0)
    a, b = points[k], points[k + 1]
    p = a + frac * (b - a)
    head = np.vstack([points[:k + 1], p])
    tail = np.vstack([p, points[k + 1:]])
    # drop zero-length stubs next to the split point
    if len(head) > 2 and np.array_equal(head[-1], head[-2]):
        head = np.delete(head, -2, axis=0)
    if len(tail) > 2 and np.array_equal(tail[0], tail[1]):
        tail = np.delete(tail, 1, axis=0)
    return head, tail, (float(p[0]), float(p[1]))


@dataclass
class Vertex:
    id: int
    x: float
    y: float
    room_id: int = -1
    kind: Kind = Kind.ORDINARY

    @property
    def pos(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def is_border(self) -> bool:
        return self.kind is Kind.BORDER


@dataclass
class HalfEdge:
    id: int
    source: int
    target: int
    twin: int
    path: Path
    room_id: int = -1
    clearance: float | None = field(default=None, compare=False)

    @property
    def length(self) -> float:
        return self.path.length


@dataclass
class Room:
    polygon_id: int
    polygon: Polygon
    center_vertex: int
    border_vertices: tuple[int, ...] = ()


class TopologyGraph:
    """Doubly connected edge list restricted to vertices and half-edges.

    Undirected edges always exist as twin pairs; ids are dense and never
    reused within one graph.
    """

    def __init__(self):
        self.vertices: dict[int, Vertex] = {}
        self.halfedges: dict[int, HalfEdge] = {}
        self.rooms: list[Room] = []
        self._out: dict[int, list[int]] = {}
        self._next_vertex = 0
        self._next_edge = 0

    # -- editing primitives -------------------------------------------------

    def add_vertex(self, x: float, y: float, room_id: int = -1, kind: Kind = Kind.ORDINARY) -> int:
        vid = self._next_vertex
        self._next_vertex += 1
        self.vertices[vid] = Vertex(vid, float(x), float(y), room_id, Kind(kind))
        self._out[vid] = []
        return vid

    def add_halfedge_pair(self, source: int, target: int, points=None, room_id: int = -1,
                          clearance: float | None = None) -> tuple[int, int]:
        if source not in self.vertices or target not in self.vertices:
            raise GraphError(f"dangling vertex reference in edge {source}->{target}")
        if source == target:
            raise GraphError(f"self-loop at vertex {source}")
        if points is None:
            points = [self.vertices[source].pos, self.vertices[target].pos]
        path = Path(points)
        e, t = self._next_edge, self._next_edge + 1
        self._next_edge += 2
        self.halfedges[e] = HalfEdge(e, source, target, t, path, room_id, clearance)
        self.halfedges[t] = HalfEdge(t, target, source, e, path.reversed(), room_id, clearance)
        self._out[source].append(e)
        self._out[target].append(t)
        return e, t

    def remove_halfedge_pair(self, eid: int) -> None:
        e = self.halfedges.get(eid)
        if e is None:
            raise GraphError(f"unknown half-edge {eid}")
        t = self.halfedges.get(e.twin)
        if t is None:
            raise GraphError(f"half-edge {eid} has no live twin")
        del self.halfedges[e.id], self.halfedges[t.id]
        self._out[e.source].remove(e.id)
        self._out[t.source].remove(t.id)

    def remove_vertex(self, vid: int) -> None:
        if vid not in self.vertices:
            raise GraphError(f"unknown vertex {vid}")
        if self._out[vid]:
            raise GraphError(f"vertex {vid} still has {len(self._out[vid])} incident edges")
        del self.vertices[vid], self._out[vid]

    def remove_vertex_and_edges(self, vid: int) -> None:
        for e in list(self._out.get(vid, ())):
            if e in self.halfedges:
                self.remove_halfedge_pair(e)
        self.remove_vertex(vid)

    # -- queries --------------------------------------------------------------

    def degree(self, vid: int) -> int:
        try:
            return len(self._out[vid])
        except KeyError:
            raise GraphError(f"unknown vertex {vid}") from None

    def outgoing(self, vid: int) -> list[int]:
        """Half-edges whose source is ``vid`` (copy, safe to mutate the graph)."""
        return list(self._out[vid])

    def neighbors(self, vid: int) -> list[int]:
        return [self.halfedges[e].target for e in self._out[vid]]

    def edges(self) -> list[HalfEdge]:
        """One half-edge per undirected edge (the lower id of each pair)."""
        return [e for eid, e in sorted(self.halfedges.items()) if eid < e.twin]

    def edge_count(self) -> int:
        return len(self.halfedges) // 2

    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges())

    def copy(self) -> "TopologyGraph":
        g = TopologyGraph()
        g.vertices = {k: Vertex(v.id, v.x, v.y, v.room_id, v.kind) for k, v in self.vertices.items()}
        g.halfedges = {k: HalfEdge(e.id, e.source, e.target, e.twin, e.path, e.room_id, e.clearance)
                       for k, e in self.halfedges.items()}
        g.rooms = [Room(r.polygon_id, r.polygon, r.center_vertex, r.border_vertices) for r in self.rooms]
        g._out = {k: list(v) for k, v in self._out.items()}
        g._next_vertex, g._next_edge = self._next_vertex, self._next_edge
        return g

    def kinds(self) -> dict[Kind, int]:
        out = {k: 0 for k in Kind}
        for v in self.vertices.values():
            out[v.kind] += 1
        return out

    def __eq__(self, other):
        if not isinstance(other, TopologyGraph):
            return NotImplemented
        return to_dict(self) == to_dict(other)

    def __repr__(self):
        return f"TopologyGraph({len(self.vertices)} vertices, {self.edge_count()} edges, {len(self.rooms)} rooms)"


# ---------------------------------------------------------------------------
# validation

def validate(graph: TopologyGraph) -> list[str]:
    """Human readable invariant violations; empty when the graph is sound."""
    problems = []
    for eid, e in sorted(graph.halfedges.items()):
        if e.id != eid:
            problems.append(f"halfedge {eid}: id field is {e.id}")
        for role, vid in (("source", e.source), ("target", e.target)):
            if vid not in graph.vertices:
                problems.append(f"halfedge {eid}: {role} vertex {vid} missing")
        t = graph.halfedges.get(e.twin)
        if t is None:
            problems.append(f"halfedge {eid}: twin {e.twin} missing")
            continue
        if t.twin != eid:
            problems.append(f"halfedge {eid}: twin involution broken (twin of twin is {t.twin})")
        if t.source != e.target or t.target != e.source:
            problems.append(f"halfedge {eid}: twin does not swap source and target")
        if not np.array_equal(t.path.points, e.path.points[::-1]):
            problems.append(f"halfedge {eid}: twin path is not the reversed polyline")
        src, dst = graph.vertices.get(e.source), graph.vertices.get(e.target)
        if src is not None and dst is not None:
            if (math.dist(e.path.start, src.pos) > ENDPOINT_TOL
                    or math.dist(e.path.end, dst.pos) > ENDPOINT_TOL):
                problems.append(f"halfedge {eid}: path endpoints do not match vertex positions")
        if abs(e.path.length - polyline_length(e.path.points)) > ENDPOINT_TOL:
            problems.append(f"halfedge {eid}: cached path length is stale")
    by_source: dict[int, list[int]] = {}
    for e in graph.halfedges.values():
        by_source.setdefault(e.source, []).append(e.id)
    for vid, v in sorted(graph.vertices.items()):
        if v.id != vid:
            problems.append(f"vertex {vid}: id field is {v.id}")
        if v.kind is Kind.BORDER and v.room_id < 0:
            problems.append(f"vertex {vid}: border vertex without room id")
        if sorted(graph._out.get(vid, [])) != sorted(by_source.get(vid, [])):
            problems.append(f"vertex {vid}: incident half-edge list out of sync")
    for vid in graph._out:
        if vid not in graph.vertices:
            problems.append(f"incidence list for deleted vertex {vid}")
    for room in graph.rooms:
        c = graph.vertices.get(room.center_vertex)
        if c is None or c.kind is not Kind.ROOM_CENTER:
            problems.append(f"room {room.polygon_id}: center vertex {room.center_vertex} is not a room center")
        for b in room.border_vertices:
            if b not in graph.vertices:
                problems.append(f"room {room.polygon_id}: border vertex {b} missing")
    return problems


def check(graph: TopologyGraph) -> TopologyGraph:
    problems = validate(graph)
    if problems:
        raise GraphError("invalid topology graph: " + "; ".join(problems[:5]))
    return graph


# ---------------------------------------------------------------------------
# JSON

def to_dict(graph: TopologyGraph) -> dict:
    return {
        "vertices": [
            {"id": v.id, "x": v.x, "y": v.y, "room_id": v.room_id, "kind": v.kind.value}
            for _, v in sorted(graph.vertices.items())
        ],
        "halfedges": [
            {"id": e.id, "source": e.source, "target": e.target, "twin": e.twin,
             "room_id": e.room_id, "path": e.path.points.tolist()}
            for _, e in sorted(graph.halfedges.items())
        ],
        "rooms": [
            {"polygon_id": r.polygon_id, "center_vertex": r.center_vertex,
             "border_vertices": sorted(r.border_vertices), "polygon": r.polygon.vertices.tolist()}
            for r in sorted(graph.rooms, key=lambda r: r.polygon_id)
        ],
    }


def serialize(graph: TopologyGraph) -> str:
    return json.dumps(to_dict(graph), indent=1) + "\n"


def from_dict(doc: dict) -> TopologyGraph:
    g = TopologyGraph()
    try:
        for v in doc["vertices"]:
            vid = int(v["id"])
            if vid in g.vertices:
                raise GraphError(f"duplicate vertex id {vid}")
            g.vertices[vid] = Vertex(vid, float(v["x"]), float(v["y"]), int(v["room_id"]), Kind(v["kind"]))
            g._out[vid] = []
        for e in doc["halfedges"]:
            eid = int(e["id"])
            if eid in g.halfedges:
                raise GraphError(f"duplicate half-edge id {eid}")
            he = HalfEdge(eid, int(e["source"]), int(e["target"]), int(e["twin"]),
                          Path(e["path"]), int(e["room_id"]))
            g.halfedges[eid] = he
            if he.source in g._out:
                g._out[he.source].append(eid)
        for r in doc["rooms"]:
            g.rooms.append(Room(int(r["polygon_id"]), Polygon(r["polygon"], int(r["polygon_id"])),
                                int(r["center_vertex"]), tuple(sorted(int(b) for b in r["border_vertices"]))))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed graph document: {exc!r}") from None
    g._next_vertex = max(g.vertices, default=-1) + 1
    g._next_edge = max(g.halfedges, default=-1) + 1
    return check(g)


def deserialize(text: str) -> TopologyGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed graph JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise GraphError("graph JSON must be an object")
    return from_dict(doc)


def save_graph(graph: TopologyGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(graph))


def load_graph(path) -> TopologyGraph:
    with open(path) as fh:
        return deserialize(fh.read())
