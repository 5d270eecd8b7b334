import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roomtopo.errors import GraphError
from roomtopo.geometry import AlphaShapeResult, Polygon, centroid, point_segment_distance
from roomtopo.roomdetect import (CutPoint, RoomDetectConfig, apply_all_cuts, assign_room_ids, collapse_rooms,
                                 cut_halfedge, demote_enclosed_borders, find_border_cuts, remove_short_dead_ends)
from roomtopo.topograph import Kind, TopologyGraph, polyline_length, validate

ROOM = [(20, 0), (60, 0), (60, 40), (20, 40)]


def shapes_of(*rooms):
    """Hand-made alpha shape result: rooms get ids 0.., plus a large outer polygon."""
    polys = [Polygon(r, i) for i, r in enumerate(rooms)]
    outer = Polygon([(-1000, -1000), (1000, -1000), (1000, 1000), (-1000, 1000)], len(polys))
    return AlphaShapeResult(1.0, polys + [outer], len(polys), None, None)


def line_graph(*coords):
    g = TopologyGraph()
    ids = [g.add_vertex(*c) for c in coords]
    for a, b in zip(ids, ids[1:]):
        g.add_halfedge_pair(a, b)
    return g, ids


def boundary_distance(poly, p):
    a, b = poly.edges()
    return float(np.min(point_segment_distance(np.array(p, float), a, b)))


def arc_point(points, d):
    """Independent arc-length oracle: walk with many tiny steps."""
    pts = np.asarray(points, float)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    cum = np.concatenate([[0], np.cumsum(seg)])
    k = min(np.searchsorted(cum, d, side="right") - 1, len(seg) - 1)
    return pts[k] + (d - cum[k]) / seg[k] * (pts[k + 1] - pts[k])


class TestFindCuts:
    def test_no_polygons(self):
        g, _ = line_graph((0, 0), (10, 0))
        assert find_border_cuts(g, shapes_of()) == []

    def test_midpoint_crossing(self):
        g, _ = line_graph((15, 20), (25, 20))
        cuts = find_border_cuts(g, shapes_of(ROOM))
        assert cuts == [CutPoint(0, 5.0, 0)]

    def test_corridor_room_corridor(self):
        g, _ = line_graph((0, 20), (80, 20))
        cuts = find_border_cuts(g, shapes_of(ROOM))
        assert [c.cut_distance for c in cuts] == [20.0, 60.0]
        apply_all_cuts(g, cuts)
        assert validate(g) == []
        poly = Polygon(ROOM)
        border = [v for v in g.vertices.values() if v.kind is Kind.BORDER]
        assert len(border) == 2
        for v in border:
            assert boundary_distance(poly, v.pos) < 0.5


class TestCutHalfedge:
    def test_cut_at_zero_marks_source(self):
        g, ids = line_graph((0, 0), (10, 0))
        assert cut_halfedge(g, CutPoint(0, 0.0, 3)) == [0]
        assert g.vertices[ids[0]].kind is Kind.BORDER and g.vertices[ids[0]].room_id == 3
        assert g.edge_count() == 1

    def test_cut_at_end_marks_target(self):
        g, ids = line_graph((0, 0), (10, 0))
        assert cut_halfedge(g, CutPoint(0, 10.0 - 1e-9, 1)) == [0]
        assert g.vertices[ids[1]].kind is Kind.BORDER

    def test_straight_cut(self):
        g, ids = line_graph((0, 0), (10, 0))
        first, second = cut_halfedge(g, CutPoint(0, 4.0, 0))
        e1, e2 = g.halfedges[first], g.halfedges[second]
        assert e1.source == ids[0] and e2.target == ids[1]
        assert g.vertices[e1.target].pos == (4.0, 0.0)
        assert (e1.length, e2.length) == (4.0, 6.0)
        assert validate(g) == []

    def test_curved_path(self):
        pts = [(0, 0), (4, 0), (4, 4), (8, 4)]  # length 12
        g = TopologyGraph()
        a, b = g.add_vertex(0, 0), g.add_vertex(8, 4)
        g.add_halfedge_pair(a, b, pts)
        first, second = cut_halfedge(g, CutPoint(0, 7.0, 0))
        assert abs(g.halfedges[first].length - 7) < 1e-9
        assert g.vertices[g.halfedges[first].target].pos == pytest.approx(tuple(arc_point(pts, 7)), abs=1e-12)

    @pytest.mark.parametrize("d", [-1.0, 11.0, math.nan])
    def test_out_of_range(self, d):
        g, _ = line_graph((0, 0), (10, 0))
        with pytest.raises(GraphError):
            cut_halfedge(g, CutPoint(0, d, 0))

    def test_dead_halfedge(self):
        g, _ = line_graph((0, 0), (10, 0))
        with pytest.raises(GraphError):
            cut_halfedge(g, CutPoint(42, 1.0, 0))

    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=2, max_size=6, unique=True),
           st.floats(0.01, 0.99))
    def test_conservation(self, pts, frac):
        pts = np.array(pts, float)
        total = polyline_length(pts)
        if total < 1e-3:
            return
        g = TopologyGraph()
        a, b = g.add_vertex(*pts[0]), g.add_vertex(*pts[-1])
        if a == b or np.array_equal(pts[0], pts[-1]):
            return
        g.add_halfedge_pair(a, b, pts)
        res = cut_halfedge(g, CutPoint(0, frac * total, 0))
        if len(res) == 2:
            assert sum(g.halfedges[e].length for e in res) == pytest.approx(total, abs=1e-6)
        assert validate(g) == []


class TestApplyCuts:
    def test_empty_identity(self):
        g, _ = line_graph((0, 0), (10, 0))
        before = g.copy()
        assert apply_all_cuts(g, []) == before

    def test_two_cuts(self):
        g, ids = line_graph((0, 0), (10, 0))
        apply_all_cuts(g, [CutPoint(0, 3.0, 0), CutPoint(0, 7.0, 0)])
        lengths = sorted(round(e.length, 12) for e in g.edges())
        assert lengths == [3.0, 3.0, 4.0]
        assert sum(v.kind is Kind.BORDER for v in g.vertices.values()) == 2
        # the fragments form one chain in the original order
        chain, cur, prev = [ids[0]], ids[0], None
        while cur != ids[1]:
            nxt = [n for n in g.neighbors(cur) if n != prev][0]
            prev, cur = cur, nxt
            chain.append(cur)
        assert [g.vertices[v].x for v in chain] == [0, 3, 7, 10]

    def test_fixture_border_vertices_on_boundary(self, built_rooms):
        g = dict(built_rooms.stages)["apply_all_cuts"]
        polys = {p.id: p for p in built_rooms.shapes.inner}
        border = [v for v in g.vertices.values() if v.kind is Kind.BORDER]
        assert border
        for v in border:
            assert boundary_distance(polys[v.room_id], v.pos) < 0.5


class TestAssign:
    def test_centroid_vertex_in_room(self):
        g = TopologyGraph()
        v = g.add_vertex(*centroid(ROOM))
        assign_room_ids(g, shapes_of(ROOM))
        assert g.vertices[v].room_id == 0

    def test_outside_edge_default(self):
        g, ids = line_graph((100, 100), (120, 100))
        assign_room_ids(g, shapes_of(ROOM))
        assert all(e.room_id == -1 for e in g.halfedges.values())

    def test_inside_edge_gets_room(self):
        g, ids = line_graph((30, 10), (50, 30))
        assign_room_ids(g, shapes_of(ROOM))
        assert {e.room_id for e in g.halfedges.values()} == {0}

    def test_short_dead_end_inherits(self):
        g = TopologyGraph()
        b = g.add_vertex(60, 20, room_id=0, kind=Kind.BORDER)
        inner = g.add_vertex(40, 20)
        stub = g.add_vertex(69, 32)  # 15 px outside
        g.add_halfedge_pair(inner, b)
        e, t = g.add_halfedge_pair(b, stub)
        assign_room_ids(g, shapes_of(ROOM))
        assert g.halfedges[e].room_id == 0 and g.halfedges[t].room_id == 0
        assert g.vertices[stub].room_id == -1

    def test_long_dead_end_not_inherited(self):
        g = TopologyGraph()
        b = g.add_vertex(60, 20, room_id=0, kind=Kind.BORDER)
        stub = g.add_vertex(110, 20)
        e, _ = g.add_halfedge_pair(b, stub)
        assign_room_ids(g, shapes_of(ROOM))
        assert g.halfedges[e].room_id == -1

    def test_lower_polygon_id_wins(self):
        g = TopologyGraph()
        v = g.add_vertex(30, 10)
        assign_room_ids(g, shapes_of(ROOM, [(0, 0), (100, 0), (100, 100), (0, 100)]))
        assert g.vertices[v].room_id == 0


def corner_stub_graph(stub_len):
    g = TopologyGraph()
    b = g.add_vertex(60, 20, room_id=0, kind=Kind.BORDER)
    inner = g.add_vertex(40, 20)
    other = g.add_vertex(30, 10)
    g.add_halfedge_pair(inner, other)
    g.add_halfedge_pair(b, inner)
    b2 = g.add_vertex(20, 20, room_id=0, kind=Kind.BORDER)
    g.add_halfedge_pair(inner, b2)
    g.add_halfedge_pair(b2, g.add_vertex(0, 20))
    stub = g.add_vertex(60 + stub_len * 0.6, 20 + stub_len * 0.8)
    g.add_halfedge_pair(b, stub)
    return g, b, stub


class TestRemoveShortDeadEnds:
    def test_no_dead_ends_identity(self):
        g, ids = line_graph((0, 0), (10, 0), (10, 10), (0, 10))
        g.add_halfedge_pair(ids[-1], ids[0])
        before = g.copy()
        assert remove_short_dead_ends(g) == before

    def test_corner_stub_removed(self):
        g, b, stub = corner_stub_graph(15)
        assign_room_ids(g, shapes_of(ROOM))
        remove_short_dead_ends(g)
        assert b not in g.vertices and stub not in g.vertices
        assert all(b not in (e.source, e.target) for e in g.halfedges.values())
        assert validate(g) == []

    def test_long_stub_kept(self):
        g, b, stub = corner_stub_graph(50)
        assign_room_ids(g, shapes_of(ROOM))
        before = g.copy()
        assert remove_short_dead_ends(g) == before


def test_touching_dead_end_is_not_a_border():
    # a dead end whose tip lies exactly on the room boundary
    g, ids = line_graph((40, 20), (60, 20))
    shapes = shapes_of(ROOM)
    apply_all_cuts(g, find_border_cuts(g, shapes))
    assert g.vertices[ids[1]].kind is Kind.BORDER
    assign_room_ids(g, shapes)
    demote_enclosed_borders(g)
    assert g.vertices[ids[1]].kind is Kind.ORDINARY
    collapse_rooms(g, shapes)
    (room,) = g.rooms
    assert room.border_vertices == () and len(g.vertices) == 1


def test_crossing_border_survives_demotion():
    g, ids = line_graph((40, 20), (100, 20))
    shapes = shapes_of(ROOM)
    apply_all_cuts(g, find_border_cuts(g, shapes))
    assign_room_ids(g, shapes)
    demote_enclosed_borders(g)
    assert sum(v.kind is Kind.BORDER for v in g.vertices.values()) == 1


class TestCollapse:
    def test_two_border_star(self):
        g, ids = line_graph((0, 20), (80, 20))
        shapes = shapes_of(ROOM)
        apply_all_cuts(g, find_border_cuts(g, shapes))
        assign_room_ids(g, shapes)
        collapse_rooms(g, shapes)
        (room,) = g.rooms
        center = g.vertices[room.center_vertex]
        assert center.kind is Kind.ROOM_CENTER and center.pos == (40.0, 20.0)
        assert g.degree(center.id) == 2 == len(room.border_vertices)
        assert validate(g) == []

    def test_untouched_polygon_keeps_center(self):
        g, _ = line_graph((100, 100), (120, 100))
        shapes = shapes_of(ROOM)
        collapse_rooms(g, shapes)
        (room,) = g.rooms
        assert g.degree(room.center_vertex) == 0

    def test_end_to_end_fixture(self, built_rooms):
        g = built_rooms.graph
        kinds = g.kinds()
        assert len(g.vertices) == 4 and g.edge_count() == 3
        assert kinds[Kind.ROOM_CENTER] == 2 and kinds[Kind.BORDER] == 2
        for room in g.rooms:
            assert g.degree(room.center_vertex) == len(room.border_vertices)

    def test_room_ids_after_collapse(self, built_rooms):
        g = built_rooms.graph
        for v in g.vertices.values():
            if v.room_id >= 0:
                assert v.kind in (Kind.BORDER, Kind.ROOM_CENTER)
        centers = {r.center_vertex for r in g.rooms}
        for e in g.halfedges.values():
            if e.room_id >= 0:
                assert e.source in centers or e.target in centers

    def test_all_stages_valid(self, built_rooms):
        for name, g in built_rooms.stages:
            assert validate(g) == [], name


def test_config_validation():
    from roomtopo.errors import ConfigError
    with pytest.raises(ConfigError):
        RoomDetectConfig(epsilon=0)
    with pytest.raises(ConfigError):
        RoomDetectConfig(min_len_threshold=-1)
