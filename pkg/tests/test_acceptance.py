"""Acceptance criteria 1-10.

Each test prints one ``CRITERION n: PASS|FAIL ...`` line; the lines are
repeated in the terminal summary (see conftest.py). Run on its own with

    pytest tests/test_acceptance.py -v
"""
import math
import os
import time

import numpy as np
import pytest
from scipy.ndimage import binary_dilation

from roomtopo.cli import main
from roomtopo.evaluate import match_vertices, run_experiment
from roomtopo.geometry import Polygon, alpha_shape, centroid, signed_area
from roomtopo.gridmap import GridMap, PreprocessConfig, thin_interior, threshold_black
from roomtopo.pipeline import PipelineConfig, build_graph
from roomtopo.render import make_big_room_map, make_two_room_fixture
from roomtopo.roomdetect import CutPoint, cut_halfedge
from roomtopo.topograph import Kind, TopologyGraph, polyline_length, validate

RESULTS: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def star_polygon(rng, n, rmin=1.0, rmax=5.0):
    while True:
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        if gaps.min() > 0.1 and gaps.max() < np.pi:
            break
    radii = rng.uniform(rmin, rmax, n)
    c = rng.uniform(-50, 50, 2)
    return np.column_stack([c[0] + radii * np.cos(angles), c[1] + radii * np.sin(angles)])


def raster_moments(pts, h=1e-3):
    """Area and centroid of the cells (side h) whose centres fall inside the polygon.

    Scanline rasterisation: per row of cell centres the inside x-intervals
    come from the even-odd crossings, and the cells in each interval are
    summed in closed form.
    """
    x0, y0 = pts.min(axis=0) - h
    x1, y1 = pts.max(axis=0) + h
    ys = y0 + (np.arange(int(math.ceil((y1 - y0) / h))) + 0.5) * h
    a, b = pts, np.roll(pts, -1, axis=0)
    ya, yb = a[:, 1][None, :], b[:, 1][None, :]
    Y = ys[:, None]
    crosses = ((ya <= Y) & (Y < yb)) | ((yb <= Y) & (Y < ya))
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = a[:, 0][None, :] + (Y - ya) * (b[:, 0] - a[:, 0])[None, :] / (yb - ya)
    xs = np.sort(np.where(crosses, xs, np.nan), axis=1)
    if xs.shape[1] % 2:
        xs = np.hstack([xs, np.full((len(xs), 1), np.nan)])
    lo, hi = xs[:, 0::2], xs[:, 1::2]
    i0 = np.ceil((lo - x0) / h - 0.5)
    i1 = np.floor((hi - x0) / h - 0.5)
    n = np.where(np.isnan(lo) | np.isnan(hi), 0, np.maximum(i1 - i0 + 1, 0))
    n = np.nan_to_num(n)
    isum = np.where(n > 0, (np.nan_to_num(i0) + np.nan_to_num(i1)) * n / 2, 0)
    sx = np.sum(n * x0 + h * (isum + 0.5 * n))
    cnt = n.sum(axis=1)
    total = cnt.sum()
    return total * h * h, sx / total, float(np.sum(cnt * ys)) / total


def brute_match(base, other):
    per = []
    for bid in sorted(base.vertices):
        bx, by = base.vertices[bid].pos
        best, best_d2 = None, math.inf
        for oid in sorted(other.vertices):
            ox, oy = other.vertices[oid].pos
            dx, dy = bx - ox, by - oy
            if dx * dx + dy * dy < best_d2:
                best, best_d2 = oid, dx * dx + dy * dy
        per.append((bid, best, math.sqrt(best_d2)))
    return per, math.fsum(d for *_, d in per) / len(per)


def isomorphic_within(g1: TopologyGraph, g2: TopologyGraph, tol=1e-6) -> bool:
    """Vertex bijection by position (within tol) that preserves edges, kinds and room ids."""
    if len(g1.vertices) != len(g2.vertices) or g1.edge_count() != g2.edge_count():
        return False
    mapping = {}
    free = dict(g2.vertices)
    for v in g1.vertices.values():
        match = [w for w in free.values() if abs(w.x - v.x) <= tol and abs(w.y - v.y) <= tol]
        if len(match) != 1 or match[0].kind is not v.kind or match[0].room_id != v.room_id:
            return False
        mapping[v.id] = match[0].id
        del free[match[0].id]

    def edge_multiset(g, f):
        return sorted(tuple(sorted((f(e.source), f(e.target)))) for e in g.edges())

    return edge_multiset(g1, mapping.get) == edge_multiset(g2, lambda x: x)


def fixtures():
    base = {
        "two_room": make_two_room_fixture(),
        "two_room_clean": make_two_room_fixture(noise_pixels=0),
        "two_room_seed3": make_two_room_fixture(seed=3),
        "small_rooms": make_two_room_fixture(50, 40, 30, 8, 16, 1),
        "big_rooms": make_big_room_map(),
    }
    thick = {f"{k}_thick": GridMap(binary_dilation(g.cells, np.ones((3, 3), bool))) for k, g in base.items()}
    return {**base, **thick}


# ---------------------------------------------------------------------------

def test_criterion_01_two_room_structure():
    grid = make_two_room_fixture()
    t0 = time.perf_counter()
    g = build_graph(grid, PipelineConfig(rooms=True)).graph
    dt = time.perf_counter() - t0
    kinds = g.kinds()
    degrees = sorted(g.degree(v) for v in g.vertices)
    centers = [v.id for v in g.vertices.values() if v.kind is Kind.ROOM_CENTER]
    chain = (len(g.vertices) == 4 and g.edge_count() == 3 and degrees == [1, 1, 2, 2]
             and all(g.degree(c) == 1 for c in centers)
             and all(g.vertices[n].kind is Kind.BORDER for c in centers for n in g.neighbors(c)))
    ok = kinds[Kind.ROOM_CENTER] == 2 and kinds[Kind.BORDER] == 2 and chain and dt < 5
    report(1, ok, f"{len(g.vertices)} vertices, {g.edge_count()} edges, kinds "
                  f"{ {k.value: n for k, n in kinds.items() if n} }, {dt:.2f}s")


def test_criterion_02_simplification():
    grid = make_two_room_fixture()
    on = build_graph(grid, PipelineConfig(rooms=True))
    off = build_graph(grid, PipelineConfig(rooms=False))
    pos = np.array([v.pos for v in off.graph.vertices.values()])
    per_room = []
    for poly in on.shapes.inner:
        inside = [p for p in pos if _strictly_inside(poly, p)]
        per_room.append(len(inside))
    ok = len(on.graph.vertices) < len(off.graph.vertices) and len(per_room) == 2 and min(per_room) >= 1
    report(2, ok, f"rooms on {len(on.graph.vertices)} < rooms off {len(off.graph.vertices)}; "
                  f"rooms-off vertices inside each room {per_room}")


def _strictly_inside(poly: Polygon, p) -> bool:
    from matplotlib.path import Path as MplPath
    return bool(MplPath(poly.vertices).contains_point(p, radius=-1e-9)) and \
        bool(MplPath(poly.vertices[::-1]).contains_point(p, radius=-1e-9))


def test_criterion_03_centroid_oracle():
    rng = np.random.default_rng(2024)
    worst_c, worst_a = 0.0, 0.0
    for _ in range(50):
        pts = star_polygon(rng, int(rng.integers(5, 13)))
        area, cx, cy = raster_moments(pts)
        ox, oy = centroid(pts)
        worst_c = max(worst_c, abs(ox - cx), abs(oy - cy))
        worst_a = max(worst_a, abs(abs(signed_area(pts)) - area) / area)
    report(3, worst_c < 0.02 and worst_a < 0.005,
           f"max centroid error {worst_c:.2e} px, max relative area error {worst_a:.2e}")


def test_criterion_04_cut_conservation():
    rng = np.random.default_rng(4)
    worst_len, worst_on = 0.0, 0.0
    splits = 0
    for _ in range(1000):
        n = int(rng.integers(2, 8))
        pts = np.cumsum(rng.uniform(-20, 20, (n, 2)), axis=0)
        total = polyline_length(pts)
        g = TopologyGraph()
        a, b = g.add_vertex(*pts[0]), g.add_vertex(*pts[-1])
        g.add_halfedge_pair(a, b, pts)
        d = float(rng.uniform(0, total))
        res = cut_halfedge(g, CutPoint(0, d, 0))
        assert not validate(g)
        if len(res) != 2:
            continue
        splits += 1
        e1, e2 = g.halfedges[res[0]], g.halfedges[res[1]]
        worst_len = max(worst_len, abs(e1.length + e2.length - total))
        p = np.array(g.vertices[e1.target].pos)
        seg_a, seg_b = pts[:-1], pts[1:]
        ab = seg_b - seg_a
        t = np.clip(np.einsum("ij,ij->i", p - seg_a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
        worst_on = max(worst_on, float(np.min(np.hypot(*(seg_a + t[:, None] * ab - p).T))))
    report(4, worst_len <= 1e-6 and worst_on <= 1e-6 and splits > 900,
           f"{splits} splits, max length error {worst_len:.1e}, max off-path {worst_on:.1e}")


def test_criterion_05_matching_oracle():
    rng = np.random.default_rng(5)
    mismatches = 0
    for k in range(100):
        gs = []
        for _ in range(2):
            g = TopologyGraph()
            n = int(rng.integers(1, 101))
            pts = rng.integers(0, 50, (n, 2)) if k % 2 else rng.uniform(0, 200, (n, 2))
            for x, y in pts:
                g.add_vertex(x, y)
            gs.append(g)
        res = match_vertices(*gs)
        per, mean = brute_match(*gs)
        mismatches += res.per_vertex != per or res.mean_distance != mean
    self_mean = match_vertices(gs[0], gs[0]).mean_distance
    report(5, mismatches == 0 and self_mean == 0.0, f"{mismatches} mismatches in 100 pairs, self-match {self_mean}")


@pytest.fixture(scope="module")
def ratio_sweep():
    t0 = time.perf_counter()
    rows = run_experiment(make_big_room_map(), [1, 2], [0.02, 0.05, 0.08, 0.11, 0.14], repeats=10, seed=0,
                          workers=min(4, os.cpu_count() or 1))
    return rows, time.perf_counter() - t0


def test_criterion_06_ratio_trend(ratio_sweep):
    rows, dt = ratio_sweep
    ratios = [r.ratio_percent for r in rows]
    below = sum(r < 100 for r in ratios)
    mean = sum(ratios) / len(ratios)
    table = " ".join(f"({r.d_r},{r.p * 100:g}%)={r.ratio_percent:.0f}" for r in rows)
    report(6, len(rows) == 10 and below >= 8 and mean < 85 and dt < 180,
           f"{below}/10 cells below 100%, mean ratio {mean:.1f}%, {dt:.0f}s; {table}")


def test_criterion_07_noise_percentage_insensitivity(ratio_sweep):
    rows, _ = ratio_sweep
    r1 = [r.ratio_percent for r in rows if r.d_r == 1]
    spread = max(r1) - min(r1)
    report(7, len(r1) == 5 and spread < 40, f"d_r=1 ratio spread {spread:.1f} pp over {len(r1)} p values")


def test_criterion_08_determinism(tmp_path):
    grid_path = tmp_path / "map.pgm"
    assert main(["fixture", "--out", str(grid_path)]) == 0
    csvs, jsons, svgs = [], [], []
    for run in range(2):
        out = tmp_path / f"t{run}.csv"
        assert main(["evaluate", "--base", str(grid_path), "--dr", "1,2", "--percent", "2,8", "--repeats", "2",
                     "--seed", "11", "--out", str(out)]) == 0
        csvs.append(out.read_bytes())
        g, s = tmp_path / f"g{run}.json", tmp_path / f"g{run}.svg"
        assert main(["build-graph", str(grid_path), "--out", str(g), "--svg", str(s)]) == 0
        jsons.append(g.read_bytes())
        svgs.append(s.read_bytes())
    ok = csvs[0] == csvs[1] and jsons[0] == jsons[1] and svgs[0] == svgs[1]
    report(8, ok, f"csv {csvs[0] == csvs[1]}, json {jsons[0] == jsons[1]}, svg {svgs[0] == svgs[1]}")


def test_criterion_09_invariants():
    stage_checks = violations = 0
    thinning_ok = []
    for name, grid in fixtures().items():
        for rooms in (True, False):
            res = build_graph(grid, PipelineConfig(rooms=rooms), keep_stages=True)
            for _, g in res.stages + [("final", res.graph)]:
                stage_checks += 1
                violations += len(validate(g))
            thinned = build_graph(thin_interior(grid, 8), PipelineConfig(rooms=rooms)).graph
            thinning_ok.append(isomorphic_within(res.graph, thinned))
    rng = np.random.default_rng(9)
    class_mismatch = 0
    for _ in range(10):
        pts = rng.integers(0, 60, (int(rng.integers(20, 201)), 2)).astype(float)
        alpha = float(rng.uniform(2, 100))
        shapes = alpha_shape(pts, alpha, min_room_area=0)
        tri = shapes.triangulation
        for t, is_open in zip(tri.triangles, shapes.open_mask):
            p, q, r = (tuple(x) for x in tri.points[t])
            la, lb, lc = math.dist(q, r), math.dist(p, r), math.dist(p, q)
            k16 = (la + lb + lc) * (-la + lb + lc) * (la - lb + lc) * (la + lb - lc)
            r2 = math.inf if k16 <= 0 else (la * lb * lc) ** 2 / k16
            if abs(r2 - alpha) > 1e-9 * alpha:
                class_mismatch += is_open != (r2 >= alpha)
    ok = violations == 0 and all(thinning_ok) and class_mismatch == 0
    report(9, ok, f"{violations} violations over {stage_checks} stage graphs, thinning invariant on "
                  f"{sum(thinning_ok)}/{len(thinning_ok)} fixture runs, {class_mismatch} alpha misclassifications")


def test_criterion_10_preprocessing():
    boundary = np.array([[[100, 0, 0], [50, 50, 1], [34, 33, 33], [0, 0, 101]]], dtype=np.uint8)
    thresh_ok = threshold_black(boundary, PreprocessConfig()).cells.tolist() == [[True, False, True, False]]
    rng = np.random.default_rng(10)
    mismatched = 0
    for k in range(20):
        cells = rng.random((64, 64)) < (0.5 + 0.45 * (k % 3) / 2)
        grid = GridMap(cells)
        expected = cells.copy()
        for y in range(1, 63):
            for x in range(1, 63):
                if cells[y, x] and cells[y - 1:y + 2, x - 1:x + 2].all():
                    expected[y, x] = False
        mismatched += not np.array_equal(thin_interior(grid, 8).cells, expected)
    report(10, thresh_ok and mismatched == 0,
           f"threshold inclusive at 100: {thresh_ok}; thinning mismatches on 20 random maps: {mismatched}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
