#!/usr/bin/env python3
"""SVG figures for the two-room fixture.

fixture_voronoi.svg   skeleton without room detection; edges dropped as
                      outside the map drawn in green
fixture_rooms.svg     alpha shape polygons, room fill and the room graph
fixture_stages/*.svg  one file per pipeline stage
"""
import argparse
import os

from roomtopo.geometry import alpha_shape
from roomtopo.gridmap import occupied_points
from roomtopo.pipeline import PipelineConfig, build_graph
from roomtopo.render import make_two_room_fixture, render_graph
from roomtopo.skeleton import filter_clearance, skeleton_from_map


def main():
    ap = argparse.ArgumentParser(description="render fixture figures")
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise-pixels", type=int, default=12)
    ap.add_argument("--alpha", type=float, default=200.0)
    args = ap.parse_args()
    os.makedirs(os.path.join(args.out_dir, "fixture_stages"), exist_ok=True)

    grid = make_two_room_fixture(noise_pixels=args.noise_pixels, seed=args.seed)
    config = PipelineConfig(alpha=args.alpha)
    shapes = alpha_shape(occupied_points(grid), args.alpha)

    noroom = build_graph(grid, config.replace(rooms=False), keep_stages=True)
    stages = dict(noroom.stages)
    unfiltered = filter_clearance(skeleton_from_map(grid, config.skeleton.min_clearance),
                                  config.skeleton.min_clearance)
    render_graph(grid, stages["filter_outside"], None, os.path.join(args.out_dir, "fixture_voronoi.svg"),
                 extra_edges=unfiltered, labels=False)

    rooms = build_graph(grid, config, keep_stages=True)
    render_graph(grid, rooms.graph, shapes, os.path.join(args.out_dir, "fixture_rooms.svg"))
    for i, (name, g) in enumerate(rooms.stages):
        path = os.path.join(args.out_dir, "fixture_stages", f"{i:02d}_{name}.svg")
        render_graph(grid, g, shapes, path, labels=False)
    print(f"rooms off: {noroom.graph}; rooms on: {rooms.graph}; figures in {args.out_dir}/")


if __name__ == "__main__":
    main()
