#!/usr/bin/env python3
"""Detected rooms and final graph size on the fixture as alpha varies."""
import argparse

import numpy as np

from roomtopo.errors import TopoError
from roomtopo.pipeline import PipelineConfig, build_graph
from roomtopo.render import make_two_room_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", default="25,50,100,150,200,300,400,800,1600")
    ap.add_argument("--seeds", type=int, default=5, help="fixture noise seeds per alpha")
    args = ap.parse_args()
    print("alpha,rooms,vertices_mean,chain4_fraction")
    for alpha in (float(a) for a in args.alphas.split(",")):
        rooms, verts, chains = [], [], 0
        for seed in range(args.seeds):
            try:
                g = build_graph(make_two_room_fixture(seed=seed), PipelineConfig(alpha=alpha)).graph
            except TopoError as exc:
                print(f"{alpha:g}: seed {seed} failed: {exc}")
                continue
            rooms.append(len(g.rooms))
            verts.append(len(g.vertices))
            chains += len(g.vertices) == 4 and g.edge_count() == 3 and len(g.rooms) == 2
        if rooms:
            print(f"{alpha:g},{'/'.join(map(str, sorted(set(rooms))))},{np.mean(verts):.1f},{chains / len(rooms):.2f}")


if __name__ == "__main__":
    main()
