"""End-to-end graph construction from a grid map."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import stage
from .geometry import AlphaShapeResult, alpha_shape
from .gridmap import GridMap, PreprocessConfig, occupied_points
from .roomdetect import RoomDetectConfig, detect_rooms, label_dead_ends
from .skeleton import SkeletonConfig, build_skeleton
from .topograph import TopologyGraph, check


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float = 200.0
    min_room_area: float | None = None  # default 4 * alpha
    rooms: bool = True
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    skeleton: SkeletonConfig = field(default_factory=SkeletonConfig)
    roomdetect: RoomDetectConfig = field(default_factory=RoomDetectConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class BuildResult:
    graph: TopologyGraph
    shapes: AlphaShapeResult
    stages: list = field(default_factory=list)


def build_graph(grid: GridMap, config: PipelineConfig = PipelineConfig(), keep_stages: bool = False) -> BuildResult:
    """Grid map -> Topology Graph, with or without room detection.

    The alpha shape is computed in both modes: its outer polygon trims the
    Voronoi skeleton, its inner polygons are the rooms.
    """
    stages = [] if keep_stages else None
    with stage("geometry"):
        shapes = alpha_shape(occupied_points(grid), config.alpha, config.min_room_area)
    with stage("skeleton"):
        graph = build_skeleton(grid, shapes.outer, config.skeleton, stages)
    if config.rooms:
        with stage("roomdetect"):
            graph = detect_rooms(graph, shapes, config.roomdetect, stages)
    label_dead_ends(graph)
    with stage("topograph"):
        check(graph)
    return BuildResult(graph, shapes, stages or [])
