"""Nearest-vertex matching and the room / no-room stability experiment."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError, MapIOError, TopoError
from .gridmap import GridMap
from .noise import NoiseConfig, randomize
from .pipeline import PipelineConfig, build_graph
from .topograph import TopologyGraph

log = logging.getLogger(__name__)

CSV_COLUMNS = ["d_r", "percent", "mean_room", "mean_noroom", "ratio_percent"]
BASE_SEED_TAG = 0xBA5E


@dataclass
class MatchResult:
    per_vertex: list[tuple[int, int, float]]
    mean_distance: float


@dataclass
class ExperimentRow:
    d_r: int
    p: float
    mean_room: float
    mean_noroom: float
    ratio_percent: float
    failures: int = field(default=0, compare=False)


def _positions(graph: TopologyGraph) -> tuple[list[int], np.ndarray]:
    ids = sorted(graph.vertices)
    return ids, np.array([graph.vertices[v].pos for v in ids], dtype=np.float64).reshape(-1, 2)


def match_vertices(base: TopologyGraph, other: TopologyGraph, chunk: int = 1024) -> MatchResult:
    """Match every base vertex to its Euclidean-nearest vertex of ``other``.

    Ties go to the lowest vertex id. Exhaustive search in chunks.
    """
    if not base.vertices or not other.vertices:
        raise GraphError("cannot match graphs without vertices")
    bids, bpos = _positions(base)
    oids, opos = _positions(other)
    per_vertex = []
    for lo in range(0, len(bids), chunk):
        dx = bpos[lo:lo + chunk, None, 0] - opos[None, :, 0]
        dy = bpos[lo:lo + chunk, None, 1] - opos[None, :, 1]
        d2 = dx * dx + dy * dy
        best = np.argmin(d2, axis=1)
        dist = np.sqrt(d2[np.arange(len(best)), best])
        for i, (j, d) in enumerate(zip(best.tolist(), dist.tolist())):
            per_vertex.append((bids[lo + i], oids[j], d))
    mean = math.fsum(d for _, _, d in per_vertex) / len(per_vertex)
    return MatchResult(per_vertex, mean)


def cell_seed(master: int, d_r: int, p: float, repeat: int) -> int:
    """Seed of one randomised map: SeedSequence over (master, d_r, p in 1e-4 units, repeat)."""
    ss = np.random.SeedSequence([int(master), int(d_r), int(round(p * 10000)), int(repeat)])
    return int(ss.generate_state(1, np.uint64)[0])


def base_seed(master: int) -> int:
    return int(np.random.SeedSequence([int(master), BASE_SEED_TAG]).generate_state(1, np.uint64)[0])


def ratio(mean_room: float, mean_noroom: float) -> float:
    if mean_noroom > 0:
        return 100.0 * mean_room / mean_noroom
    if mean_room == 0:
        return 100.0
    return math.inf


def _both_graphs(grid: GridMap, config: PipelineConfig) -> tuple[TopologyGraph, TopologyGraph]:
    with_rooms = build_graph(grid, config.replace(rooms=True)).graph
    without = build_graph(grid, config.replace(rooms=False)).graph
    return with_rooms, without


_WORKER_STATE: dict = {}


def _init_worker(base_map, bases, config):
    _WORKER_STATE.update(base_map=base_map, bases=bases, config=config)


def _run_cell(task):
    d_r, p, repeat, seed = task
    st = _WORKER_STATE
    try:
        variant = randomize(st["base_map"], NoiseConfig(d_r, p, seed))
        room_g, noroom_g = _both_graphs(variant, st["config"])
        return (match_vertices(st["bases"][0], room_g).mean_distance,
                match_vertices(st["bases"][1], noroom_g).mean_distance, None)
    except TopoError as exc:
        return (math.nan, math.nan, f"{type(exc).__name__}: {exc}")


def run_experiment(base_map: GridMap, d_r_list, p_list, repeats: int = 10, seed: int = 0,
                   config: PipelineConfig = PipelineConfig(), base_noise: tuple[int, float] | None = (5, 0.02),
                   workers: int = 1) -> list[ExperimentRow]:
    """Average base-to-variant matching distances with and without room detection.

    ``base_noise`` = ``(d_r, p)`` randomises ``base_map`` once before it
    serves as the matching base; ``None`` uses the map as given. Each
    variant is randomised from ``base_map`` itself.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    reference = base_map
    if base_noise is not None:
        reference = randomize(base_map, NoiseConfig(base_noise[0], base_noise[1], base_seed(seed)))
    bases = _both_graphs(reference, config)
    tasks = [(int(d), float(p), r, cell_seed(seed, d, p, r))
             for d in d_r_list for p in p_list for r in range(repeats)]
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(base_map, bases, config)) as pool:
            results = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        _init_worker(base_map, bases, config)
        results = [_run_cell(t) for t in tasks]

    cells: dict[tuple[int, float], list] = {}
    for (d, p, r, _), res in zip(tasks, results):
        cells.setdefault((d, p), []).append(res)
    rows = []
    for (d, p), res in sorted(cells.items()):
        ok = [x for x in res if x[2] is None]
        for x in res:
            if x[2] is not None:
                log.warning("d_r=%s p=%s: %s", d, p, x[2])
        room = math.fsum(x[0] for x in ok) / len(ok) if ok else math.nan
        noroom = math.fsum(x[1] for x in ok) / len(ok) if ok else math.nan
        rows.append(ExperimentRow(d, p, room, noroom, ratio(room, noroom) if ok else math.nan, len(res) - len(ok)))
    return rows


def _fmt_percent(p: float) -> str:
    return f"{p * 100:.10g}"


def format_row(row: ExperimentRow) -> list[str]:
    return [str(int(row.d_r)), _fmt_percent(row.p), f"{row.mean_room:.2f}", f"{row.mean_noroom:.2f}",
            f"{row.ratio_percent:.0f}"]


def write_table(rows, path) -> None:
    """CSV sorted by (d_r, p): distances to 2 decimals, ratio in whole percent."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in sorted(rows, key=lambda r: (r.d_r, r.p)):
                w.writerow(format_row(row))
    except OSError as exc:
        raise MapIOError(f"cannot write {path}: {exc}") from None


def read_table(path) -> list[ExperimentRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [ExperimentRow(int(r["d_r"]), float(r["percent"]) / 100, float(r["mean_room"]),
                              float(r["mean_noroom"]), float(r["ratio_percent"])) for r in reader]
