"""Command line front end: ``roomtopo <subcommand> ...``.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 file-format error,
5 degenerate geometry or invalid graph.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import evaluate as ev
from .errors import ConfigError, MapIOError, TopoError, stage
from .geometry import alpha_shape
from .gridmap import PreprocessConfig, load_map, occupied_points, save_pgm
from .noise import NoiseConfig, randomize
from .pipeline import PipelineConfig, build_graph
from .render import make_two_room_fixture, render_graph
from .roomdetect import RoomDetectConfig
from .skeleton import SkeletonConfig
from .topograph import load_graph, save_graph, validate

log = logging.getLogger("roomtopo")

# flag name -> (type, default)
PIPELINE_OPTIONS = {
    "alpha": (float, 200.0),
    "min-room-area": (float, None),
    "rooms": (str, "on"),
    "black-threshold": (int, 100),
    "thinning": (str, "8"),
    "min-clearance": (float, 3.0),
    "merge-dist": (float, 2.0),
    "dead-end-length": (float, 10.0),
    "min-component-length": (float, 50.0),
    "epsilon": (float, 1e-8),
    "min-len-threshold": (float, 20.0),
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines (``#`` comments, optional quotes, optional [section] headers)."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise MapIOError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("_", "-")] = value.strip("\"'")
    return values


def _convert(name, typ, raw):
    if raw is None:
        return None
    if isinstance(raw, str) and raw.lower() in ("none", "null", "") and name == "min-room-area":
        return None
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for --{name}: {raw!r}") from None


def resolve_options(args, names) -> dict:
    """CLI flags override the config file, which overrides the defaults."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_values) - set(names)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for name in names:
        typ, default = PIPELINE_OPTIONS[name]
        cli = getattr(args, name.replace("-", "_"), None)
        raw = cli if cli is not None else file_values.get(name, default)
        out[name] = _convert(name, typ, raw)
    return out


def pipeline_config(opts: dict) -> PipelineConfig:
    thinning = str(opts["thinning"]).lower()
    if thinning not in ("4", "8", "off"):
        raise ConfigError("--thinning must be 4, 8 or off")
    rooms = str(opts["rooms"]).lower()
    if rooms not in ("on", "off", "true", "false"):
        raise ConfigError("--rooms must be on or off")
    return PipelineConfig(
        alpha=opts["alpha"],
        min_room_area=opts["min-room-area"],
        rooms=rooms in ("on", "true"),
        preprocess=PreprocessConfig(opts["black-threshold"], None if thinning == "off" else int(thinning)),
        skeleton=SkeletonConfig(opts["min-clearance"], opts["merge-dist"], opts["dead-end-length"],
                                opts["min-component-length"]),
        roomdetect=RoomDetectConfig(opts["epsilon"], opts["min-len-threshold"]),
    )


def _add_pipeline_flags(p: argparse.ArgumentParser, names=tuple(PIPELINE_OPTIONS)):
    for name in names:
        typ, default = PIPELINE_OPTIONS[name]
        p.add_argument(f"--{name}", default=None, help=f"default: {default}")
    p.add_argument("--config", help="key = value file; flags take precedence")


def _parse_list(text: str, typ):
    try:
        return [typ(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad list {text!r}") from None


def _echo(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommands

def cmd_build_graph(args) -> int:
    opts = resolve_options(args, list(PIPELINE_OPTIONS))
    config = pipeline_config(opts)
    t0 = time.perf_counter()
    with stage("gridmap"):
        grid = load_map(args.map, config.preprocess)
    result = build_graph(grid, config)
    save_graph(result.graph, args.out)
    effective = {"command": "build-graph", "map": os.fspath(args.map), **config.to_dict()}
    with open(args.out + ".config.json", "w") as fh:
        json.dump(effective, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.svg:
        render_graph(grid, result.graph, result.shapes, args.svg)
    _echo(effective)
    g = result.graph
    log.info("%d vertices, %d edges, %d rooms in %.2fs", len(g.vertices), g.edge_count(), len(g.rooms),
             time.perf_counter() - t0)
    return 0


def cmd_randomize(args) -> int:
    opts = resolve_options(args, ["black-threshold", "thinning"])
    thinning = str(opts["thinning"]).lower()
    pre = PreprocessConfig(opts["black-threshold"], None if thinning == "off" else int(thinning))
    grid = load_map(args.map, pre)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.map))[0]
    for i in range(args.count):
        seed = args.seed + i
        cfg = NoiseConfig(args.dr, args.percent / 100.0, seed)
        out = os.path.join(args.out_dir, f"{stem}_dr{args.dr}_p{args.percent:g}_s{seed}.pgm")
        save_pgm(randomize(grid, cfg), out)
        _echo({"command": "randomize", "map": args.map, "d_r": args.dr, "p": cfg.p, "seed": seed, "out": out})
    return 0


def cmd_evaluate(args) -> int:
    opts = resolve_options(args, list(PIPELINE_OPTIONS))
    config = pipeline_config(opts)
    d_rs = _parse_list(args.dr, int)
    ps = [x / 100.0 for x in _parse_list(args.percent, float)]
    base_noise = None
    if args.base_noise.lower() != "none":
        d, p = _parse_list(args.base_noise, float)
        base_noise = (int(d), p / 100.0)
    grid = load_map(args.base, config.preprocess)
    _echo({"command": "evaluate", "base": args.base, "seed": args.seed, "repeats": args.repeats,
           "d_r": d_rs, "p": ps, "base_noise": base_noise, **config.to_dict()})
    rows = ev.run_experiment(grid, d_rs, ps, args.repeats, args.seed, config, base_noise, args.workers)
    ev.write_table(rows, args.out)
    for row in rows:
        print(",".join(ev.format_row(row)))
    return 0


def cmd_render(args) -> int:
    opts = resolve_options(args, ["alpha", "min-room-area", "black-threshold", "thinning"])
    thinning = str(opts["thinning"]).lower()
    pre = PreprocessConfig(opts["black-threshold"], None if thinning == "off" else int(thinning))
    grid = load_map(args.map, pre)
    graph = load_graph(args.graph) if args.graph else None
    shapes = alpha_shape(occupied_points(grid), opts["alpha"], opts["min-room-area"]) if args.shapes else None
    render_graph(grid, graph, shapes, args.out)
    _echo({"command": "render", "map": args.map, "graph": args.graph, "shapes": bool(args.shapes),
           "alpha": opts["alpha"], "out": args.out})
    return 0


def cmd_fixture(args) -> int:
    grid = make_two_room_fixture(args.room_w, args.room_h, args.corridor_len, args.corridor_w,
                                 args.noise_pixels, args.seed)
    save_pgm(grid, args.out)
    _echo({"command": "fixture", "room_w": args.room_w, "room_h": args.room_h, "corridor_len": args.corridor_len,
           "corridor_w": args.corridor_w, "noise_pixels": args.noise_pixels, "seed": args.seed, "out": args.out})
    return 0


def cmd_validate(args) -> int:
    from .errors import GraphError
    from .topograph import deserialize

    try:
        with open(args.graph) as fh:
            text = fh.read()
    except OSError as exc:
        raise MapIOError(f"cannot read {args.graph}: {exc}") from None
    try:
        graph = deserialize(text)
    except GraphError as exc:
        print(exc)
        return GraphError.exit_code
    problems = validate(graph)
    for p in problems:
        print(p)
    if not problems:
        print(f"ok: {len(graph.vertices)} vertices, {graph.edge_count()} edges, {len(graph.rooms)} rooms")
    return 0 if not problems else 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roomtopo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="map image -> topology graph JSON")
    p.add_argument("map")
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("randomize", help="write noisy variants of a map")
    p.add_argument("map")
    p.add_argument("--dr", type=int, default=5)
    p.add_argument("--percent", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    _add_pipeline_flags(p, ["black-threshold", "thinning"])
    p.set_defaults(func=cmd_randomize)

    p = sub.add_parser("evaluate", help="room vs no-room matching stability sweep")
    p.add_argument("--base", required=True)
    p.add_argument("--dr", default="1,2,3,5")
    p.add_argument("--percent", default="2,5,8,11,14")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-noise", default="5,2", help="d_r,percent applied to the base map, or 'none'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", help="SVG of a map with optional graph and alpha shapes")
    p.add_argument("--map", required=True)
    p.add_argument("--graph")
    p.add_argument("--shapes", action="store_true")
    p.add_argument("--out", required=True)
    _add_pipeline_flags(p, ["alpha", "min-room-area", "black-threshold", "thinning"])
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("fixture", help="synthetic two-room map as PGM")
    p.add_argument("--room-w", type=int, default=60)
    p.add_argument("--room-h", type=int, default=60)
    p.add_argument("--corridor-len", type=int, default=40)
    p.add_argument("--corridor-w", type=int, default=10)
    p.add_argument("--noise-pixels", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("validate", help="check graph JSON invariants")
    p.add_argument("graph")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TopoError as exc:
        print(f"roomtopo {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
