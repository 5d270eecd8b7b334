"""Occupancy grid loading, binarization, thinning and PGM serialization."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import (ConfigError, CorruptImageError, MapIOError,
                     MissingFileError, UnsupportedFormatError)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True, eq=False)
class GridMap:
    """Binary occupancy raster. ``cells[y, x]`` is True for occupied cells."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=bool)
        if cells.ndim != 2 or cells.shape[0] == 0 or cells.shape[1] == 0:
            raise ValueError(f"grid must be a non-empty 2D array, got shape {cells.shape}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def occupied_count(self) -> int:
        return int(self.cells.sum())

    @classmethod
    def empty(cls, width: int, height: int) -> "GridMap":
        return cls(np.zeros((height, width), dtype=bool))

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return self.cells.shape == other.cells.shape and bool(np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash((self.cells.shape, self.cells.tobytes()))


@dataclass(frozen=True)
class PreprocessConfig:
    black_threshold: int = 100
    thinning_connectivity: int | None = 8  # None disables thinning

    def __post_init__(self):
        if not 0 <= self.black_threshold <= 765:
            raise ConfigError(f"black_threshold must be in [0, 765], got {self.black_threshold}")
        if self.thinning_connectivity not in (4, 8, None):
            raise ConfigError(f"thinning connectivity must be 4, 8 or off, got {self.thinning_connectivity}")


# ---------------------------------------------------------------------------
# image reading

def _pnm_tokens(data: bytes, count: int, start: int):
    """Read ``count`` whitespace separated header tokens, skipping comments."""
    tokens = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        if j == i:
            raise CorruptImageError("truncated PNM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i


def _parse_pnm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise UnsupportedFormatError(f"unsupported PNM variant {magic!r}")
    try:
        (w, h, maxval), pos = _pnm_tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise CorruptImageError(f"bad PNM header: {exc}") from None
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise CorruptImageError(f"bad PNM dimensions {w}x{h} maxval {maxval}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = w * h * channels
    if magic in (b"P2", b"P3"):
        try:
            values = np.array(data[pos:].split()[:count], dtype=np.int64)
        except ValueError:
            raise CorruptImageError("non-numeric sample in plain PNM") from None
        if values.size != count:
            raise CorruptImageError(f"expected {count} samples, found {values.size}")
    else:
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos:pos + count * dtype.itemsize]
        if len(raw) != count * dtype.itemsize:
            raise CorruptImageError("truncated PNM raster")
        values = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    if values.max(initial=0) > maxval:
        raise CorruptImageError("sample exceeds maxval")
    if maxval != 255:
        values = (values * 255 + maxval // 2) // maxval
    values = values.reshape(h, w, channels)
    if channels == 1:
        values = np.repeat(values, 3, axis=2)
    return values.astype(np.uint8)


def _parse_png(path: str) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            rgb = im.convert("RGB")
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptImageError(f"{path}: {exc}") from None
    return np.asarray(rgb, dtype=np.uint8).copy()


def load_image(path) -> np.ndarray:
    """Read a PNG or PGM/PPM file into an ``(h, w, 3)`` uint8 RGB raster."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise MissingFileError(f"no such file: {path}")
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise MapIOError(f"cannot read {path}: {exc}") from None
    if data.startswith(PNG_MAGIC):
        return _parse_png(path)
    if data[:1] == b"P" and data[1:2] in b"123456":
        return _parse_pnm(data)
    raise UnsupportedFormatError(f"{path}: not a PNG or PGM/PPM file")


# ---------------------------------------------------------------------------
# preprocessing

def threshold_black(raster: np.ndarray, config: PreprocessConfig = PreprocessConfig()) -> GridMap:
    """Occupied iff R+G+B is not greater than the threshold."""
    raster = np.asarray(raster)
    if raster.ndim == 2:
        total = raster.astype(np.int64) * 3
    else:
        total = raster[..., :3].astype(np.int64).sum(axis=2)
    return GridMap(total <= config.black_threshold)


def thin_interior(grid: GridMap, connectivity: int = 8) -> GridMap:
    """Free every occupied pixel whose in-bounds neighbours are all occupied.

    Single pass over the input snapshot. Pixels on the image border are kept.
    """
    if connectivity not in (4, 8):
        raise ConfigError(f"connectivity must be 4 or 8, got {connectivity}")
    c = grid.cells
    h, w = c.shape
    if h < 3 or w < 3:
        return grid
    inner = c[1:-1, 1:-1].copy()
    surrounded = inner & c[:-2, 1:-1] & c[2:, 1:-1] & c[1:-1, :-2] & c[1:-1, 2:]
    if connectivity == 8:
        surrounded &= c[:-2, :-2] & c[:-2, 2:] & c[2:, :-2] & c[2:, 2:]
    out = c.copy()
    out[1:-1, 1:-1] = inner & ~surrounded
    return GridMap(out)


def preprocess(raster: np.ndarray, config: PreprocessConfig = PreprocessConfig()) -> GridMap:
    grid = threshold_black(raster, config)
    if config.thinning_connectivity is not None:
        grid = thin_interior(grid, config.thinning_connectivity)
    return grid


def load_map(path, config: PreprocessConfig = PreprocessConfig()) -> GridMap:
    return preprocess(load_image(path), config)


def occupied_points(grid: GridMap) -> np.ndarray:
    """Integer ``(x, y)`` coordinates of occupied cells in row-major order."""
    ys, xs = np.nonzero(grid.cells)
    return np.column_stack([xs, ys]).astype(np.float64)


def to_raster(grid: GridMap) -> np.ndarray:
    """Black/white RGB rendering of a grid (occupied = black)."""
    gray = np.where(grid.cells, 0, 255).astype(np.uint8)
    return np.repeat(gray[..., None], 3, axis=2)


def save_pgm(grid: GridMap, path) -> None:
    """Write the grid as binary PGM (P5): 0 = occupied, 255 = free."""
    gray = np.where(grid.cells, 0, 255).astype(np.uint8)
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header + gray.tobytes())
    except OSError as exc:
        raise MapIOError(f"cannot write {path}: {exc}") from None
