"""Exception hierarchy shared by all pipeline stages."""
from __future__ import annotations

from contextlib import contextmanager


class TopoError(Exception):
    """Base class for every error raised by roomtopo."""

    exit_code = 1
    stage: str | None = None

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class MapIOError(TopoError):
    exit_code = 3


class MissingFileError(MapIOError):
    pass


class MapFormatError(TopoError):
    exit_code = 4


class UnsupportedFormatError(MapFormatError):
    pass


class CorruptImageError(MapFormatError):
    pass


class GeometryError(TopoError):
    """Degenerate geometric input (too few points, collinear, zero area)."""

    exit_code = 5


class GraphError(TopoError):
    """Invalid graph mutation or invariant violation."""

    exit_code = 5


class ConfigError(TopoError):
    exit_code = 2


class NoiseError(TopoError):
    exit_code = 5


@contextmanager
def stage(name: str):
    """Tag any TopoError escaping the block with the pipeline stage name."""
    try:
        yield
    except TopoError as exc:
        if exc.stage is None:
            exc.stage = name
        raise
