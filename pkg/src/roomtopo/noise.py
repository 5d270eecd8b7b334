"""Wall-noise randomisation simulating repeated mapping runs.

A fraction ``p`` of occupied pixels is removed and the same number of new
occupied pixels is added, each at a random offset of at most ``d_r`` per
axis from a randomly chosen surviving occupied pixel.

Randomness comes from numpy's PCG64 bit generator (PCG XSL RR 128/64),
which produces identical streams on every platform for a given seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NoiseError
from .gridmap import GridMap

RETRIES_PER_ANCHOR = 100
MAX_CONSECUTIVE_FAILURES = 10_000


@dataclass(frozen=True)
class NoiseConfig:
    d_r: int = 5
    p: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if int(self.d_r) != self.d_r or self.d_r < 1:
            raise ConfigError(f"d_r must be an integer >= 1, got {self.d_r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must be in [0, 1], got {self.p}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def removal_count(n: int, p: float) -> int:
    """``round(p * n)`` with halves rounded up."""
    return int(np.floor(p * n + 0.5))


def _offsets(d_r: int) -> np.ndarray:
    r = np.arange(-d_r, d_r + 1)
    dx, dy = np.meshgrid(r, r, indexing="xy")
    off = np.column_stack([dx.ravel(), dy.ravel()])
    return off[np.any(off != 0, axis=1)]


def randomize(grid: GridMap, config: NoiseConfig) -> GridMap:
    cells = grid.cells.copy()
    ys, xs = np.nonzero(cells)
    n = len(xs)
    if n == 0:
        raise NoiseError("cannot randomise a map without occupied pixels")
    k = removal_count(n, config.p)
    if k == 0:
        return GridMap(cells)
    if k >= n:
        raise NoiseError("noise would remove every occupied pixel; nothing left to anchor new pixels")
    rng = make_rng(config.seed)
    removed = rng.choice(n, size=k, replace=False)
    cells[ys[removed], xs[removed]] = False
    alive = np.ones(n, dtype=bool)
    alive[removed] = False
    ax, ay = xs[alive], ys[alive]
    offsets = _offsets(int(config.d_r))
    h, w = cells.shape
    added = 0
    failures = 0
    while added < k:
        a = int(rng.integers(len(ax)))
        for _ in range(RETRIES_PER_ANCHOR):
            dx, dy = offsets[int(rng.integers(len(offsets)))]
            x, y = ax[a] + dx, ay[a] + dy
            if 0 <= x < w and 0 <= y < h and not cells[y, x]:
                cells[y, x] = True
                added += 1
                failures = 0
                break
            failures += 1
            if failures >= MAX_CONSECUTIVE_FAILURES:
                raise NoiseError("retry budget exhausted while placing noise pixels")
    return GridMap(cells)
