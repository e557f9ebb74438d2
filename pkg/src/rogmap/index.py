"""Index arithmetic for the circular-buffer local map.

World points map to unbounded global indexes, global indexes map to local
indexes inside a window of odd shape, and local indexes map to a flat
address.  None of this depends on where the window is centered, which is
what lets the map slide without moving any data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ConfigError(ValueError):
    """Invalid map or window configuration."""


class InvalidPointError(ValueError):
    """Non-finite coordinate handed to the index math."""


class IndexBoundsError(IndexError):
    """Local index outside the window shape."""


class GlobalIndex(NamedTuple):
    ix: int
    iy: int
    iz: int


class LocalIndex(NamedTuple):
    ix: int
    iy: int
    iz: int


@dataclass(frozen=True)
class WindowShape:
    sx: int
    sy: int
    sz: int
    resolution: float

    def __post_init__(self):
        for name in ("sx", "sy", "sz"):
            s = getattr(self, name)
            if int(s) != s or s <= 0 or s % 2 == 0:
                raise ConfigError(f"window size {name}={s} must be a positive odd integer")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ConfigError(f"resolution must be positive, got {self.resolution}")

    @property
    def size(self) -> tuple[int, int, int]:
        return (self.sx, self.sy, self.sz)

    @property
    def half(self) -> tuple[int, int, int]:
        return (self.sx // 2, self.sy // 2, self.sz // 2)

    @property
    def n_cells(self) -> int:
        return self.sx * self.sy * self.sz

    @classmethod
    def from_extent(cls, extent_m, resolution: float) -> "WindowShape":
        """Shape covering ``extent_m`` meters per axis, rounded up to odd cell counts."""
        if not (resolution > 0 and math.isfinite(resolution)):
            raise ConfigError(f"resolution must be positive, got {resolution}")
        cells = []
        for e in extent_m:
            n = max(1, int(math.ceil(e / resolution - 1e-9)))
            if n % 2 == 0:
                n += 1
            cells.append(n)
        return cls(cells[0], cells[1], cells[2], resolution)


def round_half_away(x):
    """Round to nearest integer, ties away from zero. Works on scalars and arrays."""
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def world_to_global(p, r: float) -> GlobalIndex:
    if not all(math.isfinite(v) for v in p):
        raise InvalidPointError(f"non-finite point {tuple(p)}")
    return GlobalIndex(*(int(round_half_away(v / r)) for v in p))


def world_to_global_array(points: np.ndarray, r: float) -> np.ndarray:
    """Vectorized ``world_to_global`` for an (N, 3) array; caller filters non-finite rows."""
    return round_half_away(np.asarray(points, dtype=float) / r).astype(np.int64)


def global_to_world(g, r: float) -> np.ndarray:
    """Center of the cell with global index ``g``."""
    return np.asarray(g, dtype=float) * r


def _check_odd(s: int) -> None:
    if s <= 0 or s % 2 == 0:
        raise ConfigError(f"window size must be a positive odd integer, got {s}")


def normalize(x: int, s: int) -> int:
    _check_odd(s)
    h = s // 2
    if x > h:
        return x - h
    if x >= -h:
        return x + h
    return x + 3 * h


def centered_residue(g, s):
    """Residue of ``g`` modulo ``s`` in the centered range [-s//2, s//2]."""
    h = s // 2
    return (g + h) % s - h


def global_to_local(g, shape: WindowShape) -> LocalIndex:
    # The residue fed to normalize is the centered one; with it every axis
    # lands in normalize's middle branch and the mapping is s-periodic.
    return LocalIndex(*(normalize(int(centered_residue(gk, s)), s) for gk, s in zip(g, shape.size)))


def to_address(l, shape: WindowShape) -> int:
    for lk, s in zip(l, shape.size):
        if not 0 <= lk < s:
            raise IndexBoundsError(f"local index {tuple(l)} outside shape {shape.size}")
    return l[0] * shape.sy * shape.sz + l[1] * shape.sz + l[2]


def local_to_global(l, origin, shape: WindowShape) -> GlobalIndex:
    """The unique global index inside the window centered at ``origin`` with local index ``l``."""
    out = []
    for lk, ok, s in zip(l, origin, shape.size):
        # offset from origin in [-h, h] whose local index is lk
        d = (lk - ok) % s - s // 2
        out.append(int(ok + d))
    return GlobalIndex(*out)


def global_to_address_array(g: np.ndarray, shape: WindowShape) -> np.ndarray:
    """Flat addresses for an (N, 3) int array of global indexes."""
    g = np.asarray(g, dtype=np.int64)
    sx, sy, sz = shape.size
    hx, hy, hz = shape.half
    lx = (g[..., 0] + hx) % sx
    ly = (g[..., 1] + hy) % sy
    lz = (g[..., 2] + hz) % sz
    return (lx * sy + ly) * sz + lz


def in_window_array(g: np.ndarray, center, shape: WindowShape) -> np.ndarray:
    g = np.asarray(g, dtype=np.int64)
    d = np.abs(g - np.asarray(center, dtype=np.int64))
    return np.all(d <= np.asarray(shape.half), axis=-1)


def in_window(g, center, shape: WindowShape) -> bool:
    return all(abs(gk - ck) <= h for gk, ck, h in zip(g, center, shape.half))


def window_box(center, shape: WindowShape) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive (lo, hi) global-index corners of the window centered at ``center``."""
    c = np.asarray(center, dtype=np.int64)
    h = np.asarray(shape.half, dtype=np.int64)
    return c - h, c + h


def box_indices(lo, hi) -> np.ndarray:
    """All global indexes in the inclusive box [lo, hi], as an (N, 3) array in lexicographic order."""
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    if np.any(hi < lo):
        return np.empty((0, 3), dtype=np.int64)
    axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in grid], axis=1)
