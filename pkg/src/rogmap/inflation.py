"""Counter-based incremental obstacle inflation.

Every cell carries a counter of how many occupied cells have it inside their
inflation ball.  A cell that becomes occupied adds one to each counter in its
ball, a cell that stops being occupied subtracts one, so the work per frame
is proportional to the number of state changes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from rogmap.index import ConfigError, global_to_address_array

COUNTER_DTYPE = np.uint16
COUNTER_MAX = int(np.iinfo(COUNTER_DTYPE).max)

# rows of (cells x offsets) processed per chunk
_CHUNK = 1 << 21


class CounterInvariantError(RuntimeError):
    """An inflation counter would have gone negative."""


@dataclass(frozen=True)
class OffsetTable:
    offsets: np.ndarray  # (L, 3) int64, lexicographic
    radius_cells: int

    def __len__(self):
        return len(self.offsets)

    def __iter__(self):
        return (tuple(int(v) for v in o) for o in self.offsets)


def build_offset_table(inflation_distance: float, r: float) -> OffsetTable:
    if inflation_distance < 0:
        raise ConfigError("inflation distance must be >= 0")
    limit = inflation_distance + r * 1e-9
    R = int(math.floor(limit / r))
    ax = np.arange(-R, R + 1, dtype=np.int64)
    o = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    keep = np.sqrt((o * o).sum(axis=1)) * r <= limit
    offsets = o[keep]
    if len(offsets) > COUNTER_MAX:
        raise ConfigError(f"offset table has {len(offsets)} entries, counter width allows {COUNTER_MAX}")
    return OffsetTable(offsets, R)


@dataclass
class InflationStats:
    n_inf: int = 0
    n_rising: int = 0
    n_falling: int = 0

    def __iadd__(self, other: "InflationStats"):
        self.n_inf += other.n_inf
        self.n_rising += other.n_rising
        self.n_falling += other.n_falling
        return self


def neighbor_addresses(cells: np.ndarray, table: OffsetTable, shape, lo, hi, exclude=None):
    """Addresses of every ``cell + offset`` inside the inclusive box [lo, hi].

    ``exclude`` is an optional (lo, hi) box whose cells are skipped.  The
    result is flattened over cells and offsets, duplicates kept.
    """
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 3)
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    per = max(1, _CHUNK // max(1, len(table)))
    out = []
    for s in range(0, len(cells), per):
        nb = (cells[s:s + per, None, :] + table.offsets[None, :, :]).reshape(-1, 3)
        keep = np.all((nb >= lo) & (nb <= hi), axis=1)
        if exclude is not None:
            keep &= ~np.all((nb >= exclude[0]) & (nb <= exclude[1]), axis=1)
        out.append(global_to_address_array(nb[keep], shape))
    if not out:
        return np.empty(0, np.int64)
    return np.concatenate(out)


def add_to_counters(counter: np.ndarray, addr: np.ndarray, c: int) -> None:
    """counter[addr] += c for each occurrence in ``addr``; c is +1 or -1."""
    if len(addr) == 0:
        return
    uniq, cnt = np.unique(addr, return_counts=True)
    cur = counter[uniq].astype(np.int64)
    new = cur + c * cnt
    if c < 0 and np.any(new < 0):
        bad = uniq[new < 0]
        msg = f"inflation counter below zero at {len(bad)} addresses (first {int(bad[0])})"
        if __debug__:
            raise CounterInvariantError(msg)
        warnings.warn(msg + "; saturating at zero", RuntimeWarning, stacklevel=3)
        new = np.maximum(new, 0)
    counter[uniq] = new.astype(counter.dtype)


def update_neighbor_counter(g, c: int, table: OffsetTable, store) -> int:
    """Add ``c`` to the counter of every in-window cell in ``g``'s ball; returns cells touched."""
    if c not in (1, -1):
        raise ValueError("c must be +1 or -1")
    addr = neighbor_addresses(np.asarray([g]), table, store.shape, *store.box)
    add_to_counters(store.counter, addr, c)
    return len(addr)


def process_transitions(rising: np.ndarray, falling: np.ndarray, table: OffsetTable, store) -> InflationStats:
    rising = np.asarray(rising, dtype=np.int64).reshape(-1, 3)
    falling = np.asarray(falling, dtype=np.int64).reshape(-1, 3)
    up = neighbor_addresses(rising, table, store.shape, *store.box)
    down = neighbor_addresses(falling, table, store.shape, *store.box)
    # increments first so a consistent frame never dips below zero mid-way
    add_to_counters(store.counter, up, +1)
    add_to_counters(store.counter, down, -1)
    return InflationStats(len(up) + len(down), len(rising), len(falling))
