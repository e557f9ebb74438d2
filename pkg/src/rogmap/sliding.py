"""Robocentric window sliding.

Only the slabs that leave the window are touched: their cells are reset in
place and reused for the slabs that enter, while every retained cell keeps
its storage address.  Inflation counters are repaired across the slide so
that they still count exactly the occupied cells inside the new window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rogmap.index import box_indices, global_to_address_array, world_to_global
from rogmap.inflation import add_to_counters, neighbor_addresses


@dataclass
class SlideReport:
    old_center: tuple[int, int, int]
    new_center: tuple[int, int, int]
    cells_reset: int = 0
    counter_ops: int = 0


def should_slide(robot, window_center, d: float) -> bool:
    diff = np.asarray(robot, dtype=float) - np.asarray(window_center, dtype=float)
    return bool(np.linalg.norm(diff) > d)


def box_difference(a_lo, a_hi, b_lo, b_hi) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint boxes covering box a minus box b (inclusive integer boxes)."""
    lo = np.array(a_lo, dtype=np.int64)
    hi = np.array(a_hi, dtype=np.int64)
    out = []
    for k in range(3):
        if lo[k] < b_lo[k]:
            s_hi = hi.copy()
            s_hi[k] = min(hi[k], b_lo[k] - 1)
            out.append((lo.copy(), s_hi))
            lo[k] = b_lo[k]
        if hi[k] > b_hi[k]:
            s_lo = lo.copy()
            s_lo[k] = max(lo[k], b_hi[k] + 1)
            out.append((s_lo, hi.copy()))
            hi[k] = b_hi[k]
        if lo[k] > hi[k]:
            break
    return [(l, h) for l, h in out if np.all(l <= h)]


def box_intersection(a_lo, a_hi, b_lo, b_hi):
    lo = np.maximum(a_lo, b_lo)
    hi = np.minimum(a_hi, b_hi)
    return (lo, hi) if np.all(lo <= hi) else None


def _cells(boxes) -> np.ndarray:
    if not boxes:
        return np.empty((0, 3), np.int64)
    return np.concatenate([box_indices(lo, hi) for lo, hi in boxes])


def slide_to(store, new_robot_pos) -> SlideReport:
    """Recenter ``store``'s window on ``new_robot_pos`` (snapped to the grid)."""
    shape = store.shape
    table = store.table
    old_lo, old_hi = store.box
    new_center = np.asarray(world_to_global(new_robot_pos, shape.resolution), dtype=np.int64)
    report = SlideReport(tuple(int(v) for v in store.center), tuple(int(v) for v in new_center))
    if np.array_equal(new_center, store.center):
        return report
    half = np.asarray(shape.half, dtype=np.int64)
    new_lo, new_hi = new_center - half, new_center + half
    keep = box_intersection(old_lo, old_hi, new_lo, new_hi)

    exited = _cells(box_difference(old_lo, old_hi, new_lo, new_hi))
    exited_addr = global_to_address_array(exited, shape)

    if keep is not None:
        # occupied cells leaving the window no longer count toward retained neighbors
        occ = store.log_odds[exited_addr] >= store.params.l_occ
        addr = neighbor_addresses(exited[occ], table, shape, *keep)
        add_to_counters(store.counter, addr, -1)
        report.counter_ops += len(addr)

    # exited and admitted cells share the same addresses
    store.log_odds[exited_addr] = 0.0
    store.counter[exited_addr] = 0
    report.cells_reset = len(exited_addr)
    store.center = new_center

    if keep is not None:
        R = table.radius_cells
        admitted = box_difference(new_lo, new_hi, old_lo, old_hi)
        # retained cells close enough to an admitted slab to reach into it
        band = []
        for lo, hi in admitted:
            b = box_intersection(lo - R, hi + R, *keep)
            if b is not None:
                band.append(b)
        cells = _cells(band)
        if len(cells):
            cells = np.unique(cells, axis=0)
            occ = store.log_odds[global_to_address_array(cells, shape)] >= store.params.l_occ
            addr = neighbor_addresses(cells[occ], table, shape, new_lo, new_hi, exclude=keep)
            add_to_counters(store.counter, addr, +1)
            report.counter_ops += len(addr)
    return report
