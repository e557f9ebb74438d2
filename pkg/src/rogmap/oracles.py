"""Brute-force reference computations used by the test-suite and ``--selftest``.

Each oracle recomputes its answer from scratch without touching the
incremental machinery it is meant to check.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from rogmap.index import box_indices, global_to_address_array


def ball_kernel(table) -> np.ndarray:
    R = table.radius_cells
    k = np.zeros((2 * R + 1,) * 3, dtype=np.int32)
    o = table.offsets + R
    k[o[:, 0], o[:, 1], o[:, 2]] = 1
    return k


def window_grid(store):
    """Dense views of a ROGMap window in global (lexicographic) order.

    Returns ``(lo, occupied, counter)`` where the arrays have the window's
    (sx, sy, sz) shape and index ``[g - lo]``.
    """
    lo, hi = store.box
    cells = box_indices(lo, hi)
    a = global_to_address_array(cells, store.shape)
    dims = tuple(int(v) for v in hi - lo + 1)
    occ = (store.log_odds[a] >= store.params.l_occ).reshape(dims)
    counter = store.counter[a].reshape(dims).astype(np.int64)
    return lo, occ, counter


def count_occupied_neighbors(occ: np.ndarray, table) -> np.ndarray:
    """For each cell, the number of occupied cells ``m`` in the grid with ``m - n`` in the table."""
    return ndimage.correlate(occ.astype(np.int32), ball_kernel(table), mode="constant", cval=0)


def counter_mismatches(store) -> int:
    """Number of window cells whose inflation counter disagrees with a full recount."""
    _, occ, counter = window_grid(store)
    return int(np.count_nonzero(count_occupied_neighbors(occ, store.table) != counter))


def inflated_mask(occ: np.ndarray, table) -> np.ndarray:
    return count_occupied_neighbors(occ, table) > 0


def segment_box_cells(origin, endpoint, r: float) -> set[tuple[int, int, int]]:
    """Cells whose closed volume the segment touches, by testing every cell of its bounding box."""
    o = np.asarray(origin, dtype=float)
    e = np.asarray(endpoint, dtype=float)
    lo = np.floor(np.minimum(o, e) / r + 0.5).astype(int) - 1
    hi = np.floor(np.maximum(o, e) / r + 0.5).astype(int) + 1
    cells = box_indices(lo, hi)
    d = e - o
    t0 = np.zeros(len(cells))
    t1 = np.ones(len(cells))
    ok = np.ones(len(cells), dtype=bool)
    for k in range(3):
        bmin = (cells[:, k] - 0.5) * r
        bmax = (cells[:, k] + 0.5) * r
        if d[k] == 0:
            ok &= (o[k] >= bmin) & (o[k] <= bmax)
            continue
        ta = (bmin - o[k]) / d[k]
        tb = (bmax - o[k]) / d[k]
        t0 = np.maximum(t0, np.minimum(ta, tb))
        t1 = np.minimum(t1, np.maximum(ta, tb))
    ok &= t0 <= t1
    return {tuple(int(v) for v in c) for c in cells[ok]}
