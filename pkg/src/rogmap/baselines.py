"""Reference mappers for benchmarking and cross-checking.

All of them fuse with the same ray caster and the same clamped log-odds
update as ``ROGMap``; they differ in storage and in how inflation is kept
up to date.
"""

from __future__ import annotations

import time

import numpy as np
from scipy import ndimage

from rogmap.index import box_indices, window_box, world_to_global, world_to_global_array
from rogmap.inflation import InflationStats, build_offset_table
from rogmap.occupancy import MapConfig, QueryResult, fuse, state_array
from rogmap.oracles import ball_kernel
from rogmap.raycast import Scan, UpdateCache, cast_scan, pack_keys, unpack_keys
from rogmap.rog_map import FrameResult, query_code


def _clip_box(lo, hi, dims):
    lo = np.maximum(np.asarray(lo), 0)
    hi = np.minimum(np.asarray(hi), np.asarray(dims) - 1)
    return (lo, hi) if np.all(lo <= hi) else None


def _sl(lo, hi):
    return tuple(slice(int(a), int(b) + 1) for a, b in zip(lo, hi))


def naive_inflate(occ: np.ndarray, inflated: np.ndarray, lo, hi, table) -> int:
    """Recompute inflation around the touched box ``[lo, hi]`` (array coordinates).

    Every cell within the inflation radius of the box is cleared and then
    re-marked from the occupied cells within twice the radius.  Returns the
    operation count: cells traversed plus neighbor writes.
    """
    if lo is None:
        return 0
    R = table.radius_cells
    dims = occ.shape
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    a = _clip_box(lo - R, hi + R, dims)
    b = _clip_box(lo - 2 * R, hi + 2 * R, dims)
    if a is None:
        return 0
    sub = occ[_sl(*b)]
    dil = ndimage.binary_dilation(sub, structure=ball_kernel(table).astype(bool)) if sub.any() else np.zeros_like(sub)
    off = a[0] - b[0]
    inner = dil[_sl(off, off + a[1] - a[0])]
    inflated[_sl(*a)] = inner
    n_a = int(np.prod(a[1] - a[0] + 1))
    n_b = sub.size
    return n_a + n_b + int(np.count_nonzero(sub)) * len(table)


class Thresholded:
    """Read-only boolean view ``values >= threshold`` evaluated per access."""

    def __init__(self, values: np.ndarray, threshold: float):
        self.values = values
        self.threshold = threshold
        self.shape = values.shape

    def __getitem__(self, key):
        return self.values[key] >= self.threshold


def _in_grid(idx, dims):
    return np.all((idx >= 0) & (idx < np.asarray(dims)), axis=-1)


def fiimap_inflate(rising: np.ndarray, falling: np.ndarray, table, occ: np.ndarray, inflated: np.ndarray) -> int:
    """Queue-based incremental inflation in the style of FIIMap.

    Rising cells mark their whole neighborhood.  For a falling cell, each
    neighbor is re-examined by scanning its own neighborhood for a remaining
    occupied cell (stopping at the first one) and cleared if none is found.
    ``occ`` must already hold this frame's occupancy.  Returns every grid
    access made.
    """
    dims = occ.shape
    offs = table.offsets
    ops = 0
    rising = np.asarray(rising, dtype=np.int64).reshape(-1, 3)
    falling = np.asarray(falling, dtype=np.int64).reshape(-1, 3)

    for f in falling:
        nb = f + offs
        nb = nb[_in_grid(nb, dims)]
        cand = nb[:, None, :] + offs[None, :, :]  # (n, L, 3)
        valid = _in_grid(cand, dims)
        c = np.where(valid[..., None], cand, 0)
        hit = valid & occ[c[..., 0], c[..., 1], c[..., 2]]
        found = hit.any(axis=1)
        first = np.argmax(hit, axis=1)
        scanned = np.cumsum(valid, axis=1)
        ops += int(np.where(found, scanned[np.arange(len(nb)), first], valid.sum(axis=1)).sum())
        clear = nb[~found]
        inflated[clear[:, 0], clear[:, 1], clear[:, 2]] = False

    if len(rising):
        nb = (rising[:, None, :] + offs[None, :, :]).reshape(-1, 3)
        nb = nb[_in_grid(nb, dims)]
        inflated[nb[:, 0], nb[:, 1], nb[:, 2]] = True
        ops += len(nb)
    return ops


class UniformFixedMap:
    """Dense grid over a fixed box, never slides; naive bounding-box inflation."""

    name = "uniform-fixed"

    def __init__(self, cfg: MapConfig, origin=(0.0, 0.0, 0.0)):
        self.cfg = cfg
        self.params = cfg.prob
        self.table = build_offset_table(cfg.inflation_distance, cfg.resolution)
        r = cfg.resolution
        if cfg.scene_min is not None and cfg.scene_max is not None:
            lo = np.asarray(world_to_global(cfg.scene_min, r), dtype=np.int64)
            hi = np.asarray(world_to_global(cfg.scene_max, r), dtype=np.int64)
        else:
            lo, hi = window_box(world_to_global(origin, r), cfg.shape)
        self.lo, self.hi = lo, hi
        self.dims = tuple(int(v) for v in hi - lo + 1)
        self.log_odds = np.zeros(self.dims, dtype=np.float64)
        self.inflated = np.zeros(self.dims, dtype=bool)

    @property
    def box(self):
        return self.lo, self.hi

    def memory_bytes(self) -> int:
        return self.log_odds.nbytes + self.inflated.nbytes

    def _local(self, g):
        return np.asarray(g, dtype=np.int64).reshape(-1, 3) - self.lo

    def occupancy(self) -> Thresholded:
        return Thresholded(self.log_odds, self.params.l_occ)

    def integrate(self, cache: UpdateCache) -> InflationStats:
        if not len(cache):
            return InflationStats()
        a = self._local(cache.keys)
        idx = (a[:, 0], a[:, 1], a[:, 2])
        old = self.log_odds[idx]
        new = fuse(old, cache.n_hit, cache.n_miss, self.params)
        self.log_odds[idx] = new
        was = old >= self.params.l_occ
        now = new >= self.params.l_occ
        rising, falling = a[now & ~was], a[was & ~now]
        self._t_mid = time.perf_counter()
        n_inf = self._inflate(a, rising, falling)
        return InflationStats(n_inf, len(rising), len(falling))

    def _inflate(self, touched, rising, falling) -> int:
        return naive_inflate(self.occupancy(), self.inflated, touched.min(axis=0), touched.max(axis=0), self.table)

    def update(self, scan: Scan) -> FrameResult:
        res = FrameResult()
        t0 = time.perf_counter()
        cache = cast_scan(scan, self.cfg.resolution, self.cfg.max_raycast_distance, self.box)
        self._t_mid = None
        res.stats = self.integrate(cache)
        t2 = time.perf_counter()
        t1 = self._t_mid if self._t_mid is not None else t2
        res.t_update, res.t_inflate = t1 - t0, t2 - t1
        res.n_cache, res.n_dropped = len(cache), cache.n_dropped
        return res

    def state_at(self, g) -> np.ndarray:
        a = self._local(g)
        out = np.full(len(a), QueryResult.OUT_OF_WINDOW, dtype=np.int8)
        inside = _in_grid(a, self.dims)
        ai = a[inside]
        idx = (ai[:, 0], ai[:, 1], ai[:, 2])
        out[inside] = query_code(state_array(self.log_odds[idx], self.params), self.inflated[idx])
        return out

    def occ_state_at(self, g) -> np.ndarray:
        a = self._local(g)
        return state_array(self.log_odds[a[:, 0], a[:, 1], a[:, 2]], self.params)

    def query_many(self, points) -> np.ndarray:
        return self.state_at(world_to_global_array(points, self.cfg.resolution))

    def occupied_cells(self) -> np.ndarray:
        return np.argwhere(self.log_odds >= self.params.l_occ) + self.lo

    def inflated_cells(self) -> np.ndarray:
        return np.argwhere(self.inflated) + self.lo


class FIIMapStyle(UniformFixedMap):
    """Same dense fixed grid, inflated incrementally from rising/falling queues."""

    name = "fiimap-style"

    def _inflate(self, touched, rising, falling) -> int:
        return fiimap_inflate(rising, falling, self.table, self.occupancy(), self.inflated)


class HashMap:
    """Unbounded occupancy map stored in a hash table keyed by global index.

    Memory grows with the number of distinct cells ever touched.  Inflation
    re-traverses the frame's bounding box, like the uniform baseline.
    """

    name = "hash"
    box = None
    ENTRY_BYTES = 16  # int64 key + float64 log-odds
    INFLATED_ENTRY_BYTES = 8

    def __init__(self, cfg: MapConfig, origin=(0.0, 0.0, 0.0)):
        self.cfg = cfg
        self.params = cfg.prob
        self.table = build_offset_table(cfg.inflation_distance, cfg.resolution)
        self.slots: dict[int, int] = {}
        self._log_odds = np.zeros(1024, dtype=np.float64)
        self.inflated: set[int] = set()

    def __len__(self):
        return len(self.slots)

    @property
    def log_odds(self) -> np.ndarray:
        return self._log_odds[: len(self.slots)]

    def memory_bytes(self) -> int:
        return len(self.slots) * self.ENTRY_BYTES + len(self.inflated) * self.INFLATED_ENTRY_BYTES

    def _lookup(self, keys: np.ndarray) -> np.ndarray:
        get = self.slots.get
        return np.fromiter((get(k, -1) for k in keys.tolist()), dtype=np.int64, count=len(keys))

    def _insert(self, keys: np.ndarray) -> np.ndarray:
        slots = self.slots
        out = np.empty(len(keys), dtype=np.int64)
        for i, k in enumerate(keys.tolist()):
            s = slots.get(k)
            if s is None:
                s = slots[k] = len(slots)
            out[i] = s
        if len(slots) > len(self._log_odds):
            grown = np.zeros(max(len(slots), 2 * len(self._log_odds)), dtype=np.float64)
            grown[: len(self._log_odds)] = self._log_odds
            self._log_odds = grown
        return out

    def _log_odds_of(self, keys: np.ndarray) -> np.ndarray:
        s = self._lookup(keys)
        return np.where(s >= 0, self._log_odds[np.maximum(s, 0)], 0.0)

    def integrate(self, cache: UpdateCache) -> InflationStats:
        if not len(cache):
            return InflationStats()
        keys = pack_keys(cache.keys)
        s = self._insert(keys)
        old = self._log_odds[s]
        new = fuse(old, cache.n_hit, cache.n_miss, self.params)
        self._log_odds[s] = new
        was = old >= self.params.l_occ
        now = new >= self.params.l_occ
        self._t_mid = time.perf_counter()
        n_inf = self._inflate_box(cache.keys.min(axis=0), cache.keys.max(axis=0))
        return InflationStats(n_inf, int((now & ~was).sum()), int((was & ~now).sum()))

    def _inflate_box(self, lo, hi) -> int:
        R = self.table.radius_cells
        a_cells = box_indices(lo - R, hi + R)
        b_lo, b_hi = lo - 2 * R, hi + 2 * R
        b_cells = box_indices(b_lo, b_hi)
        occ = self._log_odds_of(pack_keys(b_cells)) >= self.params.l_occ
        dims = tuple(int(v) for v in b_hi - b_lo + 1)
        occ3 = occ.reshape(dims)
        dil = ndimage.binary_dilation(occ3, structure=ball_kernel(self.table).astype(bool)) if occ.any() else occ3
        inner = dil[R:dims[0] - R, R:dims[1] - R, R:dims[2] - R].ravel()
        a_keys = pack_keys(a_cells)
        self.inflated.difference_update(a_keys.tolist())
        self.inflated.update(a_keys[inner].tolist())
        return len(a_cells) + len(b_cells) + int(occ.sum()) * len(self.table)

    def update(self, scan: Scan) -> FrameResult:
        res = FrameResult()
        t0 = time.perf_counter()
        cache = cast_scan(scan, self.cfg.resolution, self.cfg.max_raycast_distance)
        self._t_mid = None
        res.stats = self.integrate(cache)
        t2 = time.perf_counter()
        t1 = self._t_mid if self._t_mid is not None else t2
        res.t_update, res.t_inflate = t1 - t0, t2 - t1
        res.n_cache, res.n_dropped = len(cache), cache.n_dropped
        return res

    def occ_state_at(self, g) -> np.ndarray:
        return state_array(self._log_odds_of(pack_keys(np.asarray(g, dtype=np.int64).reshape(-1, 3))), self.params)

    def state_at(self, g) -> np.ndarray:
        keys = pack_keys(np.asarray(g, dtype=np.int64).reshape(-1, 3))
        infl = np.fromiter((k in self.inflated for k in keys.tolist()), dtype=bool, count=len(keys))
        return query_code(state_array(self._log_odds_of(keys), self.params), infl)

    def query_many(self, points) -> np.ndarray:
        return self.state_at(world_to_global_array(points, self.cfg.resolution))

    def _keys_array(self) -> np.ndarray:
        return np.fromiter(self.slots.keys(), dtype=np.int64, count=len(self.slots))

    def occupied_cells(self) -> np.ndarray:
        keys = self._keys_array()
        occ = self.log_odds[self._lookup(keys)] >= self.params.l_occ
        return _sorted(unpack_keys(keys[occ]))

    def inflated_cells(self) -> np.ndarray:
        return _sorted(unpack_keys(np.fromiter(self.inflated, dtype=np.int64, count=len(self.inflated))))


def _sorted(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.int64).reshape(-1, 3)
    return g[np.lexsort((g[:, 2], g[:, 1], g[:, 0]))]
