"""The robocentric occupancy grid map."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from rogmap.index import (
    GlobalIndex,
    box_indices,
    global_to_address_array,
    global_to_world,
    in_window,
    in_window_array,
    to_address,
    global_to_local,
    window_box,
    world_to_global,
    world_to_global_array,
)
from rogmap.inflation import (
    COUNTER_DTYPE,
    InflationStats,
    build_offset_table,
    process_transitions,
)
from rogmap.occupancy import MapConfig, QueryResult, Transition, fuse, state_array
from rogmap.raycast import Scan, UpdateCache, cast_scan, cast_scan_parallel
from rogmap.sliding import SlideReport, should_slide, slide_to


@dataclass
class FrameResult:
    t_update: float = 0.0
    t_inflate: float = 0.0
    stats: InflationStats = field(default_factory=InflationStats)
    n_cache: int = 0
    n_dropped: int = 0
    slide: SlideReport | None = None

    @property
    def t_total(self) -> float:
        return self.t_update + self.t_inflate


def query_code(state: np.ndarray, inflated: np.ndarray) -> np.ndarray:
    codes = state.astype(np.int8)
    codes[inflated] = QueryResult.INFLATED_OCCUPIED
    return codes


class ROGMap:
    """Fixed-size local map that follows the robot.

    Storage is two flat arrays over the window (log-odds and inflation
    counter) addressed through the circular index math, so sliding never
    moves retained data.

    Single writer: ``update`` and ``slide_to`` need exclusive access; any
    number of readers may query while no writer runs.
    """

    name = "rogmap"

    def __init__(self, cfg: MapConfig, origin=(0.0, 0.0, 0.0), workers: int = 1):
        self.cfg = cfg
        self.params = cfg.prob
        self.shape = cfg.shape
        self.table = build_offset_table(cfg.inflation_distance, cfg.resolution)
        self.center = np.asarray(world_to_global(origin, cfg.resolution), dtype=np.int64)
        self.log_odds = np.zeros(self.shape.n_cells, dtype=np.float64)
        self.counter = np.zeros(self.shape.n_cells, dtype=COUNTER_DTYPE)
        self.workers = workers

    # -- geometry -----------------------------------------------------------

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        return window_box(self.center, self.shape)

    @property
    def center_world(self) -> np.ndarray:
        return global_to_world(self.center, self.cfg.resolution)

    def in_window(self, g) -> bool:
        return in_window(g, self.center, self.shape)

    def address_of(self, g) -> int:
        return to_address(global_to_local(g, self.shape), self.shape)

    def memory_bytes(self) -> int:
        return self.log_odds.nbytes + self.counter.nbytes

    # -- queries ------------------------------------------------------------

    def query(self, where) -> QueryResult:
        """State at a world point, or at a cell when given a ``GlobalIndex``."""
        g = where if isinstance(where, GlobalIndex) else world_to_global(where, self.cfg.resolution)
        if not self.in_window(g):
            return QueryResult.OUT_OF_WINDOW
        a = self.address_of(g)
        if self.counter[a] > 0:
            return QueryResult.INFLATED_OCCUPIED
        return QueryResult(int(state_array(self.log_odds[a], self.params)))

    def state_at(self, g: np.ndarray) -> np.ndarray:
        """Query codes for an (N, 3) array of global indexes."""
        g = np.asarray(g, dtype=np.int64).reshape(-1, 3)
        out = np.full(len(g), QueryResult.OUT_OF_WINDOW, dtype=np.int8)
        inside = in_window_array(g, self.center, self.shape)
        a = global_to_address_array(g[inside], self.shape)
        out[inside] = query_code(state_array(self.log_odds[a], self.params), self.counter[a] > 0)
        return out

    def occ_state_at(self, g: np.ndarray) -> np.ndarray:
        """Three-state codes (no inflation) for in-window global indexes."""
        a = global_to_address_array(np.asarray(g, dtype=np.int64).reshape(-1, 3), self.shape)
        return state_array(self.log_odds[a], self.params)

    def query_many(self, points: np.ndarray) -> np.ndarray:
        return self.state_at(world_to_global_array(points, self.cfg.resolution))

    def is_inflated_occupied(self, g):
        if not self.in_window(g):
            return QueryResult.OUT_OF_WINDOW
        return bool(self.counter[self.address_of(g)] >= 1)

    def window_cells(self) -> np.ndarray:
        return box_indices(*self.box)

    def occupied_cells(self) -> np.ndarray:
        g = self.window_cells()
        return g[self.occ_state_at(g) == 2]

    def inflated_cells(self) -> np.ndarray:
        g = self.window_cells()
        return g[self.counter[global_to_address_array(g, self.shape)] > 0]

    # -- updates ------------------------------------------------------------

    def should_slide(self, robot) -> bool:
        return should_slide(robot, self.center_world, self.cfg.slide_threshold)

    def slide_to(self, robot) -> SlideReport:
        return slide_to(self, robot)

    def cast(self, scan: Scan) -> UpdateCache:
        r, rng = self.cfg.resolution, self.cfg.max_raycast_distance
        if self.workers > 1:
            return cast_scan_parallel(scan, r, rng, self.box, self.workers)
        return cast_scan(scan, r, rng, self.box)

    def apply_cache(self, cache: UpdateCache) -> tuple[np.ndarray, np.ndarray]:
        """Fuse a frame's counts; returns (rising, falling) global index arrays."""
        if not len(cache):
            empty = np.empty((0, 3), np.int64)
            return empty, empty
        if not np.all(in_window_array(cache.keys, self.center, self.shape)):
            raise ValueError("update cache holds cells outside the window")
        a = global_to_address_array(cache.keys, self.shape)
        old = self.log_odds[a]
        new = fuse(old, cache.n_hit, cache.n_miss, self.params)
        self.log_odds[a] = new
        was = old >= self.params.l_occ
        now = new >= self.params.l_occ
        return cache.keys[now & ~was], cache.keys[was & ~now]

    def integrate(self, cache: UpdateCache) -> InflationStats:
        """Fuse a cache and propagate the resulting transitions to the counters."""
        rising, falling = self.apply_cache(cache)
        self._t_mid = time.perf_counter()
        return process_transitions(rising, falling, self.table, self)

    def update(self, scan: Scan) -> FrameResult:
        """One frame: slide if needed, ray-cast, fuse, then inflate incrementally."""
        res = FrameResult()
        t0 = time.perf_counter()
        if self.should_slide(scan.origin):
            res.slide = self.slide_to(scan.origin)
        cache = self.cast(scan)
        res.stats = self.integrate(cache)
        t2 = time.perf_counter()
        t1 = self._t_mid
        res.t_update, res.t_inflate = t1 - t0, t2 - t1
        res.n_cache, res.n_dropped = len(cache), cache.n_dropped
        return res


def apply_cache(cache: UpdateCache, store: ROGMap) -> list[tuple[GlobalIndex, Transition]]:
    """Fuse ``cache`` into ``store``; list each cell whose state crossed the occupied threshold."""
    rising, falling = store.apply_cache(cache)
    out = [(GlobalIndex(*map(int, g)), Transition.RISING) for g in rising]
    out += [(GlobalIndex(*map(int, g)), Transition.FALLING) for g in falling]
    return out
