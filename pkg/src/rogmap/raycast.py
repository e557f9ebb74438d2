"""Voxel traversal and per-frame hit/miss accumulation.

Cells are centered on integer multiples of the resolution, so cell ``g``
spans ``[(g - 0.5) r, (g + 0.5) r)`` on each axis.  Traversal follows
Amanatides & Woo but counts the exact number of boundary crossings per axis
up front, which guarantees that every ray ends in the endpoint's cell and
that consecutive cells are face neighbors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rogmap.index import GlobalIndex, world_to_global, world_to_global_array


class OriginOutsideWindowError(RuntimeError):
    """Scan origin is not inside the current window; the frame is rejected."""


@dataclass
class Scan:
    origin: tuple[float, float, float]
    points: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.origin = tuple(float(v) for v in self.origin)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.timestamp = float(self.timestamp)


def traverse_ray(origin, endpoint, r: float) -> list[GlobalIndex]:
    """Cells crossed by the segment origin -> endpoint, in order."""
    g = list(world_to_global(origin, r))
    g_end = world_to_global(endpoint, r)
    cells = [GlobalIndex(*g)]
    step = [0, 0, 0]
    remaining = [0, 0, 0]
    t_max = [math.inf] * 3
    t_delta = [math.inf] * 3
    for k in range(3):
        diff = g_end[k] - g[k]
        if diff == 0:
            continue
        d = endpoint[k] - origin[k]
        step[k] = 1 if diff > 0 else -1
        remaining[k] = abs(diff)
        boundary = (g[k] + 0.5 * step[k]) * r
        t_max[k] = (boundary - origin[k]) / d
        t_delta[k] = r / abs(d)
    for _ in range(sum(remaining)):
        k = min((a for a in range(3) if remaining[a]), key=lambda a: t_max[a])
        g[k] += step[k]
        t_max[k] += t_delta[k]
        remaining[k] -= 1
        cells.append(GlobalIndex(*g))
    return cells


def traverse_rays(origins: np.ndarray, endpoints: np.ndarray, r: float):
    """Vectorized ``traverse_ray`` over N rays.

    Returns ``(cells, ray_id, is_last)``: an (M, 3) int64 array of visited
    cells, the ray each row belongs to, and whether the row is that ray's
    final cell.  Rows of one ray appear in traversal order.
    """
    endpoints = np.asarray(endpoints, dtype=float).reshape(-1, 3)
    n = len(endpoints)
    origins = np.broadcast_to(np.asarray(origins, dtype=float), (n, 3))
    if n == 0:
        return np.empty((0, 3), np.int64), np.empty(0, np.int64), np.empty(0, bool)

    g0 = world_to_global_array(origins, r)
    g1 = world_to_global_array(endpoints, r)
    diff = g1 - g0
    total = np.abs(diff).sum(axis=1)
    # longest rays first, so the active set is always a prefix
    order = np.argsort(-total, kind="stable")
    g = g0[order].copy()
    diff = diff[order]
    total = total[order]
    o = origins[order]
    d = endpoints[order] - o
    step = np.sign(diff)
    remaining = np.abs(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_max = np.where(step != 0, ((g + 0.5 * step) * r - o) / d, np.inf)
        t_delta = np.where(step != 0, r / np.abs(d), np.inf)

    cells = [g.copy()]
    ids = [order.copy()]
    last = [total == 0]
    n_iter = int(total[0])
    n_active = n
    rows = np.arange(n)
    for it in range(n_iter):
        while total[n_active - 1] <= it:
            n_active -= 1
        a = slice(0, n_active)
        tm = np.where(remaining[a] > 0, t_max[a], np.inf)
        k = np.argmin(tm, axis=1)
        ra = rows[a]
        g[ra, k] += step[ra, k]
        t_max[ra, k] += t_delta[ra, k]
        remaining[ra, k] -= 1
        cells.append(g[a].copy())
        ids.append(order[a])
        last.append(total[a] == it + 1)
    return np.concatenate(cells), np.concatenate(ids), np.concatenate(last)


_PACK_BITS = 21
_PACK_OFF = 1 << (_PACK_BITS - 1)
_PACK_MASK = (1 << _PACK_BITS) - 1


def pack_keys(g: np.ndarray) -> np.ndarray:
    """Pack (N, 3) global indexes with |i| < 2**20 into sortable int64 keys."""
    g = np.asarray(g, dtype=np.int64) + _PACK_OFF
    return (g[:, 0] << (2 * _PACK_BITS)) | (g[:, 1] << _PACK_BITS) | g[:, 2]


def unpack_keys(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    out = np.stack([(k >> (2 * _PACK_BITS)) & _PACK_MASK, (k >> _PACK_BITS) & _PACK_MASK, k & _PACK_MASK], axis=1)
    return out - _PACK_OFF


@dataclass
class UpdateCache:
    """Per-frame hit/miss counts per touched cell, keyed by global index.

    ``keys`` is kept in lexicographic order. ``n_dropped`` counts non-finite
    points skipped while casting.
    """

    keys: np.ndarray = field(default_factory=lambda: np.empty((0, 3), np.int64))
    n_hit: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    n_miss: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    n_dropped: int = 0

    def __len__(self):
        return len(self.keys)

    def __getitem__(self, g) -> tuple[int, int]:
        i = self._find(g)
        if i is None:
            raise KeyError(tuple(g))
        return int(self.n_hit[i]), int(self.n_miss[i])

    def __contains__(self, g) -> bool:
        return self._find(g) is not None

    def _find(self, g):
        if not len(self.keys):
            return None
        key = pack_keys(np.asarray([g]))[0]
        packed = pack_keys(self.keys)
        i = int(np.searchsorted(packed, key))
        return i if i < len(packed) and packed[i] == key else None

    def as_dict(self) -> dict[GlobalIndex, tuple[int, int]]:
        return {GlobalIndex(*map(int, g)): (int(h), int(m)) for g, h, m in zip(self.keys, self.n_hit, self.n_miss)}

    @classmethod
    def from_counts(cls, cells: np.ndarray, hits: np.ndarray, misses: np.ndarray, n_dropped: int = 0) -> "UpdateCache":
        """Aggregate per-row hit/miss increments of possibly repeated cells."""
        if len(cells) == 0:
            return cls(n_dropped=n_dropped)
        uniq, inv = np.unique(pack_keys(cells), return_inverse=True)
        inv = inv.ravel()
        h = np.bincount(inv, weights=hits, minlength=len(uniq)).astype(np.int64)
        m = np.bincount(inv, weights=misses, minlength=len(uniq)).astype(np.int64)
        return cls(unpack_keys(uniq), h, m, n_dropped)

    @classmethod
    def from_dict(cls, d: dict) -> "UpdateCache":
        if not d:
            return cls()
        cells = np.array([tuple(k) for k in d], dtype=np.int64)
        hm = np.array(list(d.values()), dtype=np.int64)
        return cls.from_counts(cells, hm[:, 0], hm[:, 1])

    def merge(self, other: "UpdateCache") -> "UpdateCache":
        cells = np.concatenate([self.keys, other.keys])
        return UpdateCache.from_counts(
            cells,
            np.concatenate([self.n_hit, other.n_hit]),
            np.concatenate([self.n_miss, other.n_miss]),
            self.n_dropped + other.n_dropped,
        )


def cast_scan(scan: Scan, r: float, max_range: float, box=None) -> UpdateCache:
    """Ray-cast one scan into an UpdateCache.

    ``box`` is an inclusive (lo, hi) pair of global indexes.  When given, rays
    are clipped to it and the scan origin must lie inside it; otherwise the
    domain is unbounded.
    """
    windowed = box is not None
    origin = np.asarray(scan.origin, dtype=float)
    if windowed:
        lo, hi = (np.asarray(b, dtype=np.int64) for b in box)
        if not _in_box(np.asarray([world_to_global(origin, r)]), lo, hi)[0]:
            raise OriginOutsideWindowError(f"scan origin {scan.origin} outside map box {lo.tolist()}..{hi.tolist()}")

    pts = scan.points
    finite = np.all(np.isfinite(pts), axis=1)
    n_dropped = int((~finite).sum())
    pts = pts[finite]
    if len(pts) == 0:
        return UpdateCache(n_dropped=n_dropped)

    delta = pts - origin
    dist = np.linalg.norm(delta, axis=1)
    in_range = dist <= max_range
    scale = np.where(in_range, 1.0, max_range / np.where(dist > 0, dist, 1.0))
    ends = origin + delta * scale[:, None]

    cells, ray_id, is_last = traverse_rays(origin, ends, r)
    can_hit = in_range
    if windowed:
        keep = _in_box(cells, lo, hi)
        can_hit = in_range & _in_box(world_to_global_array(ends, r), lo, hi)
        cells, ray_id, is_last = cells[keep], ray_id[keep], is_last[keep]
    hit = is_last & can_hit[ray_id]
    return UpdateCache.from_counts(cells, hit.astype(np.int64), (~hit).astype(np.int64), n_dropped)


def _in_box(g: np.ndarray, lo, hi) -> np.ndarray:
    return np.all((g >= lo) & (g <= hi), axis=1)


def cast_scan_parallel(scan: Scan, r, max_range, box=None, workers: int = 2) -> UpdateCache:
    """Split the scan's points across threads and merge the per-chunk caches."""
    from concurrent.futures import ThreadPoolExecutor

    chunks = np.array_split(scan.points, max(1, workers))
    scans = [Scan(scan.origin, c, scan.timestamp) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        caches = list(ex.map(lambda s: cast_scan(s, r, max_range, box), scans))
    out = caches[0]
    for c in caches[1:]:
        out = out.merge(c)
    return out
