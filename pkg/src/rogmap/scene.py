"""Synthetic scenes, an ideal ray-cast LiDAR, and ground-truth occupancy.

Scene files are YAML::

    bounds: {min: [-5, -5, 0], max: [5, 5, 3]}
    primitives:
      - {type: box, min: [1, -1, 0], max: [1.2, 1, 2]}
      - {type: wire, start: [2, -2, 1.5], end: [2, 2, 1.5], radius: 0.0015}
    trajectory:                     # optional
      waypoints: [[-3, 0, 1], [3, 0, 1]]
      frames: 50
    lidar:                          # optional
      rays: 4000
      max_range: 10.0
      pattern: fibonacci            # or: random
      emit_max_range: false

Boxes are axis-aligned; wires are capsules around a segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.spatial.transform import Rotation

from rogmap.index import box_indices
from rogmap.raycast import Scan, pack_keys, traverse_rays


class SceneError(ValueError):
    """Malformed scene description or impossible sensor placement."""


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def intersect(self, o: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Entry distance along unit rays ``d`` from ``o``; inf where missed."""
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d
            t1 = (lo - o) * inv
            t2 = (hi - o) * inv
        # axis-parallel rays: inside the slab gives (-inf, inf), outside gives an empty interval
        par = d == 0
        inside = (o >= lo) & (o <= hi)
        t1 = np.where(par, np.where(inside, -np.inf, np.inf), t1)
        t2 = np.where(par, np.inf, t2)
        tn = np.minimum(t1, t2).max(axis=1)
        tf = np.maximum(t1, t2).min(axis=1)
        hit = (tn <= tf) & (tn > 0)
        return np.where(hit, tn, np.inf)

    def contains(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float).reshape(-1, 3)
        return np.all((p > np.asarray(self.lo)) & (p < np.asarray(self.hi)), axis=1)

    def surface_distance(self, p: np.ndarray) -> np.ndarray:
        """Distance from points to the box surface (inside or out)."""
        p = np.asarray(p, dtype=float).reshape(-1, 3)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        outside = np.linalg.norm(np.maximum(np.maximum(lo - p, p - hi), 0.0), axis=1)
        inside = np.minimum(p - lo, hi - p).min(axis=1)
        return np.where(np.all((p >= lo) & (p <= hi), axis=1), inside, outside)

    def cell_overlap(self, lo: np.ndarray, hi: np.ndarray, tol: float):
        """(touches, fully_inside) for closed cells [lo, hi] of shape (N, 3)."""
        blo = np.asarray(self.lo)
        bhi = np.asarray(self.hi)
        touches = np.all((lo <= bhi + tol) & (hi >= blo - tol), axis=1)
        inside = np.all((lo >= blo - tol) & (hi <= bhi + tol), axis=1)
        return touches, inside


@dataclass(frozen=True)
class Wire:
    start: tuple[float, float, float]
    end: tuple[float, float, float]
    radius: float

    def intersect(self, o: np.ndarray, d: np.ndarray) -> np.ndarray:
        a = np.asarray(self.start)
        b = np.asarray(self.end)
        r = self.radius
        ba = b - a
        oa = o - a
        baba = ba @ ba
        bard = d @ ba
        baoa = oa @ ba
        rdoa = d @ oa
        oaoa = oa @ oa
        k2 = baba - bard * bard
        k1 = baba * rdoa - baoa * bard
        k0 = baba * oaoa - baoa * baoa - r * r * baba
        h = k1 * k1 - k2 * k0
        t = np.full(len(d), np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            tb = (-k1 - np.sqrt(np.maximum(h, 0.0))) / k2
        y = baoa + tb * bard
        body = (h >= 0) & (k2 > 0) & (y > 0) & (y < baba) & (tb > 0)
        t[body] = tb[body]
        # hemispherical caps
        for c in (a, b):
            oc = o - c
            bb = d @ oc
            cc = oc @ oc - r * r
            hh = bb * bb - cc
            tc = -bb - np.sqrt(np.maximum(hh, 0.0))
            ok = (hh >= 0) & (tc > 0) & ~body
            t = np.where(ok & (tc < t), tc, t)
        return t

    def _segment_distance(self, p: np.ndarray) -> np.ndarray:
        a = np.asarray(self.start)
        ba = np.asarray(self.end) - a
        s = np.clip(((p - a) @ ba) / (ba @ ba), 0.0, 1.0)
        return np.linalg.norm(p - (a + s[:, None] * ba), axis=1)

    def contains(self, p: np.ndarray) -> np.ndarray:
        return self._segment_distance(np.asarray(p, dtype=float).reshape(-1, 3)) < self.radius

    def surface_distance(self, p: np.ndarray) -> np.ndarray:
        return np.abs(self._segment_distance(np.asarray(p, dtype=float).reshape(-1, 3)) - self.radius)

    def cell_overlap(self, lo: np.ndarray, hi: np.ndarray, tol: float):
        a = np.asarray(self.start)
        ba = np.asarray(self.end) - a
        # distance from segment to each box is convex in the segment parameter
        s_lo = np.zeros(len(lo))
        s_hi = np.ones(len(lo))

        def dist(s):
            q = a + s[:, None] * ba
            return np.linalg.norm(np.maximum(np.maximum(lo - q, q - hi), 0.0), axis=1)

        for _ in range(60):
            m1 = s_lo + (s_hi - s_lo) / 3
            m2 = s_hi - (s_hi - s_lo) / 3
            left = dist(m1) <= dist(m2)
            s_hi = np.where(left, m2, s_hi)
            s_lo = np.where(left, s_lo, m1)
        touches = dist(0.5 * (s_lo + s_hi)) <= self.radius + tol
        corners = np.stack([np.where(np.array(bits, bool), hi, lo) for bits in np.ndindex(2, 2, 2)], axis=1)
        inside = np.all(self._segment_distance(corners.reshape(-1, 3)).reshape(-1, 8) <= self.radius + tol, axis=1)
        return touches, inside


@dataclass
class LidarConfig:
    rays: int = 4000
    max_range: float = 10.0
    pattern: str = "fibonacci"
    emit_max_range: bool = False

    def __post_init__(self):
        if self.rays <= 0:
            raise SceneError("lidar rays must be positive")
        if self.pattern not in ("fibonacci", "random"):
            raise SceneError(f"unknown lidar pattern {self.pattern!r}")


@dataclass
class Scene:
    primitives: list = field(default_factory=list)
    bounds_min: tuple[float, float, float] = (-10.0, -10.0, -10.0)
    bounds_max: tuple[float, float, float] = (10.0, 10.0, 10.0)
    waypoints: list | None = None
    frames: int | None = None
    lidar: LidarConfig | None = None

    def inside_any(self, p) -> bool:
        p = np.asarray(p, dtype=float).reshape(1, 3)
        return any(bool(prim.contains(p)[0]) for prim in self.primitives)

    def trajectory(self, frames: int | None = None, waypoints=None) -> np.ndarray:
        wp = np.asarray(waypoints if waypoints is not None else self.waypoints, dtype=float)
        n = frames if frames is not None else self.frames
        if wp is None or n is None:
            raise SceneError("scene has no trajectory; pass waypoints and a frame count")
        return resample_path(wp, n)


def resample_path(waypoints: np.ndarray, n: int) -> np.ndarray:
    """``n`` poses evenly spaced by arc length along a polyline."""
    wp = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    if len(wp) == 1 or n == 1:
        return np.repeat(wp[:1], n, axis=0)
    seg = np.linalg.norm(np.diff(wp, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    q = np.linspace(0.0, s[-1], n)
    return np.stack([np.interp(q, s, wp[:, k]) for k in range(3)], axis=1)


def fibonacci_directions(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def ray_directions(cfg: LidarConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.pattern == "fibonacci":
        rot = Rotation.random(random_state=rng)
        return rot.apply(fibonacci_directions(cfg.rays))
    v = rng.normal(size=(cfg.rays, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def first_hits(scene: Scene, origin, dirs: np.ndarray) -> np.ndarray:
    """Nearest hit distance along each direction; inf for no hit."""
    o = np.asarray(origin, dtype=float)
    t = np.full(len(dirs), np.inf)
    for prim in scene.primitives:
        t = np.minimum(t, prim.intersect(o, dirs))
    return t


def simulate_scan(scene: Scene, pose, cfg: LidarConfig, rng: np.random.Generator, timestamp: float = 0.0) -> Scan:
    if scene.inside_any(pose):
        raise SceneError(f"sensor pose {tuple(pose)} lies inside a primitive")
    o = np.asarray(pose, dtype=float)
    dirs = ray_directions(cfg, rng)
    t = first_hits(scene, o, dirs)
    hit = t <= cfg.max_range
    if cfg.emit_max_range:
        t = np.where(hit, t, cfg.max_range)
        hit = np.ones_like(hit)
    pts = o + dirs[hit] * t[hit, None]
    return Scan(tuple(o), pts, timestamp)


def simulate_log(scene: Scene, poses: np.ndarray, cfg: LidarConfig, seed: int, dt: float = 0.1) -> list[Scan]:
    rng = np.random.default_rng(seed)
    return [simulate_scan(scene, p, cfg, rng, i * dt) for i, p in enumerate(np.asarray(poses, dtype=float))]


# -- ground truth -------------------------------------------------------------

GT_UNSEEN, GT_FREE, GT_OCCUPIED = 0, 1, 2


def swept_keys(scans, r: float) -> np.ndarray:
    """Packed keys of every cell crossed by any ray of ``scans`` (sorted, unique)."""
    keys = []
    for s in scans:
        if len(s.points):
            cells, _, _ = traverse_rays(np.asarray(s.origin), s.points, r)
            keys.append(np.unique(pack_keys(cells)))
    if not keys:
        return np.empty(0, np.int64)
    return np.unique(np.concatenate(keys))


def classify_cells(scene: Scene, cells: np.ndarray, r: float, tol: float = 1e-9):
    """Per cell: (touches a primitive, straddles a primitive surface)."""
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 3)
    lo = (cells - 0.5) * r
    hi = (cells + 0.5) * r
    touches = np.zeros(len(cells), bool)
    inside = np.zeros(len(cells), bool)
    for prim in scene.primitives:
        t, i = prim.cell_overlap(lo, hi, tol)
        touches |= t
        inside |= i
    return touches, touches & ~inside


def ground_truth_states(scene: Scene, cells: np.ndarray, r: float, swept: np.ndarray):
    """Ground-truth labels and a boundary-band mask for ``cells``.

    Occupied if the cell touches a primitive, Free if it does not and some
    ray crossed it, Unseen otherwise.  ``band`` marks cells straddling a
    primitive surface, which scoring skips.
    """
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 3)
    touches, band = classify_cells(scene, cells, r)
    seen = np.isin(pack_keys(cells), swept)
    gt = np.full(len(cells), GT_UNSEEN, dtype=np.int8)
    gt[seen] = GT_FREE
    gt[touches] = GT_OCCUPIED
    return gt, band


def ground_truth_state(scene: Scene, g, r: float, swept: np.ndarray) -> int:
    gt, _ = ground_truth_states(scene, np.asarray([g]), r, swept)
    return int(gt[0])


# -- scene files and built-in scenes ------------------------------------------


def _vec(v, what):
    try:
        out = tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise SceneError(f"{what}: expected three numbers, got {v!r}") from None
    if len(out) != 3:
        raise SceneError(f"{what}: expected three numbers, got {v!r}")
    return out


def scene_from_dict(d: dict) -> Scene:
    if not isinstance(d, dict):
        raise SceneError("scene file must be a mapping")
    unknown = set(d) - {"bounds", "primitives", "trajectory", "lidar"}
    if unknown:
        raise SceneError(f"unknown scene keys: {sorted(unknown)}")
    prims = []
    for i, p in enumerate(d.get("primitives") or []):
        kind = p.get("type") if isinstance(p, dict) else None
        if kind == "box":
            lo, hi = _vec(p.get("min"), f"primitive {i} min"), _vec(p.get("max"), f"primitive {i} max")
            if any(a >= b for a, b in zip(lo, hi)):
                raise SceneError(f"primitive {i}: box min must be below max")
            prims.append(Box(lo, hi))
        elif kind == "wire":
            radius = float(p.get("radius", 0.0015))
            if radius <= 0:
                raise SceneError(f"primitive {i}: wire radius must be positive")
            prims.append(Wire(_vec(p.get("start"), f"primitive {i} start"), _vec(p.get("end"), f"primitive {i} end"), radius))
        else:
            raise SceneError(f"primitive {i}: unknown type {kind!r}")
    b = d.get("bounds") or {}
    scene = Scene(prims, _vec(b.get("min", (-10, -10, -10)), "bounds min"), _vec(b.get("max", (10, 10, 10)), "bounds max"))
    if "trajectory" in d:
        t = d["trajectory"]
        scene.waypoints = [_vec(w, "waypoint") for w in t.get("waypoints", [])]
        scene.frames = int(t.get("frames", len(scene.waypoints)))
    if "lidar" in d:
        scene.lidar = LidarConfig(**d["lidar"])
    return scene


def scene_to_dict(scene: Scene) -> dict:
    prims = []
    for p in scene.primitives:
        if isinstance(p, Box):
            prims.append({"type": "box", "min": list(p.lo), "max": list(p.hi)})
        else:
            prims.append({"type": "wire", "start": list(p.start), "end": list(p.end), "radius": p.radius})
    d = {"bounds": {"min": list(scene.bounds_min), "max": list(scene.bounds_max)}, "primitives": prims}
    if scene.waypoints is not None:
        d["trajectory"] = {"waypoints": [list(w) for w in scene.waypoints], "frames": scene.frames}
    if scene.lidar is not None:
        lc = scene.lidar
        d["lidar"] = {"rays": lc.rays, "max_range": lc.max_range, "pattern": lc.pattern, "emit_max_range": lc.emit_max_range}
    return d


def load_scene(path) -> Scene:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as e:
        raise SceneError(f"{path}: {e}") from None
    return scene_from_dict(data)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(yaml.safe_dump(scene_to_dict(scene), sort_keys=False))


def forest_scene(seed: int = 0, n_trees: int = 40, extent: float = 10.0, frames: int = 200) -> Scene:
    """Ground slab plus randomly placed vertical trunks; the path runs along x."""
    rng = np.random.default_rng(seed)
    prims: list = [Box((-extent, -extent, -0.3), (extent, extent, -0.22))]
    placed = 0
    while placed < n_trees:
        x, y = rng.uniform(-extent + 1, extent - 1), rng.uniform(-4.0, 4.0)
        if abs(y) < 0.8:  # keep the corridor clear
            continue
        rad = rng.uniform(0.08, 0.2)
        prims.append(Wire((x, y, -0.25), (x, y, 2.5), rad))
        placed += 1
    return Scene(
        prims,
        (-extent, -extent, -0.5),
        (extent, extent, 3.0),
        waypoints=[(-extent + 1.5, 0.0, 0.7), (extent - 1.5, 0.0, 0.7)],
        frames=frames,
        lidar=LidarConfig(rays=2000, max_range=6.0),
    )


def box_room_scene(frames: int = 50) -> Scene:
    """Closed room with sub-cell-thick walls and a few panels and pillars inside.

    Wall faces sit inside cells (not on cell boundaries) at r = 0.1 m.
    """
    t = 0.04
    x0, x1, y0, y1, z0, z1 = -2.02, 2.02, -1.52, 1.52, -0.02, 2.02
    prims = [
        Box((x0 - t, y0 - t, z0 - t), (x1 + t, y1 + t, z0)),  # floor
        Box((x0 - t, y0 - t, z1), (x1 + t, y1 + t, z1 + t)),  # ceiling
        Box((x0 - t, y0 - t, z0), (x0, y1 + t, z1)),
        Box((x1, y0 - t, z0), (x1 + t, y1 + t, z1)),
        Box((x0, y0 - t, z0), (x1, y0, z1)),
        Box((x0, y1, z0), (x1, y1 + t, z1)),
        Box((0.62, 0.48, -0.02), (0.68, 1.52, 1.2)),  # panel
        Box((-1.28, -0.72, -0.02), (-1.02, -0.48, 1.62)),  # pillar
        Box((1.12, -1.12, -0.02), (1.58, -0.78, 0.74)),  # table block
    ]
    return Scene(
        prims,
        (x0 - 0.5, y0 - 0.5, z0 - 0.5),
        (x1 + 0.5, y1 + 0.5, z1 + 0.5),
        waypoints=[(-1.5, 0.0, 1.0), (1.5, 0.0, 1.0), (1.5, 0.9, 1.4), (-1.5, 0.9, 1.4)],
        frames=frames,
        lidar=LidarConfig(rays=6000, max_range=8.0),
    )


def wire_scene(frames: int = 40, radius: float = 0.0015) -> Scene:
    """Thin wires in open air (no background) in front of a moving sensor.

    Wire axes run through cell centers at r = 0.05 m.
    """
    prims = [
        Wire((2.0, -1.0, 1.0), (2.0, 1.0, 1.0), radius),
        Wire((2.0, -1.0, 1.5), (2.0, 1.0, 1.5), radius),
        Wire((2.5, -0.5, 0.5), (2.5, -0.5, 2.0), radius),
        Wire((2.5, 0.5, 0.5), (2.5, 0.5, 2.0), radius),
        Wire((3.0, -1.0, 0.6), (3.0, 1.0, 1.9), radius),
    ]
    return Scene(
        prims,
        (-1.0, -3.0, -1.0),
        (5.0, 3.0, 3.0),
        waypoints=[(0.0, -1.0, 1.2), (0.0, 1.0, 1.2), (0.5, 1.0, 1.3), (0.5, -1.0, 1.2)],
        frames=frames,
        lidar=LidarConfig(rays=200000, max_range=5.0),
    )


BUILTIN_SCENES = {"forest": forest_scene, "box-room": box_room_scene, "wires": wire_scene}
