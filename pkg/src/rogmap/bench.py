"""Replay scan logs through a backend and collect per-frame metrics."""

from __future__ import annotations

import csv
import time
import zlib
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from rogmap.baselines import FIIMapStyle, HashMap, UniformFixedMap
from rogmap.index import ConfigError, global_to_world, world_to_global, world_to_global_array
from rogmap.occupancy import MapConfig
from rogmap.rog_map import ROGMap
from rogmap.sliding import should_slide

BACKENDS = {
    "rogmap": ROGMap,
    "uniform-fixed": UniformFixedMap,
    "fiimap-style": FIIMapStyle,
    "hash": HashMap,
}

METRICS_HEADER = ["frame", "t_tot_us", "t_update_us", "t_inflate_us", "n_inf", "mem_bytes"]
SUMMARY_HEADER = ["backend", "rep", "t_tot_ms", "t_u_ms", "n_inf", "t_inf_ms", "t_q_ms", "m_mb"]


@dataclass
class FrameMetrics:
    t_tot: float
    t_update: float
    t_inflate: float
    n_inf: int
    mem_bytes: int


@dataclass
class Summary:
    backend: str
    frames: int = 0
    t_tot: float = 0.0
    t_update: float = 0.0
    n_inf: float = 0.0
    t_inflate: float = 0.0
    t_query: float = 0.0
    mem_bytes: int = 0
    n_inf_total: int = 0
    checksum: int = 0


@dataclass
class BenchResult:
    frames: list[FrameMetrics] = field(default_factory=list)
    summary: Summary | None = None
    backend: object = None


def scene_box_for(log, cfg: MapConfig):
    """Default box for the fixed-grid baselines, in meters.

    If the sensor never strays past the slide threshold, this is the window a
    ROGMap started at the first pose keeps for the whole log; otherwise it is
    the union of the windows around every sensor position.
    """
    r = cfg.resolution
    origins = np.array([s.origin for s in log], dtype=float)
    half = np.asarray(cfg.shape.half)
    c0 = np.asarray(world_to_global(origins[0], r))
    if not any(should_slide(o, global_to_world(c0, r), cfg.slide_threshold) for o in origins):
        return tuple(global_to_world(c0 - half, r).tolist()), tuple(global_to_world(c0 + half, r).tolist())
    g = world_to_global_array(origins, r)
    lo = global_to_world(g.min(axis=0) - half, r)
    hi = global_to_world(g.max(axis=0) + half, r)
    return tuple(lo.tolist()), tuple(hi.tolist())


def make_backend(name: str, cfg: MapConfig, log=None, workers: int = 1):
    if name not in BACKENDS:
        raise ConfigError(f"unknown backend {name!r}; valid: {', '.join(BACKENDS)}")
    origin = log[0].origin if log else (0.0, 0.0, 0.0)
    if name == "rogmap":
        return ROGMap(cfg, origin, workers=workers)
    if name in ("uniform-fixed", "fiimap-style") and log and (cfg.scene_min is None or cfg.scene_max is None):
        lo, hi = scene_box_for(log, cfg)
        cfg = cfg.replace(scene_min=lo, scene_max=hi)
    backend = BACKENDS[name](cfg, origin)
    if log and backend.box is not None:
        g = world_to_global_array(np.array([s.origin for s in log]), cfg.resolution)
        lo, hi = backend.box
        if not np.all((g >= lo) & (g <= hi)):
            raise ConfigError(f"{name}: scene box does not contain every sensor position of the log")
    return backend


def random_query_bench(backend, count: int = 100_000, seed: int = 0, box=None) -> tuple[float, int]:
    """Time ``count`` uniformly random queries inside the map; returns (seconds, checksum)."""
    r = backend.cfg.resolution
    if box is None:
        box = backend.box if backend.box is not None else _touched_box(backend)
    lo = global_to_world(box[0], r) - 0.5 * r
    hi = global_to_world(box[1], r) + 0.5 * r
    pts = np.random.default_rng(seed).uniform(lo, hi, size=(count, 3))
    t0 = time.perf_counter()
    codes = backend.query_many(pts) if count else np.empty(0, np.int8)
    dt = time.perf_counter() - t0
    return dt, zlib.crc32(np.ascontiguousarray(codes, dtype=np.int8).tobytes())


def _touched_box(backend):
    cells = backend.occupied_cells()
    if len(cells) == 0:
        z = np.zeros(3, np.int64)
        return z, z
    return cells.min(axis=0), cells.max(axis=0)


def run_benchmark(log, backend_name: str, cfg: MapConfig, queries: int = 100_000, seed: int = 0,
                  workers: int = 1) -> BenchResult:
    res = BenchResult(summary=Summary(backend_name))
    if not log:
        res.backend = make_backend(backend_name, cfg, None, workers)
        return res
    backend = make_backend(backend_name, cfg, log, workers)
    peak = 0
    for scan in log:
        fr = backend.update(scan)
        mem = backend.memory_bytes()
        peak = max(peak, mem)
        res.frames.append(FrameMetrics(fr.t_total, fr.t_update, fr.t_inflate, fr.stats.n_inf, mem))
    s = res.summary
    s.frames = len(res.frames)
    s.t_tot = float(np.mean([f.t_tot for f in res.frames]))
    s.t_update = float(np.mean([f.t_update for f in res.frames]))
    s.t_inflate = float(np.mean([f.t_inflate for f in res.frames]))
    s.n_inf_total = int(sum(f.n_inf for f in res.frames))
    s.n_inf = s.n_inf_total / s.frames
    s.mem_bytes = peak
    s.t_query, s.checksum = random_query_bench(backend, queries, seed)
    res.backend = backend
    return res


def write_metrics_csv(result: BenchResult, path, cfg: MapConfig | None = None, extra: dict | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        if cfg is not None:
            for k, v in cfg.to_flat().items():
                fh.write(f"# {k}={v}\n")
        for k, v in (extra or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(METRICS_HEADER)
        for i, f in enumerate(result.frames):
            w.writerow([i, f"{f.t_tot * 1e6:.3f}", f"{f.t_update * 1e6:.3f}", f"{f.t_inflate * 1e6:.3f}", f.n_inf, f.mem_bytes])
        s = result.summary
        fh.write("# summary\n")
        for k, v in asdict(s).items():
            fh.write(f"# {k}={v}\n")


def summary_row(s: Summary, rep: int) -> list:
    return [s.backend, rep, f"{s.t_tot * 1e3:.6f}", f"{s.t_update * 1e3:.6f}", f"{s.n_inf:.3f}",
            f"{s.t_inflate * 1e3:.6f}", f"{s.t_query * 1e3:.6f}", f"{s.mem_bytes / 1e6:.6f}"]


def read_metrics_csv(path) -> list[dict]:
    with Path(path).open() as fh:
        rows = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(rows))


def dump_occupancy(backend, path) -> None:
    """Canonical text dump: ``ix iy iz O`` for occupied, ``ix iy iz I`` for inflated-only cells."""
    occ = {tuple(map(int, g)) for g in backend.occupied_cells()}
    infl = {tuple(map(int, g)) for g in backend.inflated_cells()}
    with Path(path).open("w") as fh:
        for g in sorted(occ | infl):
            fh.write(f"{g[0]} {g[1]} {g[2]} {'O' if g in occ else 'I'}\n")


def load_occupancy_dump(path) -> dict[tuple[int, int, int], str]:
    out = {}
    for ln in Path(path).read_text().splitlines():
        if ln.strip():
            ix, iy, iz, tag = ln.split()
            out[(int(ix), int(iy), int(iz))] = tag
    return out
