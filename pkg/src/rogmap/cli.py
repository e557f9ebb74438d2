"""Command-line front end: ``rogmap simulate | map | bench | query``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from rogmap import bench, oracles
from rogmap.index import ConfigError, world_to_global
from rogmap.occupancy import MapConfig, load_config
from rogmap.raycast import OriginOutsideWindowError
from rogmap.scanlog import ScanLogError, load_scan_log, write_scan_log
from rogmap.scene import BUILTIN_SCENES, LidarConfig, SceneError, load_scene, simulate_log


class CLIError(Exception):
    pass


def _triple(text: str):
    vals = [float(v) for v in text.replace(",", " ").split()]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return tuple(vals)


def _add_map_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("map configuration (flag > --config file > default)")
    g.add_argument("--config", type=Path, help="YAML file of flat config keys")
    g.add_argument("--resolution", type=float)
    g.add_argument("--map-size", type=float, nargs=3, metavar=("X", "Y", "Z"), help="window extent in meters")
    g.add_argument("--inflation-distance", type=float)
    g.add_argument("--max-raycast", type=float)
    g.add_argument("--slide-threshold", type=float)


def effective_config(args) -> MapConfig:
    cfg = load_config(args.config) if args.config else MapConfig()
    return cfg.replace(
        resolution=args.resolution,
        map_size=list(args.map_size) if args.map_size else None,
        inflation_distance=args.inflation_distance,
        max_raycast_distance=args.max_raycast,
        slide_threshold=args.slide_threshold,
    )


def small_window_axes(cfg: MapConfig) -> list[str]:
    shape = cfg.shape
    ext = np.array(shape.size) * cfg.resolution
    return [ax for ax, e in zip("xyz", ext) if e < 2 * cfg.max_raycast_distance]


def _load_log(path):
    try:
        return load_scan_log(path)
    except OSError as e:
        raise CLIError(f"cannot read scan log: {e}") from None


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.scene in BUILTIN_SCENES:
        scene = BUILTIN_SCENES[args.scene]() if args.scene != "forest" else BUILTIN_SCENES["forest"](seed=args.seed)
    else:
        try:
            scene = load_scene(args.scene)
        except OSError as e:
            raise CLIError(f"cannot read scene file: {e}") from None
    lidar = scene.lidar or LidarConfig()
    lidar = LidarConfig(
        rays=args.rays or lidar.rays,
        max_range=args.max_range or lidar.max_range,
        pattern=args.pattern or lidar.pattern,
        emit_max_range=args.emit_max_range or lidar.emit_max_range,
    )
    poses = scene.trajectory(args.frames, args.waypoint or None)
    scans = simulate_log(scene, poses, lidar, args.seed, args.dt)
    write_scan_log(scans, args.output, binary=args.binary)
    return 0


# -- map ----------------------------------------------------------------------

def selftest_frame(backend) -> list[str]:
    """Recheck inflation of the current map state against a full recount."""
    if backend.name == "rogmap":
        n = oracles.counter_mismatches(backend)
        return [f"{n} counters disagree with a full recount"] if n else []
    if backend.name == "hash":
        occ = {tuple(g) for g in backend.occupied_cells().tolist()}
        offs = [tuple(o) for o in backend.table.offsets.tolist()]
        want = {(a + x, b + y, c + z) for a, b, c in occ for x, y, z in offs}
        got = {tuple(g) for g in backend.inflated_cells().tolist()}
        return [] if want == got else [f"inflated set differs from recount in {len(want ^ got)} cells"]
    occ = backend.log_odds >= backend.params.l_occ
    n = int(np.count_nonzero(oracles.inflated_mask(occ, backend.table) != backend.inflated))
    return [f"{n} inflated flags disagree with a full recount"] if n else []


def cmd_map(args) -> int:
    cfg = effective_config(args)
    small = small_window_axes(cfg)
    if small:
        print(f"warning: window is smaller than 2 x max raycast distance along {','.join(small)}; "
              "rays will be truncated", file=sys.stderr)
    log = _load_log(args.log)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    if args.selftest:
        backend = bench.make_backend(args.backend, cfg, log, args.workers)
        failures = 0
        for i, scan in enumerate(log):
            backend.update(scan)
            for msg in selftest_frame(backend):
                failures += 1
                print(f"selftest: frame {i}: {msg}", file=sys.stderr)
        if failures:
            print(f"selftest failed ({failures} problems)", file=sys.stderr)
            return 1
        bench.dump_occupancy(backend, out / "occupancy.txt")
        return 0
    res = bench.run_benchmark(log, args.backend, cfg, queries=args.queries, seed=args.seed, workers=args.workers)
    bench.dump_occupancy(res.backend, out / "occupancy.txt")
    bench.write_metrics_csv(res, out / "metrics.csv", cfg, {"backend": args.backend, "log": args.log, "seed": args.seed})
    if not args.no_plot and res.frames:
        from rogmap.plots import plot_frames
        plot_frames(res, out / "frames.png", title=args.backend)
    return 0


# -- bench --------------------------------------------------------------------

def cmd_bench(args) -> int:
    bad = [b for b in args.backends if b not in bench.BACKENDS]
    if bad:
        raise CLIError(f"unknown backend(s) {', '.join(bad)}; valid names: {', '.join(bench.BACKENDS)}")
    if args.reps < 1:
        raise CLIError("--reps must be at least 1")
    cfg = effective_config(args)
    log = _load_log(args.log)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    with (out / "bench.csv").open("w", newline="") as fh:
        for k, v in cfg.to_flat().items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(bench.SUMMARY_HEADER)
        for name in args.backends:
            for rep in range(args.reps):
                s = bench.run_benchmark(log, name, cfg, queries=args.queries, seed=args.seed, workers=args.workers).summary
                summaries.append(s)
                w.writerow(bench.summary_row(s, rep))
    if not args.no_plot:
        from rogmap.plots import plot_bench
        plot_bench(summaries, out / "bench.png")
    return 0


# -- query --------------------------------------------------------------------

def cmd_query(args) -> int:
    try:
        dump = bench.load_occupancy_dump(args.dump)
    except (OSError, ValueError) as e:
        raise CLIError(f"cannot read occupancy dump: {e}") from None
    names = {"O": "occupied", "I": "inflated"}
    lines = []
    for p in args.points:
        g = world_to_global(p, args.resolution) if not args.index else tuple(int(round(v)) for v in p)
        lines.append(f"{g[0]} {g[1]} {g[2]} {names.get(dump.get(tuple(g)), 'not-occupied')}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rogmap", description="Robocentric occupancy grid mapping tools")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scan log")
    p.add_argument("--scene", default="forest", help=f"built-in ({', '.join(BUILTIN_SCENES)}) or YAML scene file")
    p.add_argument("--frames", type=int, help="poses along the trajectory")
    p.add_argument("--waypoint", type=_triple, action="append", help="x,y,z (repeat; overrides the scene path; write --waypoint=-1,0,0 for negatives)")
    p.add_argument("--rays", type=int)
    p.add_argument("--max-range", type=float)
    p.add_argument("--pattern", choices=["fibonacci", "random"])
    p.add_argument("--emit-max-range", action="store_true", help="report max-range points for rays that miss")
    p.add_argument("--dt", type=float, default=0.1, help="seconds between frames")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="write the binary log variant")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("map", help="replay a log; write occupancy dump, metrics CSV and figure")
    p.add_argument("log")
    p.add_argument("--backend", default="rogmap")
    p.add_argument("--selftest", action="store_true", help="check inflation against a full recount after every frame")
    p.add_argument("--queries", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="threads for ray casting")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--output", "-o", default=".", help="output directory")
    _add_map_flags(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("bench", help="summary rows per backend and repetition")
    p.add_argument("log")
    p.add_argument("--backend", dest="backends", action="append", help="repeatable; default: all")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--queries", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--output", "-o", default=".", help="output directory")
    _add_map_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("query", help="look up points in an occupancy dump")
    p.add_argument("dump")
    p.add_argument("points", type=_triple, nargs="+", metavar="X,Y,Z")
    p.add_argument("--resolution", type=float, default=MapConfig.resolution)
    p.add_argument("--index", action="store_true", help="points are grid indexes, not meters")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_query)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "map" and args.backend not in bench.BACKENDS:
        print(f"error: unknown backend {args.backend!r}; valid names: {', '.join(bench.BACKENDS)}", file=sys.stderr)
        return 2
    if args.command == "bench" and not args.backends:
        args.backends = list(bench.BACKENDS)
    try:
        return args.func(args)
    except (CLIError, ConfigError, SceneError, ScanLogError, OriginOutsideWindowError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
