import time

import numpy as np
import pytest

from rogmap import bench
from rogmap.index import ConfigError, box_indices
from rogmap.occupancy import MapConfig
from rogmap.rog_map import ROGMap

from test_baselines import CFG, _random_scans


def test_zero_frame_log():
    res = bench.run_benchmark([], "rogmap", CFG)
    assert res.frames == [] and res.summary.frames == 0
    assert res.summary.t_tot == 0 and res.summary.n_inf == 0 and res.summary.mem_bytes == 0


def test_unknown_backend():
    with pytest.raises(ConfigError, match="valid"):
        bench.make_backend("octomap", CFG)


def test_fixed_box_must_hold_the_trajectory():
    cfg = CFG.replace(scene_min=(5.0, 5.0, 5.0), scene_max=(6.0, 6.0, 6.0))
    with pytest.raises(ConfigError):
        bench.run_benchmark(_random_scans(0, 2), "uniform-fixed", cfg)


def test_default_uniform_box_covers_every_window():
    scans = _random_scans(0, 3)
    scans[2].origin = (1.0, -0.5, 0.0)
    u = bench.make_backend("uniform-fixed", CFG, scans)
    lo, hi = u.box
    assert lo.tolist() == [-15, -20, -7] and hi.tolist() == [25, 15, 7]


def test_default_uniform_box_is_the_window_without_slides():
    scans = _random_scans(0, 3)
    scans[1].origin = (0.5, 0.3, 0.0)
    u = bench.make_backend("uniform-fixed", CFG, scans)
    r = ROGMap(CFG, scans[0].origin)
    assert [b.tolist() for b in u.box] == [b.tolist() for b in r.box]


def test_rogmap_equals_uniform_fixed():
    log = _random_scans(4, 10)
    a = bench.run_benchmark(log, "rogmap", CFG, queries=10)
    b = bench.run_benchmark(log, "uniform-fixed", CFG, queries=10)
    cells = box_indices(*a.backend.box)
    assert np.array_equal(a.backend.occ_state_at(cells), b.backend.occ_state_at(cells))


def test_n_inf_accounting_and_timing_fields():
    log = _random_scans(5, 8)
    res = bench.run_benchmark(log, "rogmap", CFG, queries=10)
    m = ROGMap(CFG, log[0].origin)
    total = sum(m.update(s).stats.n_inf for s in log)
    assert res.summary.n_inf_total == total
    assert res.summary.n_inf == pytest.approx(total / len(log))
    for f in res.frames:
        assert f.n_inf >= 0 and f.t_update >= 0 and f.t_inflate >= 0
        assert f.t_tot >= f.t_update + f.t_inflate - 1e-6
        assert f.mem_bytes == CFG.shape.n_cells * 10
    assert res.summary.mem_bytes == CFG.shape.n_cells * 10


def test_replay_determinism(tmp_path):
    log = _random_scans(6, 6)
    for name in bench.BACKENDS:
        a = bench.run_benchmark(log, name, CFG, queries=1000, seed=3)
        b = bench.run_benchmark(log, name, CFG, queries=1000, seed=3)
        assert [f.n_inf for f in a.frames] == [f.n_inf for f in b.frames]
        assert a.summary.checksum == b.summary.checksum
        bench.dump_occupancy(a.backend, tmp_path / "a.txt")
        bench.dump_occupancy(b.backend, tmp_path / "b.txt")
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_query_bench_properties():
    m = bench.run_benchmark(_random_scans(7, 4), "rogmap", CFG, queries=0).backend
    t0, _ = bench.random_query_bench(m, 0, seed=1)
    assert t0 < 1e-3
    _, c1 = bench.random_query_bench(m, 5000, seed=1)
    _, c2 = bench.random_query_bench(m, 5000, seed=1)
    _, c3 = bench.random_query_bench(m, 5000, seed=2)
    assert c1 == c2 and c1 != c3
    small = min(bench.random_query_bench(m, 10_000, seed=s)[0] for s in range(5))
    big = min(bench.random_query_bench(m, 100_000, seed=s)[0] for s in range(5))
    assert 10 / 3 <= big / small <= 30


def test_queries_stay_in_window():
    m = bench.run_benchmark(_random_scans(7, 2), "rogmap", CFG, queries=0).backend
    lo, hi = m.box
    pts = np.random.default_rng(0).uniform((lo - 0.5) * 0.1, (hi + 0.5) * 0.1, size=(1000, 3))
    assert np.all(m.query_many(pts) >= 0)


def test_metrics_csv(tmp_path):
    res = bench.run_benchmark(_random_scans(8, 3), "fiimap-style", CFG, queries=10)
    bench.write_metrics_csv(res, tmp_path / "m.csv", CFG, {"backend": "fiimap-style"})
    text = (tmp_path / "m.csv").read_text()
    assert "# resolution=0.1" in text and "# summary" in text
    rows = bench.read_metrics_csv(tmp_path / "m.csv")
    assert list(rows[0]) == bench.METRICS_HEADER
    assert [int(r["n_inf"]) for r in rows] == [f.n_inf for f in res.frames]


def test_occupancy_dump_sorted(tmp_path):
    res = bench.run_benchmark(_random_scans(9, 3), "hash", CFG, queries=10)
    bench.dump_occupancy(res.backend, tmp_path / "d.txt")
    lines = (tmp_path / "d.txt").read_text().splitlines()
    keys = [tuple(map(int, ln.split()[:3])) for ln in lines]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    tags = {ln.split()[3] for ln in lines}
    assert tags == {"O", "I"}
    d = bench.load_occupancy_dump(tmp_path / "d.txt")
    occ = {tuple(g) for g in res.backend.occupied_cells().tolist()}
    assert {k for k, v in d.items() if v == "O"} == occ
