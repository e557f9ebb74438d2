import numpy as np
import pytest

from rogmap.index import global_to_address_array, global_to_world
from rogmap.occupancy import MapConfig
from rogmap.oracles import counter_mismatches
from rogmap.raycast import Scan, UpdateCache, pack_keys
from rogmap.rog_map import ROGMap
from rogmap.sliding import box_difference, box_intersection, should_slide

from test_inflation import _random_cache


def test_should_slide_strict():
    assert not should_slide((1.0, 0, 0), (0, 0, 0), 1.0)
    assert should_slide((1.0001, 0, 0), (0, 0, 0), 1.0)
    assert should_slide((0, 0.8, 0.8), (0, 0, 0), 1.0)


def test_box_difference_partitions():
    a_lo, a_hi = np.array([0, 0, 0]), np.array([6, 5, 4])
    b_lo, b_hi = np.array([2, -1, 3]), np.array([8, 4, 9])
    pieces = box_difference(a_lo, a_hi, b_lo, b_hi)
    cells = [tuple(c) for lo, hi in pieces for c in np.argwhere(np.ones(hi - lo + 1, bool)) + lo]
    want = {(x, y, z) for x in range(7) for y in range(6) for z in range(5)
            if not (2 <= x <= 8 and -1 <= y <= 4 and 3 <= z <= 9)}
    assert len(cells) == len(set(cells)) and set(cells) == want
    lo, hi = box_intersection(a_lo, a_hi, b_lo, b_hi)
    assert lo.tolist() == [2, 0, 3] and hi.tolist() == [6, 4, 4]
    assert box_intersection(a_lo, a_hi, a_hi + 1, a_hi + 3) is None


def test_slide_example_keeps_retained_cells():
    r = 0.1
    m = ROGMap(MapConfig(resolution=r, map_size=(0.5, 0.5, 0.5), inflation_distance=0.0))
    m.integrate(UpdateCache.from_dict({(2, 0, 0): (1, 0), (-2, 0, 0): (1, 0)}))
    a = m.address_of((2, 0, 0))
    rep = m.slide_to((0.1, 0, 0))
    assert rep.cells_reset == 25
    assert m.address_of((2, 0, 0)) == a and m.query((0.2, 0, 0)) == 3
    assert m.in_window((3, 0, 0)) and not m.in_window((-2, 0, 0))
    assert m.log_odds[m.address_of((3, 0, 0))] == 0.0


def _walk(seed, steps):
    rng = np.random.default_rng(seed)
    cfg = MapConfig(resolution=0.1, map_size=(1.3, 1.1, 0.9), inflation_distance=0.2)
    m = ROGMap(cfg)
    for _ in range(steps):
        m.integrate(_random_cache(rng, m.box, 30))
        lo, hi = m.box
        cells = np.argwhere(np.ones(hi - lo + 1, bool)) + lo
        addr = global_to_address_array(cells, m.shape)
        snap = m.log_odds[addr].copy()
        step = rng.integers(-4, 5, size=3) * (rng.random(3) < 0.6)
        if rng.random() < 0.05:
            step = rng.integers(-20, 21, size=3)
        new_c = m.center + step
        m.slide_to(global_to_world(new_c, cfg.resolution))
        kept = np.all(np.abs(cells - new_c) <= np.asarray(m.shape.half), axis=1)
        yield m, cells, addr, snap, kept


def test_random_slide_walk():
    for m, cells, addr, snap, kept in _walk(11, 120):
        assert np.array_equal(global_to_address_array(cells[kept], m.shape), addr[kept])
        now = m.log_odds[addr[kept]]
        assert now.tobytes() == snap[kept].tobytes()
        lo, hi = m.box
        fresh = np.argwhere(np.ones(hi - lo + 1, bool)) + lo
        admitted = ~np.isin(pack_keys(fresh), pack_keys(cells[kept]))
        assert admitted.sum() == len(fresh) - kept.sum()
        assert np.all(m.log_odds[global_to_address_array(fresh[admitted], m.shape)] == 0.0)
        assert np.all(m.counter[global_to_address_array(fresh[admitted], m.shape)] >= 0)
        assert counter_mismatches(m) == 0


def test_update_slides_and_keeps_invariant():
    rng = np.random.default_rng(3)
    m = ROGMap(MapConfig(resolution=0.1, map_size=(2.1, 2.1, 1.1), inflation_distance=0.2,
                         max_raycast_distance=3.0, slide_threshold=0.3))
    slides = 0
    for k in range(25):
        o = np.array([0.1 * k, 0.05 * k, 0.0])
        res = m.update(Scan(o, o + rng.normal(size=(200, 3)) * [1.0, 1.0, 0.3]))
        slides += res.slide is not None
        assert counter_mismatches(m) == 0
    assert slides >= 3
