import numpy as np
import pytest

from rogmap.scene import (
    GT_FREE, GT_OCCUPIED, GT_UNSEEN, BUILTIN_SCENES, Box, LidarConfig, Scene, SceneError, Wire,
    fibonacci_directions, ground_truth_state, load_scene, save_scene, scene_from_dict, simulate_log,
    simulate_scan, swept_keys,
)

LIDAR = LidarConfig(rays=3000, max_range=10.0)


def _segment_hits_primitive(scene, a, b, n=400):
    ts = np.linspace(0.0, 1.0, n)[:-1]
    pts = a + ts[:, None] * (b - a)
    return any(p.contains(pts).any() for p in scene.primitives)


def test_empty_scene_gives_no_points():
    s = simulate_scan(Scene([]), (0, 0, 0), LIDAR, np.random.default_rng(0))
    assert len(s.points) == 0


def test_wall_straight_ahead():
    wall = Box((5.0, -2.0, -2.0), (5.5, 2.0, 2.0))
    t = wall.intersect(np.zeros(3), np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert t[0] == 5.0 and np.isinf(t[1]) and np.isinf(t[2])


def test_wire_intersection_distance():
    w = Wire((2.0, -1.0, 0.0), (2.0, 1.0, 0.0), 0.01)
    t = w.intersect(np.zeros(3), np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    assert t[0] == pytest.approx(1.99, abs=1e-12) and np.isinf(t[1])


def test_returned_points_lie_on_surfaces():
    scene = BUILTIN_SCENES["box-room"](frames=3)
    scans = simulate_log(scene, scene.trajectory(), LIDAR, seed=4)
    for s in scans:
        assert len(s.points) == LIDAR.rays  # a closed room returns every ray
        d = np.min([p.surface_distance(s.points) for p in scene.primitives], axis=0)
        assert d.max() <= 1e-9


def test_no_ray_penetrates_a_primitive():
    scene = BUILTIN_SCENES["forest"](seed=3, frames=2)
    scan = simulate_scan(scene, scene.trajectory()[0], LidarConfig(rays=300, max_range=6.0), np.random.default_rng(1))
    o = np.asarray(scan.origin)
    for p in scan.points:
        assert not _segment_hits_primitive(scene, o, p)
    d = np.min([pr.surface_distance(scan.points) for pr in scene.primitives], axis=0)
    assert d.max() <= 1e-9


def test_simulation_is_deterministic():
    scene = BUILTIN_SCENES["forest"](seed=1, frames=4)
    a = simulate_log(scene, scene.trajectory(), LidarConfig(rays=500, max_range=6.0), seed=9)
    b = simulate_log(scene, scene.trajectory(), LidarConfig(rays=500, max_range=6.0), seed=9)
    assert all(x.points.tobytes() == y.points.tobytes() and x.origin == y.origin for x, y in zip(a, b))
    c = simulate_log(scene, scene.trajectory(), LidarConfig(rays=500, max_range=6.0), seed=10)
    assert any(x.points.tobytes() != y.points.tobytes() for x, y in zip(a, c))


def test_sensor_inside_primitive_rejected():
    scene = Scene([Box((-1, -1, -1), (1, 1, 1))])
    with pytest.raises(SceneError):
        simulate_scan(scene, (0, 0, 0), LIDAR, np.random.default_rng(0))


def test_emit_max_range_points():
    cfg = LidarConfig(rays=50, max_range=3.0, emit_max_range=True)
    s = simulate_scan(Scene([]), (1, 2, 3), cfg, np.random.default_rng(0))
    assert len(s.points) == 50
    assert np.allclose(np.linalg.norm(s.points - [1, 2, 3], axis=1), 3.0)


def test_fibonacci_directions_unit_and_spread():
    d = fibonacci_directions(1000)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.allclose(d.mean(axis=0), 0.0, atol=1e-2)


def test_ground_truth_examples():
    r = 0.1
    wall = Box((1.0, -1.0, -1.0), (1.5, 1.0, 1.0))
    scene = Scene([wall])
    ray = simulate_scan(scene, (0, 0, 0), LidarConfig(rays=2000, max_range=5.0), np.random.default_rng(0))
    swept = swept_keys([ray], r)
    assert ground_truth_state(scene, (12, 0, 0), r, swept) == GT_OCCUPIED  # deep inside
    assert ground_truth_state(scene, (5, 0, 0), r, swept) == GT_FREE       # between sensor and wall
    assert ground_truth_state(scene, (20, 0, 0), r, swept) == GT_UNSEEN    # behind the wall


def test_scene_file_round_trip(tmp_path):
    scene = BUILTIN_SCENES["wires"](frames=5)
    save_scene(scene, tmp_path / "s.yaml")
    back = load_scene(tmp_path / "s.yaml")
    assert back.primitives == scene.primitives
    assert back.frames == 5 and back.lidar == scene.lidar
    assert np.allclose(back.trajectory(), scene.trajectory())


@pytest.mark.parametrize("doc", [
    {"primitives": [{"type": "sphere"}]},
    {"primitives": [{"type": "box", "min": [0, 0, 0], "max": [1, 1]}]},
    {"primitives": [{"type": "box", "min": [1, 0, 0], "max": [0, 1, 1]}]},
    {"primitives": [{"type": "wire", "start": [0, 0, 0], "end": [1, 0, 0], "radius": -1}]},
    {"bogus": 1},
    [1, 2, 3],
    {"lidar": {"rays": 0}},
])
def test_bad_scene_schema(doc):
    with pytest.raises(SceneError):
        scene_from_dict(doc)


@pytest.mark.parametrize("name", sorted(BUILTIN_SCENES))
def test_builtin_trajectories_stay_clear(name):
    scene = BUILTIN_SCENES[name]()
    for n in (2, 7, 30, 50, 200):
        for p in scene.trajectory(n):
            assert not scene.inside_any(p)
            assert np.all(p > scene.bounds_min) and np.all(p < scene.bounds_max)
