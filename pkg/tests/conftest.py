import numpy as np
import pytest

from rogmap.occupancy import MapConfig
from rogmap.scene import forest_scene, simulate_log


FOREST_CFG = MapConfig(resolution=0.1, map_size=(4.1, 4.1, 2.1), inflation_distance=0.3,
                       max_raycast_distance=6.0, slide_threshold=0.5)


@pytest.fixture(scope="session")
def forest_log():
    """Seeded 200-frame forest run (about 1000 returns per frame)."""
    sc = forest_scene(seed=7)
    return simulate_log(sc, sc.trajectory(), sc.lidar, seed=7)


@pytest.fixture(scope="session")
def forest_cfg():
    return FOREST_CFG


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance report ----------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    n, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.when == "call" or n not in _CRITERIA:
        _CRITERIA[n] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title}" + (f" ({detail})" if detail else ""))
