import numpy as np
import pytest

from rogmap.raycast import Scan
from rogmap.scanlog import MAGIC, ScanLogError, load_scan_log, write_scan_log


def _log(seed=0, n=5):
    rng = np.random.default_rng(seed)
    return [Scan(rng.normal(size=3), rng.normal(size=(rng.integers(0, 20), 3)) * 1e3, 0.1 * i) for i in range(n)]


def _equal(a, b):
    return len(a) == len(b) and all(
        x.origin == y.origin and x.timestamp == y.timestamp and x.points.tobytes() == y.points.tobytes()
        for x, y in zip(a, b))


def test_empty_file(tmp_path):
    (tmp_path / "e.log").write_text("")
    assert load_scan_log(tmp_path / "e.log") == []


@pytest.mark.parametrize("binary", [False, True])
def test_round_trip_exact(tmp_path, binary):
    log = _log()
    log.append(Scan((0.1, 1 / 3, -2e-300), [(np.pi, -np.e, 1e300)], 9.0))
    write_scan_log(log, tmp_path / "a.log", binary=binary)
    assert _equal(load_scan_log(tmp_path / "a.log"), log)


def test_binary_has_magic(tmp_path):
    write_scan_log(_log(), tmp_path / "b.log", binary=True)
    assert (tmp_path / "b.log").read_bytes().startswith(MAGIC)


def test_comments_and_blank_lines(tmp_path):
    (tmp_path / "c.log").write_text("# hello\n\nFRAME 0 0 0 0 1\n# inside\n1 2 3\n")
    log = load_scan_log(tmp_path / "c.log")
    assert len(log) == 1 and log[0].points.tolist() == [[1, 2, 3]]


def test_count_mismatch_reports_frame_line(tmp_path):
    (tmp_path / "m.log").write_text("FRAME 0 0 0 0 1\n1 1 1\nFRAME 1 0 0 0 3\n1 2 3\n4 5 6\n")
    with pytest.raises(ScanLogError) as e:
        load_scan_log(tmp_path / "m.log")
    assert e.value.line == 3
    (tmp_path / "n.log").write_text("FRAME 0 0 0 0 3\n1 2 3\n4 5 6\nFRAME 1 0 0 0 0\n")
    with pytest.raises(ScanLogError) as e:
        load_scan_log(tmp_path / "n.log")
    assert e.value.line == 1


@pytest.mark.parametrize("text,line", [
    ("FRAME 0 0 0\n", 1),
    ("FRAM 0 0 0 0 0\n", 1),
    ("FRAME 0 0 0 0 1\n1 2\n", 2),
    ("FRAME 0 0 0 0 1\n1 2 x\n", 2),
    ("FRAME a 0 0 0 0\n", 1),
])
def test_malformed(tmp_path, text, line):
    (tmp_path / "x.log").write_text(text)
    with pytest.raises(ScanLogError) as e:
        load_scan_log(tmp_path / "x.log")
    assert e.value.line == line


def test_decreasing_timestamps(tmp_path):
    (tmp_path / "t.log").write_text("FRAME 1 0 0 0 0\nFRAME 0.5 0 0 0 0\n")
    with pytest.raises(ScanLogError):
        load_scan_log(tmp_path / "t.log")


def test_truncated_binary(tmp_path):
    write_scan_log(_log(n=2), tmp_path / "b.log", binary=True)
    data = (tmp_path / "b.log").read_bytes()
    (tmp_path / "t.log").write_bytes(data[:-5])
    with pytest.raises(ScanLogError):
        load_scan_log(tmp_path / "t.log")
