"""Scan-log files: a line-oriented text format and a binary bulk variant.

Text::

    # comment
    FRAME <timestamp> <ox> <oy> <oz> <n>
    <x> <y> <z>        (n lines)

Binary: magic ``ROGL1\\n`` followed by frames of little-endian
``float64 timestamp, float64[3] origin, uint64 n, float64[n*3] points``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from rogmap.raycast import Scan

MAGIC = b"ROGL1\n"
_HEADER = struct.Struct("<4dQ")


class ScanLogError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


def _check_order(frames: list[Scan]) -> None:
    for i in range(1, len(frames)):
        if frames[i].timestamp < frames[i - 1].timestamp:
            raise ScanLogError(f"timestamps decrease at frame {i}")


def write_scan_log(frames, path, binary: bool = False) -> None:
    frames = list(frames)
    _check_order(frames)
    path = Path(path)
    if binary:
        with path.open("wb") as fh:
            fh.write(MAGIC)
            for s in frames:
                fh.write(_HEADER.pack(s.timestamp, *s.origin, len(s.points)))
                fh.write(np.ascontiguousarray(s.points, dtype="<f8").tobytes())
        return
    with path.open("w") as fh:
        for s in frames:
            fh.write(f"FRAME {s.timestamp!r} {s.origin[0]!r} {s.origin[1]!r} {s.origin[2]!r} {len(s.points)}\n")
            for x, y, z in s.points.tolist():
                fh.write(f"{x!r} {y!r} {z!r}\n")


def load_scan_log(path) -> list[Scan]:
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _load_binary(path)
    return _load_text(path)


def _load_binary(path: Path) -> list[Scan]:
    data = path.read_bytes()
    pos = len(MAGIC)
    frames = []
    while pos < len(data):
        if pos + _HEADER.size > len(data):
            raise ScanLogError(f"truncated frame header at byte {pos}")
        t, ox, oy, oz, n = _HEADER.unpack_from(data, pos)
        pos += _HEADER.size
        nbytes = int(n) * 24
        if pos + nbytes > len(data):
            raise ScanLogError(f"frame {len(frames)} declares {n} points but the file ends early")
        pts = np.frombuffer(data, dtype="<f8", count=int(n) * 3, offset=pos).reshape(-1, 3).astype(float)
        pos += nbytes
        frames.append(Scan((ox, oy, oz), pts, t))
    _check_order(frames)
    return frames


def _load_text(path: Path) -> list[Scan]:
    frames = []
    with path.open() as fh:
        lines = [(i + 1, ln.strip()) for i, ln in enumerate(fh)]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    k = 0
    while k < len(lines):
        lineno, ln = lines[k]
        parts = ln.split()
        if parts[0] != "FRAME" or len(parts) != 6:
            raise ScanLogError(f"expected 'FRAME <t> <ox> <oy> <oz> <n>', got {ln!r}", lineno)
        try:
            t, ox, oy, oz = (float(v) for v in parts[1:5])
            n = int(parts[5])
        except ValueError:
            raise ScanLogError(f"bad FRAME header {ln!r}", lineno) from None
        if n < 0:
            raise ScanLogError("negative point count", lineno)
        body = lines[k + 1:k + 1 + n]
        pts = np.empty((n, 3))
        for j, (pl, pt) in enumerate(body):
            vals = pt.split()
            if vals[0] == "FRAME":
                raise ScanLogError(f"frame declares {n} points but only {j} follow", lineno)
            if len(vals) != 3:
                raise ScanLogError(f"expected 'x y z', got {pt!r}", pl)
            try:
                pts[j] = [float(v) for v in vals]
            except ValueError:
                raise ScanLogError(f"bad point {pt!r}", pl) from None
        if len(body) < n:
            raise ScanLogError(f"frame declares {n} points but only {len(body)} follow", lineno)
        frames.append(Scan((ox, oy, oz), pts, t))
        k += 1 + n
    _check_order(frames)
    return frames
