"""Log-odds occupancy fusion, clamping and three-state classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import numpy as np
import yaml

from rogmap.index import ConfigError, WindowShape


class OccState(enum.IntEnum):
    UNKNOWN = 0
    KNOWN_FREE = 1
    OCCUPIED = 2


class Transition(enum.IntEnum):
    NONE = 0
    RISING = 1
    FALLING = -1


class QueryResult(enum.IntEnum):
    """Outcome of a map query. ``INFLATED_OCCUPIED`` covers occupied cells too."""

    OUT_OF_WINDOW = -1
    UNKNOWN = 0
    KNOWN_FREE = 1
    OCCUPIED = 2
    INFLATED_OCCUPIED = 3


def log_odds(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return math.log(p / (1.0 - p))


def probability_of(l: float) -> float:
    return 1.0 / (1.0 + math.exp(-l))


@dataclass(frozen=True)
class ProbParams:
    p_hit: float = 0.7
    p_miss: float = 0.4
    p_min: float = 0.12
    p_max: float = 0.97
    p_occ: float = 0.7
    p_free: float = 0.3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{f.name}={v} must lie in (0, 1)")
        if not self.p_miss < 0.5 < self.p_hit:
            raise ConfigError("need p_miss < 0.5 < p_hit")
        if not self.p_min <= self.p_free < self.p_occ <= self.p_max:
            raise ConfigError("need p_min <= p_free < p_occ <= p_max")

    @property
    def l_hit(self) -> float:
        return log_odds(self.p_hit)

    @property
    def l_miss(self) -> float:
        return log_odds(self.p_miss)

    @property
    def l_min(self) -> float:
        return log_odds(self.p_min)

    @property
    def l_max(self) -> float:
        return log_odds(self.p_max)

    @property
    def l_occ(self) -> float:
        return log_odds(self.p_occ)

    @property
    def l_free(self) -> float:
        return log_odds(self.p_free)


def state_of(l: float, params: ProbParams) -> OccState:
    if l >= params.l_occ:
        return OccState.OCCUPIED
    if l < params.l_free:
        return OccState.KNOWN_FREE
    return OccState.UNKNOWN


def state_array(l: np.ndarray, params: ProbParams) -> np.ndarray:
    """Vectorized ``state_of``; returns int8 codes of ``OccState``."""
    out = np.full(np.shape(l), OccState.UNKNOWN, dtype=np.int8)
    out[l < params.l_free] = OccState.KNOWN_FREE
    out[l >= params.l_occ] = OccState.OCCUPIED
    return out


def classify_transition(old: OccState, new: OccState) -> Transition:
    if old != OccState.OCCUPIED and new == OccState.OCCUPIED:
        return Transition.RISING
    if old == OccState.OCCUPIED and new != OccState.OCCUPIED:
        return Transition.FALLING
    return Transition.NONE


def apply_batch(l_old: float, n_hit: int, n_miss: int, params: ProbParams) -> tuple[float, Transition]:
    """Fuse one frame's hit/miss counts into a cell's log-odds.

    Returns the clamped new value and the rising/falling tag of the state change.
    """
    if n_hit < 0 or n_miss < 0 or n_hit + n_miss == 0:
        raise ValueError(f"invalid counts n_hit={n_hit} n_miss={n_miss}")
    l_new = fuse(l_old, n_hit, n_miss, params)
    return l_new, classify_transition(state_of(l_old, params), state_of(l_new, params))


def fuse(l_old, n_hit, n_miss, params: ProbParams):
    """Clamped log-odds sum; scalar or array arguments. Shared by every backend so
    results are bit-identical across them."""
    l_t = l_old + (n_hit * params.l_hit + n_miss * params.l_miss)
    if isinstance(l_t, np.ndarray):
        return np.clip(l_t, params.l_min, params.l_max)
    return max(min(l_t, params.l_max), params.l_min)


@dataclass(frozen=True)
class MapConfig:
    resolution: float = 0.1
    map_size: tuple[float, float, float] = (20.0, 20.0, 6.0)
    inflation_distance: float = 0.3
    max_raycast_distance: float = 10.0
    slide_threshold: float = 1.0
    prob: ProbParams = field(default_factory=ProbParams)
    # uniform-fixed / fiimap-style baselines only
    scene_min: tuple[float, float, float] | None = None
    scene_max: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.inflation_distance < 0:
            raise ConfigError("inflation_distance must be >= 0")
        if not self.max_raycast_distance > 0:
            raise ConfigError("max_raycast_distance must be > 0")
        if self.slide_threshold < 0:
            raise ConfigError("slide_threshold must be >= 0")
        if len(self.map_size) != 3 or any(m <= 0 for m in self.map_size):
            raise ConfigError(f"map_size must be three positive extents, got {self.map_size}")
        self.shape  # validates resolution

    @property
    def shape(self) -> WindowShape:
        return WindowShape.from_extent(self.map_size, self.resolution)

    def to_flat(self) -> dict:
        """Flat key/value view, as written to config files and CSV headers."""
        d = asdict(self)
        prob = d.pop("prob")
        d["map_size"] = list(self.map_size)
        for k in ("scene_min", "scene_max"):
            if d[k] is None:
                d.pop(k)
            else:
                d[k] = list(d[k])
        d.update(prob)
        return d

    @classmethod
    def from_flat(cls, values: dict) -> "MapConfig":
        prob_keys = {f.name for f in fields(ProbParams)}
        map_keys = {f.name for f in fields(cls)} - {"prob"}
        unknown = set(values) - prob_keys - map_keys
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        prob = ProbParams(**{k: float(v) for k, v in values.items() if k in prob_keys})
        kw = {}
        for k, v in values.items():
            if k not in map_keys:
                continue
            kw[k] = tuple(float(x) for x in v) if k in ("map_size", "scene_min", "scene_max") else float(v)
        return cls(prob=prob, **kw)

    def replace(self, **changes) -> "MapConfig":
        flat = self.to_flat()
        flat.update({k: v for k, v in changes.items() if v is not None})
        return MapConfig.from_flat(flat)


def load_config(path) -> MapConfig:
    """Read a flat YAML mapping of MapConfig / ProbParams fields; missing keys take defaults."""
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a flat key/value mapping")
    return MapConfig.from_flat(data)


def dump_config(cfg: MapConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_flat(), sort_keys=True))
