"""Robocentric occupancy grid map with zero-copy sliding and incremental inflation."""

from rogmap.occupancy import MapConfig, OccState, ProbParams, QueryResult
from rogmap.raycast import Scan, UpdateCache
from rogmap.rog_map import ROGMap

__all__ = ["MapConfig", "OccState", "ProbParams", "QueryResult", "ROGMap", "Scan", "UpdateCache"]
__version__ = "0.1.0"
