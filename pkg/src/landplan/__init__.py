"""Local trajectory planning toolkit for UAV landing-site search."""

from .occupancy import GridIndex, GridSpec, OccupancyGrid, OutsideGridError, traverse_segment

__version__ = "0.1.0"

__all__ = [
    "GridIndex",
    "GridSpec",
    "OccupancyGrid",
    "OutsideGridError",
    "traverse_segment",
]
