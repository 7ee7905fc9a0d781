"""Vehicle-centered 3D binary occupancy grid with exact segment traversal.

The grid covers a fixed box of space around a configurable center, stores one
boolean per cell, and supports recentering (whole-cell shifts that preserve
occupancy of the overlapping region) plus collision queries along straight
segments. Cells use half-open intervals [origin + i*r, origin + (i+1)*r) so
points on cell boundaries resolve deterministically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

GridIndex = tuple[int, int, int]

# Boundary crossings closer than this (in segment parameter t) are treated as
# simultaneous, so a segment through a cell corner steps diagonally instead of
# visiting the grazed side cells.
_TIE_TOL = 1e-10

DEFAULT_DIMS = (200, 200, 40)
DEFAULT_RESOLUTION = (2.0, 2.0, 4.0)


class OutsideGridError(ValueError):
    """A query point lies outside the grid coverage."""


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a fixed-coverage voxel grid.

    dims: cell counts per axis (nx, ny, nz).
    resolution: meters per cell per axis.
    center: world position of the coverage midpoint.
    """

    dims: tuple[int, int, int]
    resolution: tuple[float, float, float]
    center: tuple[float, float, float]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        res = tuple(float(r) for r in self.resolution)
        center = tuple(float(c) for c in self.center)
        if len(dims) != 3 or len(res) != 3 or len(center) != 3:
            raise ValueError("dims, resolution and center must have 3 components")
        if any(d < 1 for d in dims):
            raise ValueError(f"all dims must be >= 1, got {dims}")
        if any(r <= 0 for r in res):
            raise ValueError(f"all resolutions must be > 0, got {res}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "center", center)

    @classmethod
    def default(cls, center=(0.0, 0.0, 0.0)) -> "GridSpec":
        return cls(DEFAULT_DIMS, DEFAULT_RESOLUTION, tuple(center))

    @property
    def coverage(self) -> np.ndarray:
        """World extent per axis in meters (dims * resolution)."""
        return np.asarray(self.dims, float) * np.asarray(self.resolution, float)

    @property
    def origin(self) -> np.ndarray:
        """World position of the (0, 0, 0) cell corner (center - coverage/2)."""
        return np.asarray(self.center, float) - 0.5 * self.coverage

    @property
    def cell_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def index_of(self, p) -> GridIndex | None:
        """Cell containing p under the half-open convention, or None if outside."""
        u = (np.asarray(p, float) - self.origin) / self.resolution
        i = np.floor(u).astype(int)
        if np.any(i < 0) or np.any(i >= self.dims):
            return None
        return (int(i[0]), int(i[1]), int(i[2]))

    def indices_of(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized index_of. Returns (indices (N,3) int, inside mask (N,))."""
        pts = np.asarray(points, float).reshape(-1, 3)
        u = (pts - self.origin) / np.asarray(self.resolution)
        idx = np.floor(u).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < np.asarray(self.dims)), axis=1)
        return idx, inside

    def contains(self, p) -> bool:
        return self.index_of(p) is not None

    def cell_center(self, index) -> np.ndarray:
        return self.origin + (np.asarray(index, float) + 0.5) * np.asarray(self.resolution)


def traverse_segment(spec: GridSpec, a, b):
    """Yield every cell the segment from a to b passes through, in order.

    Amortized grid walk: no point sampling, so arbitrarily thin occupied
    walls cannot be tunneled through. Crossings that coincide within
    _TIE_TOL step all tied axes at once, which keeps corner touches from
    visiting cells the segment only grazes with zero chord length.

    Raises OutsideGridError if either endpoint is outside coverage.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    start = spec.index_of(a)
    end = spec.index_of(b)
    if start is None or end is None:
        raise OutsideGridError(f"segment endpoint outside grid coverage: {a if start is None else b}")

    yield start
    if start == end:
        return

    origin = spec.origin
    res = np.asarray(spec.resolution)
    u0 = (a - origin) / res
    d = (b - a) / res

    cell = list(start)
    tmax = [math.inf] * 3
    for k in range(3):
        if d[k] > 0:
            tmax[k] = (math.floor(u0[k]) + 1.0 - u0[k]) / d[k]
        elif d[k] < 0:
            tmax[k] = (math.floor(u0[k]) - u0[k]) / d[k]
    tdelta = [1.0 / abs(d[k]) if d[k] != 0 else math.inf for k in range(3)]
    step = [1 if d[k] > 0 else -1 for k in range(3)]

    guard = sum(abs(end[k] - start[k]) for k in range(3)) + 4
    while tuple(cell) != end and guard > 0:
        guard -= 1
        tm = min(tmax)
        moved = False
        for k in range(3):
            # Never step an axis past its destination index: monotone per
            # axis, and crossings at t=1 exactly must not overshoot when the
            # endpoint sits on a boundary while moving in the negative sense.
            if tmax[k] <= tm + _TIE_TOL and cell[k] != end[k]:
                cell[k] += step[k]
                tmax[k] += tdelta[k]
                moved = True
        if not moved:
            break
        yield (cell[0], cell[1], cell[2])


class OccupancyGrid:
    """Binary occupancy snapshot over a GridSpec.

    Unobserved space defaults to free. A snapshot is treated as an immutable
    value once shared: the sensing update produces a new snapshot per tick and
    planners only read, so snapshots are safe to share across threads.
    """

    __slots__ = ("spec", "cells")

    def __init__(self, spec: GridSpec, cells: np.ndarray | None = None):
        self.spec = spec
        if cells is None:
            cells = np.zeros(spec.dims, dtype=bool)
        else:
            cells = np.asarray(cells, dtype=bool)
            if cells.shape != spec.dims:
                raise ValueError(f"cells shape {cells.shape} does not match dims {spec.dims}")
        self.cells = cells

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.spec, self.cells.copy())

    @property
    def occupied_count(self) -> int:
        return int(self.cells.sum())

    def index_of(self, p) -> GridIndex | None:
        return self.spec.index_of(p)

    def world_point_of(self, index) -> np.ndarray:
        return self.spec.cell_center(index)

    def is_occupied(self, index) -> bool:
        return bool(self.cells[index])

    def recenter(self, new_center) -> "OccupancyGrid":
        """Return a grid re-centered near new_center.

        The shift snaps to whole cells so occupancy of the overlapping world
        region is preserved bit-exactly; newly exposed cells are free.
        """
        res = np.asarray(self.spec.resolution)
        offset = np.rint((np.asarray(new_center, float) - self.spec.center) / res).astype(int)
        snapped = tuple(np.asarray(self.spec.center) + offset * res)
        spec = GridSpec(self.spec.dims, self.spec.resolution, snapped)
        cells = np.zeros(self.spec.dims, dtype=bool)
        src = []
        dst = []
        for k in range(3):
            o = int(offset[k])
            n = self.spec.dims[k]
            lo_src, hi_src = max(0, o), min(n, n + o)
            if lo_src >= hi_src:
                return OccupancyGrid(spec, cells)  # no overlap at all
            src.append(slice(lo_src, hi_src))
            dst.append(slice(max(0, -o), max(0, -o) + (hi_src - lo_src)))
        cells[tuple(dst)] = self.cells[tuple(src)]
        return OccupancyGrid(spec, cells)

    def segment_is_free(self, a, b) -> bool:
        """True iff the segment from a to b crosses no occupied cell.

        Raises OutsideGridError when an endpoint is outside coverage; callers
        must recenter or clamp first.
        """
        cells = self.cells
        for idx in traverse_segment(self.spec, a, b):
            if cells[idx]:
                return False
        return True

    def z_slice(self, iz: int) -> np.ndarray:
        """2D 0/1 matrix of the given z layer, indexed [ix, iy]."""
        if not 0 <= iz < self.spec.dims[2]:
            raise IndexError(f"z slice {iz} out of range")
        return self.cells[:, :, iz].astype(np.int8)

    def dump_slice_csv(self, path, iz: int) -> None:
        """Write one z layer as a CSV 0/1 matrix (row = x index) for inspection."""
        layer = self.z_slice(iz)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in layer:
                writer.writerow(row.tolist())
