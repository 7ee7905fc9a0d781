"""Trajectory penalty: collision term, length stretch, and coverage reward.

A candidate trajectory is scored by three parts: an infinite penalty when it
crosses any occupied cell, the ratio of its arc length to the straight-line
distance between its endpoints (>= 1, best 1), and the negated average
landing priority beneath it (in [-1, 0], best -1). The total is the collision
term plus a weighted sum of the other two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .occupancy import OccupancyGrid
from .priority import PriorityMap, sample_priority_many


class Trajectory:
    """Ordered 3D polyline with arc-length parameterization.

    Consecutive points must be distinct and the total length positive.
    """

    __slots__ = ("points", "segment_lengths", "cumulative", "length")

    def __init__(self, points):
        pts = np.asarray(points, float).reshape(-1, 3)
        if pts.shape[0] < 2:
            raise ValueError("a trajectory needs at least 2 points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg == 0.0):
            raise ValueError("consecutive trajectory points must be distinct")
        self.points = pts
        self.segment_lengths = seg
        self.cumulative = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.cumulative[-1])

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def from_points(cls, points, dedupe_tol: float = 1e-9) -> "Trajectory":
        """Build a trajectory, dropping consecutive near-duplicate points."""
        pts = np.asarray(points, float).reshape(-1, 3)
        kept = [pts[0]]
        for p in pts[1:]:
            if np.linalg.norm(p - kept[-1]) > dedupe_tol:
                kept.append(p)
        if len(kept) < 2:
            raise ValueError("trajectory degenerates to a single point")
        return cls(np.array(kept))

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc length s, clamped to [0, length]."""
        s = min(max(s, 0.0), self.length)
        k = int(np.searchsorted(self.cumulative, s, side="right")) - 1
        k = min(k, len(self.segment_lengths) - 1)
        t = (s - self.cumulative[k]) / self.segment_lengths[k]
        return self.points[k] + t * (self.points[k + 1] - self.points[k])

    def suffix_points(self, s: float) -> np.ndarray:
        """Polyline from arc length s to the end (at least the final point)."""
        if s >= self.length:
            return self.points[-1:].copy()
        p = self.point_at(s)
        k = int(np.searchsorted(self.cumulative, s, side="right"))
        return np.vstack([p, self.points[k:]])

    def start(self) -> np.ndarray:
        return self.points[0]

    def end(self) -> np.ndarray:
        return self.points[-1]


@dataclass(frozen=True)
class PenaltyWeights:
    """Trade-off dial between trajectory length and landing priority."""

    w_length: float = 1.0
    w_priority: float = 0.0

    def __post_init__(self):
        if self.w_length < 0 or self.w_priority < 0:
            raise ValueError("weights must be non-negative")
        if self.w_length == 0 and self.w_priority == 0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class PenaltyBreakdown:
    """Per-term penalty values; total is +inf whenever collision is +inf."""

    collision: float
    stretch: float
    coverage: float
    total: float
    length: float
    direct_length: float


def trajectory_length(traj: Trajectory) -> float:
    """Polyline arc length in meters."""
    return traj.length


def collision_penalty(traj: Trajectory, grid: OccupancyGrid) -> float:
    """+inf if any segment crosses an occupied cell, else 0.

    Raises OutsideGridError when the trajectory leaves grid coverage.
    """
    pts = traj.points
    for k in range(pts.shape[0] - 1):
        if not grid.segment_is_free(pts[k], pts[k + 1]):
            return math.inf
    return 0.0


def stretch_penalty(traj: Trajectory, init, goal) -> float:
    """Arc length over straight-line distance between init and goal; >= 1."""
    init = np.asarray(init, float)
    goal = np.asarray(goal, float)
    direct = float(np.linalg.norm(goal - init))
    if direct == 0.0:
        raise ValueError("stretch penalty undefined for coincident init and goal")
    if np.linalg.norm(traj.start() - init) > 1e-6 or np.linalg.norm(traj.end() - goal) > 1e-6:
        raise ValueError("trajectory must start at init and end at goal")
    return traj.length / direct


def _quadrature_samples(traj: Trajectory, max_step: float):
    """Midpoints and sub-lengths of a per-segment midpoint rule."""
    mids = []
    dls = []
    pts = traj.points
    for k, seg_len in enumerate(traj.segment_lengths):
        n = max(1, int(math.ceil(seg_len / max_step)))
        t = (np.arange(n) + 0.5) / n
        mids.append(pts[k] + t[:, None] * (pts[k + 1] - pts[k]))
        dls.append(np.full(n, seg_len / n))
    return np.vstack(mids), np.concatenate(dls)


def coverage_penalty(traj: Trajectory, pmap: PriorityMap, max_step: float | None = None) -> float:
    """Negated average priority beneath the trajectory, in [-1, 0].

    Midpoint quadrature with step <= half the map resolution, which is exact
    for the nearest-cell piecewise-constant field away from cell boundaries.
    """
    if max_step is None:
        max_step = pmap.resolution / 2.0
    mids, dls = _quadrature_samples(traj, max_step)
    p = sample_priority_many(pmap, mids[:, :2])
    return -float(np.dot(p, dls) / traj.length)


def evaluate_penalty(traj: Trajectory, grid: OccupancyGrid, pmap: PriorityMap,
                     weights: PenaltyWeights, init, goal) -> PenaltyBreakdown:
    """All penalty terms and their weighted combination."""
    collision = collision_penalty(traj, grid)
    stretch = stretch_penalty(traj, init, goal)
    coverage = coverage_penalty(traj, pmap)
    total = math.inf if math.isinf(collision) else (
        weights.w_length * stretch + weights.w_priority * coverage)
    direct = float(np.linalg.norm(np.asarray(goal, float) - np.asarray(init, float)))
    return PenaltyBreakdown(collision=collision, stretch=stretch, coverage=coverage,
                            total=total, length=traj.length, direct_length=direct)
