"""Cubic Bezier local planner: exhaustive search over the middle control points.

The first and last control points are pinned to the query endpoints. The two
middle control points start on the direct line at its 1/3 and 2/3 points and
are swept sideways (perpendicular to the direct line in the xy-plane, with an
optional small vertical sweep). Every offset combination is scored with the
trajectory penalty and the cheapest collision-free candidate wins. The
candidate count depends only on the sweep size, never on the obstacle map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .occupancy import OccupancyGrid
from .penalty import PenaltyBreakdown, PenaltyWeights, Trajectory, evaluate_penalty
from .priority import PriorityMap


@dataclass(eq=False)
class BezierCurve:
    """Cubic curve with control points p0..p3; p0 and p3 must differ."""

    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray

    def __post_init__(self):
        for name in ("p0", "p1", "p2", "p3"):
            setattr(self, name, np.asarray(getattr(self, name), float).reshape(3))
        if np.array_equal(self.p0, self.p3):
            raise ValueError("p0 and p3 must be distinct")


def bezier_point(curve: BezierCurve, s) -> np.ndarray:
    """Point on the curve at parameter s in [0, 1] (Bernstein combination)."""
    s_arr = np.asarray(s, float)
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0):
        raise ValueError("curve parameter must lie in [0, 1]")
    u = 1.0 - s_arr
    coeffs = np.stack([u ** 3, 3.0 * u ** 2 * s_arr, 3.0 * u * s_arr ** 2, s_arr ** 3], axis=-1)
    ctrl = np.stack([curve.p0, curve.p1, curve.p2, curve.p3])
    return coeffs @ ctrl


def sample_curve(curve: BezierCurve, samples: int) -> np.ndarray:
    """Evenly parameterized polyline of the curve, (samples, 3)."""
    return bezier_point(curve, np.linspace(0.0, 1.0, samples))


def default_lateral_offsets(span: float = 100.0, count: int = 21) -> tuple[float, ...]:
    return tuple(np.linspace(-span, span, count))


@dataclass
class BezierSearchConfig:
    """Sweep of the middle control points.

    lateral_offsets apply to p1 and p2 independently, perpendicular to the
    direct line in the xy-plane; z_offsets optionally sweep both points
    vertically. samples is the polyline density used to score each candidate
    (collision is checked on the chords between samples, so the guarantee is
    at sample resolution).
    """

    lateral_offsets: tuple[float, ...] = field(default_factory=default_lateral_offsets)
    z_offsets: tuple[float, ...] = (0.0,)
    samples: int = 64

    def __post_init__(self):
        self.lateral_offsets = tuple(float(v) for v in self.lateral_offsets)
        self.z_offsets = tuple(float(v) for v in self.z_offsets)
        if 0.0 not in self.lateral_offsets:
            raise ValueError("lateral_offsets must include 0")
        if 0.0 not in self.z_offsets:
            raise ValueError("z_offsets must include 0")
        if self.samples < 16:
            raise ValueError("samples must be >= 16")


@dataclass
class BezierPlan:
    """Search outcome; trajectory is None when every candidate collided."""

    trajectory: Trajectory | None
    curve: BezierCurve | None
    offsets: tuple[float, float, float, float] | None
    breakdown: PenaltyBreakdown | None
    evaluations: int

    @property
    def failed(self) -> bool:
        return self.trajectory is None


def _perpendicular_xy(direct: np.ndarray) -> np.ndarray:
    """Unit xy-plane normal to the direct line's xy projection.

    Falls back to the world x-axis when the direct line is (near) vertical.
    """
    dx, dy = direct[0], direct[1]
    n = math.hypot(dx, dy)
    if n < 1e-12:
        return np.array([1.0, 0.0, 0.0])
    return np.array([-dy / n, dx / n, 0.0])


def plan_bezier(init, goal, grid: OccupancyGrid, pmap: PriorityMap,
                weights: PenaltyWeights, cfg: BezierSearchConfig | None = None) -> BezierPlan:
    """Exhaustively score the offset sweep and return the best sampled curve.

    Deterministic tie-breaking: lowest total penalty, then smallest summed
    absolute offset, then lexicographic offset order.
    """
    cfg = cfg or BezierSearchConfig()
    init = np.asarray(init, float).reshape(3)
    goal = np.asarray(goal, float).reshape(3)
    if np.array_equal(init, goal):
        raise ValueError("init and goal must be distinct")
    if not grid.spec.contains(init) or not grid.spec.contains(goal):
        raise ValueError("init and goal must lie inside grid coverage")

    direct = goal - init
    perp = _perpendicular_xy(direct)
    up = np.array([0.0, 0.0, 1.0])
    base1 = init + direct / 3.0
    base2 = init + 2.0 * direct / 3.0

    best_key = None
    best = None
    evaluations = 0
    for o1 in cfg.lateral_offsets:
        for o2 in cfg.lateral_offsets:
            for z1 in cfg.z_offsets:
                for z2 in cfg.z_offsets:
                    curve = BezierCurve(init, base1 + o1 * perp + z1 * up,
                                        base2 + o2 * perp + z2 * up, goal)
                    traj = Trajectory.from_points(sample_curve(curve, cfg.samples))
                    breakdown = evaluate_penalty(traj, grid, pmap, weights, init, goal)
                    evaluations += 1
                    if math.isinf(breakdown.total):
                        continue
                    key = (breakdown.total, abs(o1) + abs(o2) + abs(z1) + abs(z2),
                           (o1, o2, z1, z2))
                    if best_key is None or key < best_key:
                        best_key = key
                        best = (traj, curve, (o1, o2, z1, z2), breakdown)

    if best is None:
        return BezierPlan(None, None, None, None, evaluations)
    traj, curve, offsets, breakdown = best
    return BezierPlan(traj, curve, offsets, breakdown, evaluations)
