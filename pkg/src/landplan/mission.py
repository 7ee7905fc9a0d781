"""Time-stepped mission executor.

Each tick the vehicle advances along its current local trajectory at the
configured speed, the rolling occupancy grid recenters on the vehicle, one
LiDAR scan updates the grid, and the remainder of the trajectory is checked
against the newly sensed cells. A blocked remainder triggers a replan from
the current position; waypoints that cannot be planned to are dropped, as
are waypoints whose tick budget runs out.
"""

from __future__ import annotations

import csv
import json
import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .bezier import BezierSearchConfig, plan_bezier
from .grid_search import PlanResult, SearchWeights, plan_ggwp, plan_lp_astar
from .occupancy import GridSpec, OccupancyGrid, OutsideGridError, traverse_segment
from .penalty import PenaltyWeights, Trajectory
from .priority import PriorityMap
from .sensing import LidarConfig, Scene, SensorPose, sense_and_update

PLANNERS = ("bezier", "ggwp", "lp_dijkstra", "lp_astar", "wlp_astar")

OUTCOME_REACHED = "reached"
OUTCOME_UNREACHABLE = "dropped_unreachable"
OUTCOME_TIMEOUT = "dropped_timeout"


@dataclass
class WaypointList:
    """Global path waypoints; cursor indexes the current goal."""

    points: np.ndarray
    cursor: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, float).reshape(-1, 3)
        if not 0 <= self.cursor <= len(self.points):
            raise ValueError("cursor out of range")

    def current_goal(self) -> np.ndarray | None:
        if self.cursor >= len(self.points):
            return None
        return self.points[self.cursor]


@dataclass
class MissionConfig:
    """Execution parameters; planner-specific knobs have sensible defaults.

    arrival_radius defaults to one grid cell diagonal (goals are snapped to
    cells). w_astar/admissible default per planner: the A* form uses weight 1
    with the admissible scaling on, the weighted form uses sqrt(3) with the
    plain heuristic.
    """

    speed: float = 3.0
    tick: float = 1.0
    arrival_radius: float | None = None
    planner: str = "lp_dijkstra"
    weights: PenaltyWeights = field(default_factory=PenaltyWeights)
    w_astar: float | None = None
    admissible_heuristic: bool | None = None
    z_band: int | None = 1
    lidar: LidarConfig = field(default_factory=LidarConfig)
    bezier: BezierSearchConfig = field(default_factory=BezierSearchConfig)
    tick_budget_factor: float = 4.0

    def __post_init__(self):
        if self.speed <= 0 or self.tick <= 0:
            raise ValueError("speed and tick must be > 0")
        if self.arrival_radius is not None and self.arrival_radius <= 0:
            raise ValueError("arrival_radius must be > 0")
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}, expected one of {PLANNERS}")

    def search_weights(self) -> SearchWeights:
        if self.planner == "lp_dijkstra":
            w, adm = 0.0, False
        elif self.planner == "lp_astar":
            w = 1.0 if self.w_astar is None else self.w_astar
            adm = True if self.admissible_heuristic is None else self.admissible_heuristic
        else:  # wlp_astar
            w = math.sqrt(3.0) if self.w_astar is None else self.w_astar
            adm = False if self.admissible_heuristic is None else self.admissible_heuristic
        return SearchWeights(weights=self.weights, w_astar=w, admissible_heuristic=adm)


@dataclass
class WaypointRecord:
    index: int
    point: tuple[float, float, float]
    outcome: str
    ticks: int


@dataclass
class ReplanEvent:
    tick: int
    position: tuple[float, float, float]
    reason: str


@dataclass
class PlanRecord:
    tick: int
    waypoint_index: int
    runtime: float
    expansions: int
    cost: float
    success: bool


@dataclass
class MissionLog:
    """Everything the benchmark needs: executed path, outcomes, plan stats."""

    samples: np.ndarray            # (T, 4) rows of t, x, y, z
    waypoints: list[WaypointRecord]
    replans: list[ReplanEvent]
    plans: list[PlanRecord]
    completed: bool
    ticks: int
    pursuit_lengths: dict[int, float]  # executed meters attributed per waypoint

    def executed_trajectory(self) -> Trajectory | None:
        if self.samples.shape[0] < 2:
            return None
        try:
            return Trajectory.from_points(self.samples[:, 1:4])
        except ValueError:
            return None  # never moved

    def executed_length(self) -> float:
        traj = self.executed_trajectory()
        return traj.length if traj is not None else 0.0

    def outcome_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rec in self.waypoints:
            counts[rec.outcome] = counts.get(rec.outcome, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "completed": self.completed,
            "ticks": self.ticks,
            "executed_length": self.executed_length(),
            "waypoints": [vars(w) for w in self.waypoints],
            "replans": [vars(r) for r in self.replans],
            "plans": [vars(p) for p in self.plans],
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def save_samples_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "y", "z"])
            for row in self.samples:
                writer.writerow([f"{v:.12g}" for v in row])


class MissionState:
    """Mutable execution state; one instance per mission run."""

    def __init__(self, scene: Scene, waypoints: WaypointList, cfg: MissionConfig,
                 grid: OccupancyGrid, pmap: PriorityMap | None):
        self.scene = scene
        self.wpl = waypoints
        self.cfg = cfg
        self.grid = grid
        self.pmap = pmap
        self.position = waypoints.points[0].copy()
        self.time = 0.0
        self.tick_count = 0
        self.plan: Trajectory | None = None
        self.plan_progress = 0.0
        self.goal_ticks = 0
        self.goal_budget = 0
        self.samples = [(0.0, *self.position)]
        self.waypoint_records: list[WaypointRecord] = []
        self.replans: list[ReplanEvent] = []
        self.plan_records: list[PlanRecord] = []
        self.pursuit_lengths: dict[int, float] = {}
        arrival = cfg.arrival_radius
        if arrival is None:
            arrival = float(np.linalg.norm(grid.spec.resolution))
        self.arrival_radius = arrival

    @property
    def done(self) -> bool:
        return self.wpl.current_goal() is None

    def budget_for(self, goal) -> int:
        direct = float(np.linalg.norm(np.asarray(goal) - self.position))
        flight_ticks = direct / (self.cfg.speed * self.cfg.tick)
        return max(3, int(math.ceil(self.cfg.tick_budget_factor * flight_ticks)))


def _plan_once(state: MissionState, goal) -> PlanResult:
    """Run the configured planner from the current position.

    A goal outside grid coverage (possible after several consecutive drops)
    is reported as unreachable rather than raising: the vehicle cannot map
    or reason that far out.
    """
    cfg = state.cfg
    try:
        if cfg.planner == "bezier":
            pmap = state.pmap or PriorityMap.uniform(0.0)
            t0 = _time.perf_counter()
            plan = plan_bezier(state.position, goal, state.grid, pmap, cfg.weights, cfg.bezier)
            dt = _time.perf_counter() - t0
            if plan.failed:
                return PlanResult(None, math.inf, plan.evaluations, dt)
            return PlanResult(plan.trajectory, plan.breakdown.total, plan.evaluations, dt)
        if cfg.planner == "ggwp":
            return plan_ggwp(state.position, goal, state.grid, z_band=cfg.z_band,
                             allow_occupied_init=True)
        return plan_lp_astar(state.position, goal, state.grid, state.pmap,
                             cfg.search_weights(), z_band=cfg.z_band,
                             allow_occupied_init=True)
    except OutsideGridError:
        return PlanResult(None, math.inf, 0, 0.0)
    except ValueError as err:
        if "coverage" in str(err):
            return PlanResult(None, math.inf, 0, 0.0)
        raise


def _suffix_blocked(state: MissionState) -> bool:
    """Does the remaining trajectory cross any occupied cell?

    The vehicle's own cell is ignored: surface quantization can mark the cell
    the vehicle legitimately flies through when it passes close to a wall.
    """
    if state.plan is None:
        return False
    pts = state.plan.suffix_points(state.plan_progress)
    own = state.grid.spec.index_of(state.position)
    cells = state.grid.cells
    for k in range(pts.shape[0] - 1):
        for idx in traverse_segment(state.grid.spec, pts[k], pts[k + 1]):
            if cells[idx] and idx != own:
                return True
    return False


def advance_goal(state: MissionState, outcome: str) -> None:
    """Record the outcome for the current goal and move the cursor."""
    goal = state.wpl.current_goal()
    state.waypoint_records.append(WaypointRecord(
        index=state.wpl.cursor, point=tuple(float(v) for v in goal),
        outcome=outcome, ticks=state.goal_ticks))
    state.wpl.cursor += 1
    state.plan = None
    state.plan_progress = 0.0
    state.goal_ticks = 0
    state.goal_budget = 0


def _ensure_plan(state: MissionState) -> None:
    """Plan to the current goal, dropping waypoints that cannot be planned to."""
    while not state.done and state.plan is None:
        goal = state.wpl.current_goal()
        if np.linalg.norm(goal - state.position) <= state.arrival_radius:
            advance_goal(state, OUTCOME_REACHED)
            continue
        result = _plan_once(state, goal)
        state.plan_records.append(PlanRecord(
            tick=state.tick_count, waypoint_index=state.wpl.cursor,
            runtime=result.runtime, expansions=result.expansions,
            cost=result.surrogate_cost, success=not result.unreachable))
        if result.unreachable:
            advance_goal(state, OUTCOME_UNREACHABLE)
            continue
        state.plan = result.trajectory
        state.plan_progress = 0.0
        if state.goal_budget == 0:
            state.goal_budget = state.budget_for(goal)


def tick(state: MissionState, scene: Scene) -> MissionState:
    """One sense-map-plan-move cycle; mutates and returns the state."""
    if state.done:
        return state
    _ensure_plan(state)
    if state.done:
        return state

    state.tick_count += 1
    state.goal_ticks += 1
    state.time += state.cfg.tick

    # move along the current trajectory
    step = state.cfg.speed * state.cfg.tick
    before = state.position.copy()
    state.plan_progress = min(state.plan_progress + step, state.plan.length)
    state.position = state.plan.point_at(state.plan_progress)
    state.samples.append((state.time, *state.position))
    moved = float(np.linalg.norm(state.position - before))
    idx = state.wpl.cursor
    state.pursuit_lengths[idx] = state.pursuit_lengths.get(idx, 0.0) + moved

    # recenter and sense
    state.grid = state.grid.recenter(state.position)
    state.grid = sense_and_update(scene, state.grid, SensorPose(state.position),
                                  state.cfg.lidar)

    # replan when newly sensed cells block the remainder
    if _suffix_blocked(state):
        state.replans.append(ReplanEvent(
            tick=state.tick_count, position=tuple(float(v) for v in state.position),
            reason="suffix_blocked"))
        goal = state.wpl.current_goal()
        result = _plan_once(state, goal)
        state.plan_records.append(PlanRecord(
            tick=state.tick_count, waypoint_index=state.wpl.cursor,
            runtime=result.runtime, expansions=result.expansions,
            cost=result.surrogate_cost, success=not result.unreachable))
        if result.unreachable:
            advance_goal(state, OUTCOME_UNREACHABLE)
            return state
        state.plan = result.trajectory
        state.plan_progress = 0.0

    # arrival and budget bookkeeping
    goal = state.wpl.current_goal()
    if goal is not None:
        if np.linalg.norm(goal - state.position) <= state.arrival_radius:
            advance_goal(state, OUTCOME_REACHED)
        elif state.goal_ticks >= state.goal_budget > 0:
            advance_goal(state, OUTCOME_TIMEOUT)
    return state


def run_mission(scene: Scene, waypoints, cfg: MissionConfig | None = None,
                grid_spec: GridSpec | None = None,
                pmap: PriorityMap | None = None) -> MissionLog:
    """Fly the waypoint list from its first point; returns the mission log.

    The first waypoint is the start position; the rest are goals consumed in
    order. Deterministic for fixed inputs. Terminates within the per-waypoint
    tick budgets plus a global safety margin.
    """
    cfg = cfg or MissionConfig()
    pts = np.asarray(waypoints, float).reshape(-1, 3)
    if pts.shape[0] < 2:
        raise ValueError("need at least a start point and one goal waypoint")
    wpl = WaypointList(pts, cursor=1)
    if grid_spec is None:
        grid_spec = GridSpec.default(center=tuple(pts[0]))
    grid = OccupancyGrid(grid_spec).recenter(pts[0])
    state = MissionState(scene, wpl, cfg, grid, pmap)

    # sense once before the first plan
    state.grid = sense_and_update(scene, state.grid, SensorPose(state.position), cfg.lidar)

    total_direct = sum(float(np.linalg.norm(pts[k + 1] - pts[k])) for k in range(len(pts) - 1))
    hard_cap = int(math.ceil(2.0 * cfg.tick_budget_factor
                             * (total_direct / (cfg.speed * cfg.tick)))) + 20 * len(pts)
    while not state.done and state.tick_count < hard_cap:
        tick(state, scene)
    completed = state.done
    return MissionLog(samples=np.asarray(state.samples),
                      waypoints=state.waypoint_records,
                      replans=state.replans,
                      plans=state.plan_records,
                      completed=completed,
                      ticks=state.tick_count,
                      pursuit_lengths=dict(state.pursuit_lengths))
