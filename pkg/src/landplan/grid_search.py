"""Grid-graph planners over the occupancy grid.

Two families share the 26-connected free-cell graph:

* A best-first search (backwards, rooted at the goal) minimizing an additive
  length/priority surrogate cost. The heuristic weight selects the variant:
  0 gives uniform-cost search (the Dijkstra form), 1 the A* form, larger
  values the weighted-A* form with the matching suboptimality bound when the
  admissible heuristic scaling is on.
* Wavefront propagation: a breadth-first hop-count field grown from the goal
  plus greedy steepest-descent extraction. Finds short paths fast but does
  not optimize the length/priority trade-off.

The exact coverage penalty normalizes priority by the path's own length,
which is not edge-decomposable and can go negative, breaking best-first
optimality. The search therefore minimizes J = integral of
(w_length + w_priority * (1 - p)) dl / l_direct, which is non-negative and
additive and trades length against priority through the same weight ratio.
Reported trajectory metrics always use the exact penalty definitions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import UNREACHED
from .occupancy import GridIndex, GridSpec, OccupancyGrid, OutsideGridError
from .penalty import PenaltyWeights, Trajectory
from .priority import PriorityMap, sample_priority

_EMPTY_PM = np.zeros((1, 1))


@dataclass(frozen=True)
class SearchWeights:
    """Penalty weights plus heuristic configuration for the best-first family."""

    weights: PenaltyWeights
    w_astar: float = 0.0
    admissible_heuristic: bool = False

    def __post_init__(self):
        if self.w_astar < 0:
            raise ValueError("w_astar must be >= 0")


@dataclass
class PlanResult:
    """Planner outcome plus bookkeeping for the benchmark statistics.

    surrogate_cost is the planner's internal objective: the additive
    length/priority surrogate for the best-first family, the hop count for
    the wavefront planner, and +inf when unreachable.
    """

    trajectory: Trajectory | None
    surrogate_cost: float
    expansions: int
    runtime: float
    path_cells: list[GridIndex] | None = None

    @property
    def unreachable(self) -> bool:
        return self.trajectory is None


@dataclass
class NavigationField:
    """Per-cell hop counts to the goal; UNREACHED (-1) marks unreached cells."""

    values: np.ndarray
    goal_index: GridIndex
    spec: GridSpec

    def value(self, index) -> int:
        return int(self.values[tuple(index)])

    def reached(self, index) -> bool:
        return self.values[tuple(index)] != UNREACHED


def _flat(spec: GridSpec, index) -> int:
    nx, ny, nz = spec.dims
    return (index[0] * ny + index[1]) * nz + index[2]


def _unflat(spec: GridSpec, flat: int) -> GridIndex:
    nx, ny, nz = spec.dims
    return (flat // (ny * nz), (flat // nz) % ny, flat % nz)


def _z_limits(spec: GridSpec, center_iz: int, z_band: int | None) -> tuple[int, int]:
    if z_band is None:
        return 0, spec.dims[2] - 1
    return max(0, center_iz - z_band), min(spec.dims[2] - 1, center_iz + z_band)


def _pm_args(pmap: PriorityMap | None):
    if pmap is None:
        return _EMPTY_PM, 1e30, 1e30, 1.0
    return pmap.cells, pmap.origin[0], pmap.origin[1], pmap.resolution


def edge_cost(a, b, grid: OccupancyGrid, pmap: PriorityMap | None,
              weights: PenaltyWeights, l_direct: float) -> float:
    """Surrogate cost of the move between 26-neighbor cells a and b.

    dl * (w_length + w_priority * (1 - p)) / l_direct with p the priority at
    the midpoint between the two cell centers; +inf when an endpoint cell is
    occupied. Non-negative for any priority in [0, 1].
    """
    a = tuple(int(v) for v in a)
    b = tuple(int(v) for v in b)
    if a == b or any(abs(a[k] - b[k]) > 1 for k in range(3)):
        raise ValueError(f"{a} and {b} are not 26-neighbors")
    if grid.cells[a] or grid.cells[b]:
        return math.inf
    ca = grid.spec.cell_center(a)
    cb = grid.spec.cell_center(b)
    dl = float(np.linalg.norm(cb - ca))
    mid = 0.5 * (ca + cb)
    p = sample_priority(pmap, mid[0], mid[1]) if pmap is not None else 0.0
    return dl * (weights.w_length + weights.w_priority * (1.0 - p)) / l_direct


def _endpoints(grid: OccupancyGrid, init, goal):
    init = np.asarray(init, float).reshape(3)
    goal = np.asarray(goal, float).reshape(3)
    i_init = grid.spec.index_of(init)
    i_goal = grid.spec.index_of(goal)
    if i_init is None:
        raise OutsideGridError(f"init {init} outside grid coverage")
    if i_goal is None:
        raise OutsideGridError(f"goal {goal} outside grid coverage")
    return init, goal, i_init, i_goal


def _cells_to_trajectory(spec: GridSpec, init, goal, cells) -> Trajectory:
    pts = [init] + [spec.cell_center(c) for c in cells] + [goal]
    return Trajectory.from_points(np.array(pts))


def plan_lp_astar(init, goal, grid: OccupancyGrid, pmap: PriorityMap | None,
                  sw: SearchWeights, z_band: int | None = None,
                  allow_occupied_init: bool = False) -> PlanResult:
    """Backward best-first plan from init to goal under the surrogate cost.

    The search runs on the 26-connected free-cell graph, rooted at the goal
    cell and expanding toward the init cell. Unreachable is returned when the
    goal cell is occupied or the open set empties; an occupied or
    out-of-coverage init raises unless allow_occupied_init is set (the
    mission executor uses that when surface quantization marks the cell the
    vehicle currently occupies).
    """
    t0 = time.perf_counter()
    init, goal, i_init, i_goal = _endpoints(grid, init, goal)
    occ = grid.cells
    if occ[i_init]:
        if not allow_occupied_init:
            raise ValueError(f"init cell {i_init} is occupied; recenter or re-seed")
        occ = occ.copy()
        occ[i_init] = False
    l_direct = float(np.linalg.norm(goal - init))
    if l_direct == 0.0:
        raise ValueError("init and goal must be distinct")
    if occ[i_goal]:
        return PlanResult(None, math.inf, 0, time.perf_counter() - t0)
    z_lo, z_hi = _z_limits(grid.spec, i_init[2], z_band)
    if not z_lo <= i_goal[2] <= z_hi:
        return PlanResult(None, math.inf, 0, time.perf_counter() - t0)

    if i_init == i_goal:
        traj = Trajectory([init, goal])
        return PlanResult(traj, 0.0, 0, time.perf_counter() - t0, [i_init])

    pm, pm_ox, pm_oy, pm_res = _pm_args(pmap)
    origin = grid.spec.origin
    res = grid.spec.resolution
    anchor = grid.spec.cell_center(i_init)
    h_scale = sw.weights.w_length if sw.admissible_heuristic else 1.0
    found, cost, expansions, parent = _kernels.astar_backward(
        occ, res[0], res[1], res[2], origin[0], origin[1], origin[2],
        _flat(grid.spec, i_goal), _flat(grid.spec, i_init),
        pm, pm_ox, pm_oy, pm_res,
        sw.weights.w_length, sw.weights.w_priority, sw.w_astar, h_scale, l_direct,
        anchor[0], anchor[1], anchor[2], z_lo, z_hi)
    if not found:
        return PlanResult(None, math.inf, int(expansions), time.perf_counter() - t0)

    flat_goal = _flat(grid.spec, i_goal)
    node = _flat(grid.spec, i_init)
    cells = [_unflat(grid.spec, node)]
    while node != flat_goal:
        node = int(parent[node])
        cells.append(_unflat(grid.spec, node))
    traj = _cells_to_trajectory(grid.spec, init, goal, cells)
    return PlanResult(traj, float(cost), int(expansions), time.perf_counter() - t0, cells)


def ggwp_field(grid: OccupancyGrid, goal_index, until=None,
               z_limits: tuple[int, int] | None = None) -> tuple[NavigationField, int]:
    """Hop-count navigation field grown from goal_index over free cells.

    Returns the field plus the dequeue count. A labeled `until` cell stops
    propagation early. An occupied goal yields an all-unreached field.
    """
    goal_index = tuple(int(v) for v in goal_index)
    nx, ny, nz = grid.spec.dims
    if not all(0 <= goal_index[k] < grid.spec.dims[k] for k in range(3)):
        raise ValueError(f"goal index {goal_index} outside grid")
    z_lo, z_hi = z_limits if z_limits is not None else (0, nz - 1)
    if grid.cells[goal_index] or not z_lo <= goal_index[2] <= z_hi:
        values = np.full(grid.spec.dims, UNREACHED, np.int32)
        return NavigationField(values, goal_index, grid.spec), 0
    until_flat = _flat(grid.spec, until) if until is not None else -1
    field, dequeued = _kernels.wavefront(grid.cells, _flat(grid.spec, goal_index),
                                         until_flat, z_lo, z_hi)
    return NavigationField(field.reshape(grid.spec.dims), goal_index, grid.spec), int(dequeued)


def ggwp_extract(field: NavigationField, init_index) -> list[GridIndex] | None:
    """Greedy steepest-descent cell path from init_index to the goal.

    Each step moves to the 26-neighbor with the strictly smallest field
    value; ties break by distance to the goal cell center, then by index.
    Returns None when init was never reached; a single-cell path marks the
    degenerate init == goal case.
    """
    init_index = tuple(int(v) for v in init_index)
    values = field.values
    dims = field.spec.dims
    if values[init_index] == UNREACHED:
        return None
    goal_center = field.spec.cell_center(field.goal_index)
    path = [init_index]
    cur = init_index
    while cur != field.goal_index:
        best = None
        best_key = None
        for dix in (-1, 0, 1):
            for diy in (-1, 0, 1):
                for diz in (-1, 0, 1):
                    if dix == diy == diz == 0:
                        continue
                    nb = (cur[0] + dix, cur[1] + diy, cur[2] + diz)
                    if not all(0 <= nb[k] < dims[k] for k in range(3)):
                        continue
                    v = values[nb]
                    if v == UNREACHED:
                        continue
                    d2 = float(np.sum((field.spec.cell_center(nb) - goal_center) ** 2))
                    key = (int(v), d2, nb)
                    if best_key is None or key < best_key:
                        best_key = key
                        best = nb
        if best is None or values[best] >= values[cur]:
            return None  # descent stalled; field inconsistent with request
        cur = best
        path.append(cur)
    return path


def plan_ggwp(init, goal, grid: OccupancyGrid, z_band: int | None = None,
              early_exit: bool = True,
              allow_occupied_init: bool = False) -> PlanResult:
    """Wavefront plan: hop-count field from the goal plus greedy descent.

    Cost surrogate is the hop count of the descent. Complexity is linear in
    the number of grid cells.
    """
    t0 = time.perf_counter()
    init, goal, i_init, i_goal = _endpoints(grid, init, goal)
    work = grid
    if grid.cells[i_init]:
        if not allow_occupied_init:
            raise ValueError(f"init cell {i_init} is occupied; recenter or re-seed")
        work = grid.copy()
        work.cells[i_init] = False
    if np.array_equal(init, goal):
        raise ValueError("init and goal must be distinct")
    z_limits = _z_limits(grid.spec, i_init[2], z_band)
    if i_init == i_goal:
        traj = Trajectory([init, goal])
        return PlanResult(traj, 0.0, 0, time.perf_counter() - t0, [i_init])
    field, dequeued = ggwp_field(work, i_goal, until=i_init if early_exit else None,
                                 z_limits=z_limits)
    cells = ggwp_extract(field, i_init)
    if cells is None:
        return PlanResult(None, math.inf, dequeued, time.perf_counter() - t0)
    traj = _cells_to_trajectory(grid.spec, init, goal, cells)
    return PlanResult(traj, float(len(cells) - 1), dequeued,
                      time.perf_counter() - t0, cells)


def plan_lp_dijkstra(init, goal, grid: OccupancyGrid, pmap: PriorityMap | None,
                     weights: PenaltyWeights, z_band: int | None = None,
                     allow_occupied_init: bool = False) -> PlanResult:
    """Uniform-cost form of the best-first search (heuristic weight 0)."""
    sw = SearchWeights(weights=weights, w_astar=0.0)
    return plan_lp_astar(init, goal, grid, pmap, sw, z_band, allow_occupied_init)
