"""Grid planners: surrogate-cost best-first search and wavefront propagation."""

import math

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import bellman_ford, dijkstra

from landplan.grid_search import (
    UNREACHED,
    NavigationField,
    PlanResult,
    SearchWeights,
    edge_cost,
    ggwp_extract,
    ggwp_field,
    plan_ggwp,
    plan_lp_astar,
    plan_lp_dijkstra,
)
from landplan.occupancy import GridSpec, OccupancyGrid
from landplan.penalty import PenaltyWeights, collision_penalty
from landplan.priority import PriorityMap, sample_priority


# ---------------------------------------------------------------------------
# independent graph oracles
# ---------------------------------------------------------------------------

def flat(spec, idx):
    nx, ny, nz = spec.dims
    return (idx[0] * ny + idx[1]) * nz + idx[2]


def build_surrogate_graph(grid, pmap, weights, l_direct):
    """Edge list of the 26-connected free-cell graph with surrogate costs.

    Written directly from the cost definition, independent of the planner
    implementation.
    """
    spec = grid.spec
    nx, ny, nz = spec.dims
    rows, cols, costs = [], [], []
    for ix in range(nx):
        for iy in range(ny):
            for iz in range(nz):
                if grid.cells[ix, iy, iz]:
                    continue
                ca = spec.cell_center((ix, iy, iz))
                for dx in (-1, 0, 1):
                    for dy in (-1, 0, 1):
                        for dz in (-1, 0, 1):
                            if dx == dy == dz == 0:
                                continue
                            jx, jy, jz = ix + dx, iy + dy, iz + dz
                            if not (0 <= jx < nx and 0 <= jy < ny and 0 <= jz < nz):
                                continue
                            if grid.cells[jx, jy, jz]:
                                continue
                            cb = spec.cell_center((jx, jy, jz))
                            dl = float(np.linalg.norm(cb - ca))
                            mid = 0.5 * (ca + cb)
                            p = sample_priority(pmap, mid[0], mid[1]) if pmap is not None else 0.0
                            w = dl * (weights.w_length + weights.w_priority * (1.0 - p)) / l_direct
                            rows.append(flat(spec, (ix, iy, iz)))
                            cols.append(flat(spec, (jx, jy, jz)))
                            costs.append(w)
    n = nx * ny * nz
    return csr_matrix((costs, (rows, cols)), shape=(n, n))


def bfs_hops_oracle(grid, goal_idx):
    """Plain deque BFS hop counts over 26-connected free cells."""
    from collections import deque

    spec = grid.spec
    nx, ny, nz = spec.dims
    dist = {goal_idx: 0}
    q = deque([goal_idx])
    while q:
        cur = q.popleft()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    if dx == dy == dz == 0:
                        continue
                    nb = (cur[0] + dx, cur[1] + dy, cur[2] + dz)
                    if not (0 <= nb[0] < nx and 0 <= nb[1] < ny and 0 <= nb[2] < nz):
                        continue
                    if grid.cells[nb] or nb in dist:
                        continue
                    dist[nb] = dist[cur] + 1
                    q.append(nb)
    return dist


def random_instance(seed, dims=(10, 10, 3), occupancy=0.3):
    """Random grid, priority map, and free init/goal cell centers."""
    rng = np.random.default_rng(seed)
    spec = GridSpec(dims, (2.0, 2.0, 4.0), (0.0, 0.0, 0.0))
    grid = OccupancyGrid(spec)
    grid.cells[:] = rng.random(dims) < occupancy
    pmap = PriorityMap(rng.random((dims[0], dims[1])), 2.0,
                       origin=(spec.origin[0], spec.origin[1]))
    free = np.argwhere(~grid.cells)
    a, b = rng.choice(len(free), size=2, replace=False)
    i_init = tuple(int(v) for v in free[a])
    i_goal = tuple(int(v) for v in free[b])
    init = spec.cell_center(i_init)
    goal = spec.cell_center(i_goal)
    return grid, pmap, init, goal, i_init, i_goal


WEIGHTS = PenaltyWeights(0.5, 1.0)


# ---------------------------------------------------------------------------
# edge cost
# ---------------------------------------------------------------------------

class TestEdgeCost:
    def make_grid(self):
        return OccupancyGrid(GridSpec((10, 10, 4), (2.0, 2.0, 4.0), (0.0, 0.0, 0.0)))

    def test_axis_edge_length_only(self):
        grid = self.make_grid()
        c = edge_cost((2, 2, 1), (3, 2, 1), grid, None, PenaltyWeights(1, 0), 100.0)
        assert c == pytest.approx(0.02, abs=1e-12)

    def test_axis_edge_full_priority(self):
        grid = self.make_grid()
        pmap = PriorityMap(np.ones((10, 10)), 2.0, origin=(grid.spec.origin[0], grid.spec.origin[1]))
        c = edge_cost((2, 2, 1), (3, 2, 1), grid, pmap, PenaltyWeights(0.5, 1.0), 100.0)
        assert c == pytest.approx(0.01, abs=1e-12)

    def test_full_diagonal(self):
        grid = self.make_grid()
        pmap = PriorityMap(np.full((10, 10), 0.25), 2.0,
                           origin=(grid.spec.origin[0], grid.spec.origin[1]))
        w = PenaltyWeights(0.7, 0.4)
        c = edge_cost((2, 2, 1), (3, 3, 2), grid, pmap, w, 50.0)
        expect = math.sqrt(24.0) * (0.7 + 0.4 * 0.75) / 50.0
        assert c == pytest.approx(expect, abs=1e-12)

    def test_occupied_endpoint_infinite(self):
        grid = self.make_grid()
        grid.cells[3, 2, 1] = True
        assert edge_cost((2, 2, 1), (3, 2, 1), grid, None, PenaltyWeights(1, 0), 10.0) == math.inf

    def test_non_neighbors_rejected(self):
        grid = self.make_grid()
        with pytest.raises(ValueError):
            edge_cost((0, 0, 0), (2, 0, 0), grid, None, PenaltyWeights(1, 0), 10.0)

    def test_non_negative_on_random_inputs(self):
        grid = self.make_grid()
        rng = np.random.default_rng(3)
        pmap = PriorityMap(rng.random((10, 10)), 2.0,
                           origin=(grid.spec.origin[0], grid.spec.origin[1]))
        for _ in range(100):
            a = tuple(rng.integers((0, 0, 0), (10, 10, 4)))
            d = tuple(rng.integers(-1, 2, 3))
            b = tuple(a[k] + d[k] for k in range(3))
            if a == b or not all(0 <= b[k] < grid.spec.dims[k] for k in range(3)):
                continue
            w = PenaltyWeights(rng.random() + 0.01, rng.random())
            assert edge_cost(a, b, grid, pmap, w, 73.0) >= 0.0


# ---------------------------------------------------------------------------
# best-first search family
# ---------------------------------------------------------------------------

class TestDijkstraForm:
    def test_matches_bellman_ford_oracle(self, kernels_warm):
        hits = 0
        for seed in range(25):
            grid, pmap, init, goal, i_init, i_goal = random_instance(seed)
            l_direct = float(np.linalg.norm(goal - init))
            if l_direct == 0.0:
                continue
            result = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
            graph = build_surrogate_graph(grid, pmap, WEIGHTS, l_direct)
            dist = bellman_ford(graph, indices=flat(grid.spec, i_goal), directed=True)
            oracle = dist[flat(grid.spec, i_init)]
            if math.isinf(oracle):
                assert result.unreachable
            else:
                assert not result.unreachable
                assert result.surrogate_cost == pytest.approx(oracle, abs=1e-9)
                hits += 1
        assert hits >= 10  # most instances are solvable

    def test_empty_grid_geodesic(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(4)
        grid.cells[:] = False
        weights = PenaltyWeights(1.0, 0.0)
        l_direct = float(np.linalg.norm(goal - init))
        result = plan_lp_dijkstra(init, goal, grid, None, weights)
        graph = build_surrogate_graph(grid, None, weights, 1.0)  # raw grid metric
        dist = dijkstra(graph, indices=flat(grid.spec, i_goal), directed=True)
        shortest = dist[flat(grid.spec, i_init)]
        assert result.surrogate_cost == pytest.approx(shortest / l_direct, abs=1e-9)

    def test_corridor_detour_follows_priority(self, kernels_warm):
        # straight corridor has priority 0, a parallel corridor 10 cells away
        # has priority 1; a high priority weight buys the detour (the strip is
        # long enough that riding the high-priority lane amortizes the transit)
        spec = GridSpec((60, 14, 1), (1.0, 1.0, 1.0), (30.0, 7.0, 0.5))
        grid = OccupancyGrid(spec)
        cells = np.zeros((60, 14))
        cells[:, 11] = 1.0
        pmap = PriorityMap(cells, 1.0, origin=(0.0, 0.0))
        init = spec.cell_center((0, 1, 0))
        goal = spec.cell_center((59, 1, 0))
        straight = plan_lp_dijkstra(init, goal, grid, pmap, PenaltyWeights(1.0, 0.0))
        assert max(p[1] for p in straight.trajectory.points) < 2.0
        detour = plan_lp_dijkstra(init, goal, grid, pmap, PenaltyWeights(0.5, 1.0))
        assert max(p[1] for p in detour.trajectory.points) > 10.0
        # exhaustive check on the same graph
        l_direct = float(np.linalg.norm(goal - init))
        graph = build_surrogate_graph(grid, pmap, PenaltyWeights(0.5, 1.0), l_direct)
        dist = bellman_ford(graph, indices=flat(spec, (59, 1, 0)), directed=True)
        assert detour.surrogate_cost == pytest.approx(dist[flat(spec, (0, 1, 0))], abs=1e-9)

    def test_occupied_goal_unreachable(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(7)
        grid.cells[i_goal] = True
        result = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
        assert result.unreachable
        assert result.surrogate_cost == math.inf

    def test_occupied_init_raises(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(8)
        grid.cells[i_init] = True
        with pytest.raises(ValueError):
            plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
        lenient = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS, allow_occupied_init=True)
        assert isinstance(lenient, PlanResult)

    def test_endpoints_appended_exactly(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(10)
        init = init + np.array([0.3, -0.2, 0.1])  # off cell centers
        result = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
        if not result.unreachable:
            assert np.allclose(result.trajectory.start(), init)
            assert np.allclose(result.trajectory.end(), goal)

    def test_returned_path_collision_free(self, kernels_warm):
        for seed in range(10):
            grid, pmap, init, goal, *_ = random_instance(seed + 100)
            result = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
            if not result.unreachable:
                assert collision_penalty(result.trajectory, grid) == 0.0

    def test_completeness_matches_flood_fill(self, kernels_warm):
        for seed in range(20):
            grid, pmap, init, goal, i_init, i_goal = random_instance(seed + 50, occupancy=0.45)
            result = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
            reachable = i_init in bfs_hops_oracle(grid, i_goal)
            assert result.unreachable == (not reachable), f"seed {seed + 50}"


class TestAstarForms:
    def test_astar_matches_dijkstra_with_fewer_expansions(self, kernels_warm):
        for seed in range(25):
            grid, pmap, init, goal, *_ = random_instance(seed)
            dij = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
            ast = plan_lp_astar(init, goal, grid, pmap,
                                SearchWeights(WEIGHTS, w_astar=1.0, admissible_heuristic=True))
            assert dij.unreachable == ast.unreachable
            if not dij.unreachable:
                assert ast.surrogate_cost == pytest.approx(dij.surrogate_cost, abs=1e-9)
                assert ast.expansions <= dij.expansions

    def test_weighted_astar_bounded_suboptimal(self, kernels_warm):
        w = math.sqrt(3.0)
        for seed in range(25):
            grid, pmap, init, goal, *_ = random_instance(seed)
            dij = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
            wlp = plan_lp_astar(init, goal, grid, pmap,
                                SearchWeights(WEIGHTS, w_astar=w, admissible_heuristic=True))
            assert dij.unreachable == wlp.unreachable
            if not dij.unreachable:
                assert wlp.surrogate_cost <= w * dij.surrogate_cost + 1e-9

    def test_zero_weight_equals_dijkstra(self, kernels_warm):
        grid, pmap, init, goal, *_ = random_instance(13)
        a = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS)
        b = plan_lp_astar(init, goal, grid, pmap, SearchWeights(WEIGHTS, w_astar=0.0))
        assert a.surrogate_cost == b.surrogate_cost
        assert a.expansions == b.expansions


# ---------------------------------------------------------------------------
# wavefront planner
# ---------------------------------------------------------------------------

class TestWavefront:
    def test_empty_grid_chebyshev_field(self, kernels_warm):
        spec = GridSpec((9, 8, 5), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))
        grid = OccupancyGrid(spec)
        goal = (4, 3, 2)
        field, dequeued = ggwp_field(grid, goal)
        for ix in range(9):
            for iy in range(8):
                for iz in range(5):
                    cheb = max(abs(ix - 4), abs(iy - 3), abs(iz - 2))
                    assert field.values[ix, iy, iz] == cheb
        assert dequeued <= spec.cell_count

    def test_field_matches_bfs_oracle(self, kernels_warm):
        for seed in range(10):
            grid, pmap, init, goal, i_init, i_goal = random_instance(seed + 200)
            field, _ = ggwp_field(grid, i_goal)
            oracle = bfs_hops_oracle(grid, i_goal)
            for idx, hops in oracle.items():
                assert field.values[idx] == hops
            assert int((field.values != UNREACHED).sum()) == len(oracle)

    def test_field_invariant_neighbor_one_less(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(303)
        field, _ = ggwp_field(grid, i_goal)
        vals = field.values
        assert vals[i_goal] == 0
        nx, ny, nz = grid.spec.dims
        for idx in np.argwhere(vals > 0):
            v = vals[tuple(idx)]
            has_lower = False
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        nb = (idx[0] + dx, idx[1] + dy, idx[2] + dz)
                        if all(0 <= nb[k] < grid.spec.dims[k] for k in range(3)):
                            if vals[nb] == v - 1:
                                has_lower = True
            assert has_lower

    def test_occupied_goal_all_unreached(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(17)
        grid.cells[i_goal] = True
        field, _ = ggwp_field(grid, i_goal)
        assert np.all(field.values == UNREACHED)
        result = plan_ggwp(init, goal, grid)
        assert result.unreachable

    def test_extract_descends_monotonically(self, kernels_warm):
        for seed in range(10):
            grid, pmap, init, goal, i_init, i_goal = random_instance(seed + 400)
            field, _ = ggwp_field(grid, i_goal)
            path = ggwp_extract(field, i_init)
            if path is None:
                continue
            vals = [field.value(c) for c in path]
            assert vals == sorted(vals, reverse=True)
            assert len(set(vals)) == len(vals)  # strict decrease, no revisits
            assert len(set(path)) == len(path)
            assert len(path) - 1 == field.value(i_init)

    def test_extract_degenerate_single_cell(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(21)
        field, _ = ggwp_field(grid, i_goal)
        path = ggwp_extract(field, i_goal)
        assert path == [i_goal]

    def test_plan_hops_match_bfs_oracle(self, kernels_warm):
        for seed in range(10):
            grid, pmap, init, goal, i_init, i_goal = random_instance(seed + 500)
            result = plan_ggwp(init, goal, grid)
            oracle = bfs_hops_oracle(grid, i_goal)
            if i_init not in oracle:
                assert result.unreachable
            else:
                assert not result.unreachable
                assert len(result.path_cells) - 1 == oracle[i_init]
                assert result.expansions <= int((~grid.cells).sum())

    def test_empty_grid_sqrt3_length_bound(self, kernels_warm):
        spec = GridSpec((30, 30, 30), (1.0, 1.0, 1.0), (15.0, 15.0, 15.0))
        grid = OccupancyGrid(spec)
        rng = np.random.default_rng(5)
        for _ in range(20):
            i_init = tuple(rng.integers(0, 30, 3))
            i_goal = tuple(rng.integers(0, 30, 3))
            if i_init == i_goal:
                continue
            init = spec.cell_center(i_init)
            goal = spec.cell_center(i_goal)
            result = plan_ggwp(init, goal, grid)
            straight = float(np.linalg.norm(goal - init))
            assert result.trajectory.length <= math.sqrt(3.0) * straight + 1e-6

    def test_early_exit_same_path_length(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(29)
        full = plan_ggwp(init, goal, grid, early_exit=False)
        fast = plan_ggwp(init, goal, grid, early_exit=True)
        assert full.unreachable == fast.unreachable
        if not full.unreachable:
            assert len(full.path_cells) == len(fast.path_cells)
            assert fast.expansions <= full.expansions

    def test_hollow_box_partial_vs_closed(self, kernels_warm):
        # goal inside a box: reachable while a face is unmapped, unreachable
        # once the surface is fully mapped
        spec = GridSpec((20, 20, 10), (1.0, 1.0, 1.0), (10.0, 10.0, 5.0))
        grid = OccupancyGrid(spec)
        # hollow shell from x,y,z in [6..13], interior [7..12]
        shell = np.zeros(spec.dims, bool)
        shell[6:14, 6:14, 2:9] = True
        shell[7:13, 7:13, 3:8] = False
        grid.cells |= shell
        goal = spec.cell_center((9, 9, 5))
        init = spec.cell_center((1, 1, 5))
        closed_plan = plan_ggwp(init, goal, grid)
        assert closed_plan.unreachable
        opened = grid.copy()
        opened.cells[6, 8:12, 4:7] = False  # one face partially unmapped
        open_plan = plan_ggwp(init, goal, opened)
        assert not open_plan.unreachable
        assert collision_penalty(open_plan.trajectory, opened) == 0.0


class TestZBand:
    def test_band_restricts_altitude(self, kernels_warm):
        spec = GridSpec((20, 5, 11), (1.0, 1.0, 1.0), (10.0, 2.5, 5.5))
        grid = OccupancyGrid(spec)
        grid.cells[10, :, 3:8] = True  # wall with passage above/below the band
        init = spec.cell_center((2, 2, 5))
        goal = spec.cell_center((17, 2, 5))
        banded = plan_lp_dijkstra(init, goal, grid, None, PenaltyWeights(1, 0), z_band=1)
        assert banded.unreachable
        free3d = plan_lp_dijkstra(init, goal, grid, None, PenaltyWeights(1, 0), z_band=None)
        assert not free3d.unreachable
        g = plan_ggwp(init, goal, grid, z_band=1)
        assert g.unreachable
        assert not plan_ggwp(init, goal, grid, z_band=None).unreachable

    def test_band_keeps_path_levels(self, kernels_warm):
        grid, pmap, init, goal, i_init, i_goal = random_instance(31)
        if i_init[2] != i_goal[2]:
            i_goal = (i_goal[0], i_goal[1], i_init[2])
            goal = grid.spec.cell_center(i_goal)
            grid.cells[i_goal] = False
        result = plan_lp_dijkstra(init, goal, grid, pmap, WEIGHTS, z_band=0)
        if not result.unreachable:
            assert all(c[2] == i_init[2] for c in result.path_cells)
