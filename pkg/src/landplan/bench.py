"""Benchmark harness: random global paths, mission statistics, weight sweeps.

For every planner row and every generated global path one mission is flown;
the harness collects the average landing priority beneath the executed
trajectory, the executed-to-global length ratio, and per-plan runtimes, then
aggregates mean and standard deviation per row.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mission import MissionConfig, MissionLog, run_mission
from .occupancy import GridSpec
from .penalty import PenaltyWeights, Trajectory, coverage_penalty
from .priority import GroundMask, PriorityMap, binary_priority, footprint_size, lpf_priority
from .sensing import LidarConfig, Scene, SceneParams, generate_scene

DEFAULT_BOUNDS = ((-350.0, -350.0), (350.0, 350.0))


@dataclass(frozen=True)
class BenchRow:
    """One planner configuration in the benchmark matrix."""

    planner: str
    w_length: float
    w_priority: float
    w_astar: float | None = None
    admissible: bool | None = None

    @property
    def label(self) -> str:
        parts = [self.planner, f"wl{self.w_length:g}", f"wp{self.w_priority:g}"]
        if self.w_astar is not None:
            parts.append(f"wa{self.w_astar:g}")
        return "_".join(parts)


def default_rows() -> tuple[BenchRow, ...]:
    return (
        BenchRow("lp_dijkstra", 1.0, 0.0),
        BenchRow("lp_dijkstra", 0.5, 1.0),
        BenchRow("lp_astar", 1.0, 0.0),
        BenchRow("lp_astar", 0.5, 1.0),
        BenchRow("wlp_astar", 1.0, 0.0, w_astar=math.sqrt(3.0)),
        BenchRow("wlp_astar", 0.5, 1.0, w_astar=math.sqrt(3.0)),
        BenchRow("ggwp", 1.0, 0.0),
    )


@dataclass
class BenchmarkSpec:
    """Scenario plus planner matrix for one benchmark run."""

    seed: int = 0
    n_paths: int = 50
    path_length: float = 500.0
    altitude: float = 50.0
    waypoint_spacing: float = 50.0
    priority_variant: str = "binary"      # binary | lpf
    camera_fov_deg: float = 53.0
    lpf_window: float | None = None       # None: camera footprint at altitude
    rows: tuple[BenchRow, ...] = field(default_factory=default_rows)
    scene: SceneParams = field(default_factory=lambda: SceneParams(
        bounds=DEFAULT_BOUNDS, n_boxes=90, footprint_range=(15.0, 55.0),
        height_range=(20.0, 80.0)))
    mask_resolution: float = 2.0
    mask_fill: float = 0.35
    grid_dims: tuple[int, int, int] = (200, 200, 40)
    grid_resolution: tuple[float, float, float] = (2.0, 2.0, 4.0)
    speed: float = 3.0
    tick: float = 1.0
    z_band: int | None = 1
    tick_budget_factor: float = 4.0
    fixed_heading: float | None = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.path_length <= 0 or self.waypoint_spacing <= 0:
            raise ValueError("path_length and waypoint_spacing must be > 0")
        if self.priority_variant not in ("binary", "lpf"):
            raise ValueError("priority_variant must be 'binary' or 'lpf'")


@dataclass
class MissionRecord:
    row_label: str
    path_index: int
    mean_priority: float
    length_ratio: float
    executed_length: float
    n_plans: int
    n_replans: int
    n_reached: int
    n_dropped: int
    mean_plan_runtime: float
    mean_expansions: float
    completed: bool
    error: str | None = None


@dataclass
class RowStats:
    row: BenchRow
    priority_variant: str
    n_missions: int
    n_valid: int
    mean_priority: float
    std_priority: float
    mean_ratio: float
    std_ratio: float
    mean_plan_runtime: float
    mean_expansions: float
    records: list[MissionRecord]


@dataclass
class BenchmarkReport:
    spec_seed: int
    rows: list[RowStats]

    def row(self, label: str) -> RowStats:
        for stats in self.rows:
            if stats.row.label == label:
                return stats
        raise KeyError(label)

    def write_json(self, path) -> None:
        payload = {"seed": self.spec_seed, "rows": []}
        for stats in self.rows:
            entry = {k: v for k, v in vars(stats).items() if k not in ("records", "row")}
            entry["row"] = vars(stats.row) | {"label": stats.row.label}
            entry["records"] = [vars(r) for r in stats.records]
            payload["rows"].append(entry)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=float)

    def write_csv(self, out_dir) -> tuple[Path, Path]:
        """Write report.csv (aggregates) and records.csv (per mission).

        Runtime columns come last: every column before runtime_ms is
        deterministic for a fixed spec.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report = out_dir / "report.csv"
        with open(report, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "planner", "w_length", "w_priority", "w_astar",
                        "priority_variant", "n_missions", "n_valid",
                        "mean_priority", "std_priority", "mean_ratio", "std_ratio",
                        "mean_expansions", "mean_plan_runtime_ms"])
            for s in self.rows:
                r = s.row
                w.writerow([r.label, r.planner, _fmt(r.w_length), _fmt(r.w_priority),
                            "" if r.w_astar is None else _fmt(r.w_astar),
                            s.priority_variant, s.n_missions, s.n_valid,
                            _fmt(s.mean_priority), _fmt(s.std_priority),
                            _fmt(s.mean_ratio), _fmt(s.std_ratio),
                            _fmt(s.mean_expansions), _fmt(s.mean_plan_runtime * 1e3)])
        records = out_dir / "records.csv"
        with open(records, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "path_index", "mean_priority", "length_ratio",
                        "executed_length", "n_plans", "n_replans", "n_reached",
                        "n_dropped", "completed", "mean_expansions",
                        "mean_plan_runtime_ms"])
            for s in self.rows:
                for rec in s.records:
                    w.writerow([rec.row_label, rec.path_index, _fmt(rec.mean_priority),
                                _fmt(rec.length_ratio), _fmt(rec.executed_length),
                                rec.n_plans, rec.n_replans, rec.n_reached,
                                rec.n_dropped, int(rec.completed),
                                _fmt(rec.mean_expansions),
                                _fmt(rec.mean_plan_runtime * 1e3)])
        return report, records


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{v:.12g}"


def mean_priority(traj: Trajectory, pmap: PriorityMap) -> float:
    """Average landing priority along the trajectory, in [0, 1]."""
    return -coverage_penalty(traj, pmap)


def generate_global_paths(seed: int, spec: BenchmarkSpec,
                          scene: Scene | None = None) -> list[np.ndarray]:
    """Random straight global paths at constant altitude, as waypoint arrays.

    Each path is a straight segment of spec.path_length discretized every
    spec.waypoint_spacing meters. Positions and headings are uniform inside
    the scene bounds (rejection sampling keeps the whole segment inside and,
    when a scene is given, keeps the start point out of any obstacle so the
    vehicle never spawns inside a building).
    """
    rng = np.random.default_rng(seed)
    (x0, y0), (x1, y1) = scene.bounds if scene is not None else spec.scene.bounds
    n_wp = int(round(spec.path_length / spec.waypoint_spacing)) + 1
    s = np.linspace(0.0, spec.path_length, n_wp)
    paths = []
    for _ in range(spec.n_paths):
        for _attempt in range(1000):
            start = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1), spec.altitude])
            heading = spec.fixed_heading if spec.fixed_heading is not None \
                else rng.uniform(0.0, 2.0 * math.pi)
            d = np.array([math.cos(heading), math.sin(heading), 0.0])
            end = start + spec.path_length * d
            if not (x0 <= end[0] <= x1 and y0 <= end[1] <= y1):
                continue
            if scene is not None and scene.point_in_obstacle(start):
                continue
            paths.append(start[None, :] + s[:, None] * d[None, :])
            break
        else:
            raise RuntimeError("could not place a global path inside the bounds")
    return paths


def landing_mask_for_scene(scene: Scene, resolution: float, seed: int,
                           fill: float = 0.35) -> GroundMask:
    """Random rectangular landing regions, cleared under building footprints."""
    (x0, y0), (x1, y1) = scene.bounds
    nx = int(math.ceil((x1 - x0) / resolution))
    ny = int(math.ceil((y1 - y0) / resolution))
    rng = np.random.default_rng(seed)
    cells = np.zeros((nx, ny), np.int8)
    for _ in range(2000):
        if cells.mean() >= fill:
            break
        w = rng.uniform(20.0, 80.0) / resolution
        h = rng.uniform(20.0, 80.0) / resolution
        cx = rng.uniform(0, nx)
        cy = rng.uniform(0, ny)
        ix0, ix1 = int(max(0, cx - w / 2)), int(min(nx, cx + w / 2))
        iy0, iy1 = int(max(0, cy - h / 2)), int(min(ny, cy + h / 2))
        cells[ix0:ix1, iy0:iy1] = 1
    for box in scene.boxes:
        ix0 = max(0, int((box.lo[0] - x0) / resolution))
        ix1 = min(nx, int(math.ceil((box.hi[0] - x0) / resolution)))
        iy0 = max(0, int((box.lo[1] - y0) / resolution))
        iy1 = min(ny, int(math.ceil((box.hi[1] - y0) / resolution)))
        cells[ix0:ix1, iy0:iy1] = 0
    return GroundMask(cells, resolution, origin=(x0, y0))


def priority_map_for(spec: BenchmarkSpec, mask: GroundMask) -> PriorityMap:
    if spec.priority_variant == "binary":
        return binary_priority(mask)
    window = spec.lpf_window
    if window is None:
        window = footprint_size(spec.altitude, math.radians(spec.camera_fov_deg))
    return lpf_priority(mask, window)


def _mission_record(row: BenchRow, path_index: int, waypoints: np.ndarray,
                    log: MissionLog, pmap: PriorityMap) -> MissionRecord:
    traj = log.executed_trajectory()
    pbar = mean_priority(traj, pmap) if traj is not None else math.nan

    # ratio over the waypoints actually reached: executed meters attributed to
    # those pursuits over the global segment lengths between them
    l_lp = 0.0
    l_gp = 0.0
    for rec in log.waypoints:
        if rec.outcome == "reached":
            l_lp += log.pursuit_lengths.get(rec.index, 0.0)
            l_gp += float(np.linalg.norm(waypoints[rec.index] - waypoints[rec.index - 1]))
    ratio = (l_lp / l_gp) if l_gp > 0 else math.nan

    runtimes = [p.runtime for p in log.plans]
    expans = [p.expansions for p in log.plans]
    counts = log.outcome_counts()
    return MissionRecord(
        row_label=row.label, path_index=path_index,
        mean_priority=pbar, length_ratio=ratio,
        executed_length=log.executed_length(),
        n_plans=len(log.plans), n_replans=len(log.replans),
        n_reached=counts.get("reached", 0),
        n_dropped=sum(v for k, v in counts.items() if k != "reached"),
        mean_plan_runtime=float(np.mean(runtimes)) if runtimes else math.nan,
        mean_expansions=float(np.mean(expans)) if expans else math.nan,
        completed=log.completed)


def _aggregate(row: BenchRow, variant: str, records: list[MissionRecord]) -> RowStats:
    pbars = [r.mean_priority for r in records if not math.isnan(r.mean_priority)]
    ratios = [r.length_ratio for r in records if not math.isnan(r.length_ratio)]
    runtimes = [r.mean_plan_runtime for r in records if not math.isnan(r.mean_plan_runtime)]
    expans = [r.mean_expansions for r in records if not math.isnan(r.mean_expansions)]

    def mean(vs):
        return float(np.mean(vs)) if vs else math.nan

    def std(vs):
        return float(np.std(vs, ddof=1)) if len(vs) > 1 else 0.0

    return RowStats(row=row, priority_variant=variant,
                    n_missions=len(records), n_valid=len(ratios),
                    mean_priority=mean(pbars), std_priority=std(pbars),
                    mean_ratio=mean(ratios), std_ratio=std(ratios),
                    mean_plan_runtime=mean(runtimes), mean_expansions=mean(expans),
                    records=records)


def mission_config_for(row: BenchRow, spec: BenchmarkSpec) -> MissionConfig:
    return MissionConfig(
        speed=spec.speed, tick=spec.tick, planner=row.planner,
        weights=PenaltyWeights(row.w_length, row.w_priority),
        w_astar=row.w_astar, admissible_heuristic=row.admissible,
        z_band=spec.z_band, tick_budget_factor=spec.tick_budget_factor,
        lidar=LidarConfig())


def run_benchmark(spec: BenchmarkSpec, out_dir=None,
                  scene: Scene | None = None) -> BenchmarkReport:
    """Fly every planner row over every global path and aggregate statistics.

    Mission failures are recorded per row (NaN metrics), never fatal. Output
    CSVs are byte-stable for a fixed spec except for the runtime columns.
    """
    if scene is None:
        scene = generate_scene(spec.seed, spec.scene)
    mask = landing_mask_for_scene(scene, spec.mask_resolution, spec.seed + 1,
                                  spec.mask_fill)
    pmap = priority_map_for(spec, mask)
    paths = generate_global_paths(spec.seed + 2, spec, scene)

    stats_rows = []
    for row in spec.rows:
        cfg = mission_config_for(row, spec)
        records = []
        for k, waypoints in enumerate(paths):
            grid_spec = GridSpec(spec.grid_dims, spec.grid_resolution,
                                 tuple(waypoints[0]))
            try:
                log = run_mission(scene, waypoints, cfg, grid_spec=grid_spec, pmap=pmap)
                records.append(_mission_record(row, k, waypoints, log, pmap))
            except Exception as err:  # recorded, not fatal
                records.append(MissionRecord(
                    row_label=row.label, path_index=k, mean_priority=math.nan,
                    length_ratio=math.nan, executed_length=math.nan, n_plans=0,
                    n_replans=0, n_reached=0, n_dropped=0,
                    mean_plan_runtime=math.nan, mean_expansions=math.nan,
                    completed=False, error=repr(err)))
        stats_rows.append(_aggregate(row, spec.priority_variant, records))

    report = BenchmarkReport(spec_seed=spec.seed, rows=stats_rows)
    if out_dir is not None:
        report.write_csv(out_dir)
        report.write_json(Path(out_dir) / "report.json")
    return report


def sweep_ratios(ratios, spec: BenchmarkSpec | None = None,
                 out_dir=None) -> BenchmarkReport:
    """Priority/length weight-ratio sweep with the Dijkstra-form planner.

    Each ratio r becomes a row with weights (1, r); the trajectory trade-off
    depends only on the ratio, so this matches scaling both weights.
    """
    spec = spec or BenchmarkSpec()
    rows = tuple(BenchRow("lp_dijkstra", 1.0, float(r)) for r in ratios)
    swept = BenchmarkSpec(**{**vars(spec), "rows": rows})
    return run_benchmark(swept, out_dir=out_dir)
