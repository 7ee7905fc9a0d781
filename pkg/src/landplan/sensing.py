"""Synthetic world model and simulated surface-only LiDAR sensing.

The ground truth is a set of axis-aligned boxes standing on a flat ground
plane. The simulated LiDAR casts a fixed lattice of rays from the sensor pose
and records only the nearest surface intersection per ray, so obstacle
interiors are never observed and stay mapped as free space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .occupancy import GridSpec, OccupancyGrid


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by min and max corners in meters."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"box must have positive extent per axis: {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, p, margin: float = 0.0) -> bool:
        """True if p is inside the box, shrunk by margin on every face."""
        return all(self.lo[k] + margin < p[k] < self.hi[k] - margin for k in range(3))


@dataclass
class Scene:
    """Ground-truth world: boxes above a flat ground plane.

    bounds is the 2D extent ((xmin, ymin), (xmax, ymax)) used when generating
    scenes and global paths; sensing itself is not clipped to it.
    """

    boxes: list[Box]
    ground_z: float = 0.0
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((-250.0, -250.0), (250.0, 250.0))

    def __post_init__(self):
        for box in self.boxes:
            if box.lo[2] < self.ground_z - 1e-9:
                raise ValueError(f"box {box} extends below ground z={self.ground_z}")
        (x0, y0), (x1, y1) = self.bounds
        if x1 <= x0 or y1 <= y0:
            raise ValueError(f"degenerate bounds {self.bounds}")

    def box_array(self) -> np.ndarray:
        """Boxes as an (B, 6) array [lo_xyz, hi_xyz] for vectorized queries."""
        if not self.boxes:
            return np.zeros((0, 6))
        return np.array([list(b.lo) + list(b.hi) for b in self.boxes])

    def point_in_obstacle(self, p, margin: float = 0.0) -> bool:
        return any(b.contains(p, margin) for b in self.boxes)

    def to_dict(self) -> dict:
        return {
            "ground_z": self.ground_z,
            "bounds": [list(self.bounds[0]), list(self.bounds[1])],
            "boxes": [{"min": list(b.lo), "max": list(b.hi)} for b in self.boxes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scene":
        boxes = [Box(tuple(b["min"]), tuple(b["max"])) for b in data.get("boxes", [])]
        bounds = data.get("bounds", [[-250, -250], [250, 250]])
        return cls(boxes=boxes, ground_z=float(data.get("ground_z", 0.0)),
                   bounds=(tuple(bounds[0]), tuple(bounds[1])))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "Scene":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class SceneParams:
    """Knobs for the random box-city generator."""

    bounds: tuple[tuple[float, float], tuple[float, float]] = ((-250.0, -250.0), (250.0, 250.0))
    n_boxes: int = 60
    footprint_range: tuple[float, float] = (10.0, 50.0)
    height_range: tuple[float, float] = (20.0, 80.0)
    ground_z: float = 0.0
    hollow_around: tuple[float, float, float] | None = None
    hollow_size: float = 20.0

    def __post_init__(self):
        if self.n_boxes < 0:
            raise ValueError("n_boxes must be >= 0")
        for rng in (self.footprint_range, self.height_range):
            if rng[0] <= 0 or rng[1] < rng[0]:
                raise ValueError(f"size range must be positive and ordered: {rng}")
        if self.hollow_size <= 0:
            raise ValueError("hollow_size must be > 0")


def generate_scene(seed: int, params: SceneParams | None = None) -> Scene:
    """Deterministic random box city; optional closed box around a point.

    The hollow placement mode puts one closed box centered on
    params.hollow_around (lifted if needed so it stays above ground), which is
    the standard way to script goal-inside-obstacle scenarios.
    """
    params = params or SceneParams()
    rng = np.random.default_rng(seed)
    (x0, y0), (x1, y1) = params.bounds
    boxes = []
    for _ in range(params.n_boxes):
        w = rng.uniform(*params.footprint_range)
        d = rng.uniform(*params.footprint_range)
        h = rng.uniform(*params.height_range)
        cx = rng.uniform(x0 + w / 2, x1 - w / 2)
        cy = rng.uniform(y0 + d / 2, y1 - d / 2)
        boxes.append(Box((cx - w / 2, cy - d / 2, params.ground_z),
                         (cx + w / 2, cy + d / 2, params.ground_z + h)))
    if params.hollow_around is not None:
        q = np.asarray(params.hollow_around, float)
        half = params.hollow_size / 2.0
        zlo = max(params.ground_z, q[2] - half)
        boxes.append(Box((q[0] - half, q[1] - half, zlo),
                         (q[0] + half, q[1] + half, zlo + params.hollow_size)))
    return Scene(boxes=boxes, ground_z=params.ground_z, bounds=params.bounds)


def ray_lattice(n_azimuth: int = 360, n_elevation: int = 9,
                elevation_span_deg: float = 30.0) -> np.ndarray:
    """Unit direction lattice in the sensor frame.

    Azimuth sweeps the full circle; elevations span +-elevation_span_deg off
    the sensor xy-plane. Returns an (n_azimuth * n_elevation, 3) array.
    """
    az = np.linspace(0.0, 2.0 * math.pi, n_azimuth, endpoint=False)
    el = np.deg2rad(np.linspace(-elevation_span_deg, elevation_span_deg, n_elevation))
    aa, ee = np.meshgrid(az, el, indexing="ij")
    dirs = np.stack([np.cos(ee) * np.cos(aa), np.cos(ee) * np.sin(aa), np.sin(ee)], axis=-1)
    return dirs.reshape(-1, 3)


def full_sphere_lattice(n_azimuth: int = 180, n_elevation: int = 33) -> np.ndarray:
    """Dense near-full-sphere lattice for scripted coverage scenarios."""
    return ray_lattice(n_azimuth, n_elevation, elevation_span_deg=80.0)


@dataclass
class LidarConfig:
    """Ray lattice plus maximal detection range in meters."""

    max_range: float = 50.0
    directions: np.ndarray = field(default_factory=ray_lattice)

    def __post_init__(self):
        if self.max_range <= 0:
            raise ValueError("max_range must be > 0")
        dirs = np.asarray(self.directions, float).reshape(-1, 3)
        norms = np.linalg.norm(dirs, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("all ray directions must be unit-norm")
        self.directions = dirs


@dataclass
class SensorPose:
    """Sensor position and a proper rotation mapping sensor frame to world."""

    position: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, float).reshape(3)
        r = np.asarray(self.rotation, float).reshape(3, 3)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9) or not math.isclose(np.linalg.det(r), 1.0, abs_tol=1e-9):
            raise ValueError("rotation must be a proper rotation matrix")
        self.rotation = r


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ray_hit_times(origin: np.ndarray, dirs: np.ndarray, boxes: np.ndarray,
                   ground_z: float) -> np.ndarray:
    """Per-ray parameter t of the nearest surface hit (inf when nothing ahead)."""
    n_rays = dirs.shape[0]
    t_best = np.full(n_rays, np.inf)

    if boxes.shape[0] > 0:
        lo = boxes[:, 0:3][None, :, :]          # (1, B, 3)
        hi = boxes[:, 3:6][None, :, :]
        d = dirs[:, None, :]                    # (R, 1, 3)
        o = origin[None, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - o) / d
            t2 = (hi - o) / d
        near_ax = np.minimum(t1, t2)
        far_ax = np.maximum(t1, t2)
        # Zero direction components: constrain to the slab only through the
        # inside/outside test (NaNs from 0/0 are overwritten here).
        zero = np.broadcast_to(d == 0.0, near_ax.shape)
        inside = np.broadcast_to((o >= lo) & (o <= hi), near_ax.shape)
        near_ax = np.where(zero, np.where(inside, -np.inf, np.inf), near_ax)
        far_ax = np.where(zero, np.where(inside, np.inf, -np.inf), far_ax)
        tnear = near_ax.max(axis=2)             # (R, B)
        tfar = far_ax.min(axis=2)
        t_hit = np.where(tnear >= 0.0, tnear, tfar)  # from inside: exit face
        t_hit = np.where((tnear <= tfar) & (t_hit >= 0.0), t_hit, np.inf)
        t_best = t_hit.min(axis=1)

    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = (ground_z - origin[2]) / dz
    t_ground = np.where((dz != 0.0) & (t_ground >= 0.0), t_ground, np.inf)
    return np.minimum(t_best, t_ground)


def cast_ray(scene: Scene, origin, direction, max_range: float) -> np.ndarray | None:
    """Nearest intersection of one ray with any box face or the ground plane.

    Returns the hit point, or None when nothing lies within max_range.
    """
    origin = np.asarray(origin, float).reshape(3)
    direction = np.asarray(direction, float).reshape(3)
    if not math.isclose(np.linalg.norm(direction), 1.0, abs_tol=1e-9):
        raise ValueError("direction must be unit-norm")
    t = _ray_hit_times(origin, direction[None, :], scene.box_array(), scene.ground_z)[0]
    if t > max_range:
        return None
    return origin + t * direction


def lidar_hits(scene: Scene, pose: SensorPose, cfg: LidarConfig) -> np.ndarray:
    """Surface hit points of the whole lattice from the given pose, (K, 3)."""
    world_dirs = cfg.directions @ pose.rotation.T
    t = _ray_hit_times(pose.position, world_dirs, scene.box_array(), scene.ground_z)
    mask = t <= cfg.max_range
    return pose.position[None, :] + t[mask, None] * world_dirs[mask]


def sense_and_update(scene: Scene, grid: OccupancyGrid, pose: SensorPose,
                     cfg: LidarConfig) -> OccupancyGrid:
    """New grid snapshot with the cells containing this scan's hits occupied.

    Only hit cells change; hits outside coverage are discarded. Cells crossed
    by a ray before its hit are left as they are (static scenes, free by
    default), so the occupied set only ever grows.
    """
    if not grid.spec.contains(pose.position):
        raise ValueError("sensor pose is outside grid coverage")
    hits = lidar_hits(scene, pose, cfg)
    out = grid.copy()
    if hits.shape[0]:
        idx, inside = grid.spec.indices_of(hits)
        idx = idx[inside]
        if idx.shape[0]:
            out.cells[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return out


def rasterize_surfaces(scene: Scene, spec: GridSpec,
                       include_ground: bool = False) -> OccupancyGrid:
    """Grid with every cell containing box-face surface marked occupied.

    Ground-truth stand-in for an exhaustive sensing pass: face rectangles are
    rasterized directly (half-open cell mapping), interiors stay free. Useful
    for scripted full-coverage scenarios and oracle checks.
    """
    grid = OccupancyGrid(spec)
    origin = spec.origin
    res = np.asarray(spec.resolution)
    dims = spec.dims

    def axis_cells(lo, hi, k):
        # Cells whose half-open interval intersects [lo, hi] on axis k.
        i0 = int(math.floor((lo - origin[k]) / res[k]))
        i1 = int(math.floor((hi - origin[k]) / res[k]))
        if (hi - origin[k]) / res[k] == i1 and i1 > i0:
            i1 -= 1  # half-open: a face ending exactly on a boundary stays below
        return max(i0, 0), min(i1, dims[k] - 1)

    for box in scene.boxes:
        for k in range(3):
            u, v = (k + 1) % 3, (k + 2) % 3
            u0, u1 = axis_cells(box.lo[u], box.hi[u], u)
            v0, v1 = axis_cells(box.lo[v], box.hi[v], v)
            if u0 > u1 or v0 > v1:
                continue
            for face_val in (box.lo[k], box.hi[k]):
                fk = int(math.floor((face_val - origin[k]) / res[k]))
                if not 0 <= fk < dims[k]:
                    continue
                sel = [None, None, None]
                sel[k] = slice(fk, fk + 1)
                sel[u] = slice(u0, u1 + 1)
                sel[v] = slice(v0, v1 + 1)
                grid.cells[tuple(sel)] = True
    if include_ground:
        gz = int(math.floor((scene.ground_z - origin[2]) / res[2]))
        if 0 <= gz < dims[2]:
            grid.cells[:, :, gz] = True
    return grid
