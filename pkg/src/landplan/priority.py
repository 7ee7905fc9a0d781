"""2D landing-priority maps built from ground segmentation masks.

A mask marks valid landing regions with 1. The priority field is either the
mask itself (binary variant) or a box-filtered version whose window matches
the look-down camera footprint, so a cell's value approximates the fraction
of landable ground the camera would cover overhead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter


@dataclass
class GroundMask:
    """Binary landability labels on a regular 2D grid.

    cells is indexed [ix, iy]; origin is the world position of the (0, 0)
    cell corner; resolution is meters per cell (square cells).
    """

    cells: np.ndarray
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.ndim != 2:
            raise ValueError("mask cells must be 2D")
        if not np.isin(cells, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        self.cells = cells.astype(np.int8)
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    def mean(self) -> float:
        return float(self.cells.mean())


@dataclass
class PriorityMap:
    """Scalar field in [0, 1] over the same layout as GroundMask."""

    cells: np.ndarray
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        cells = np.asarray(self.cells, float)
        if cells.ndim != 2:
            raise ValueError("priority cells must be 2D")
        if cells.size and (cells.min() < -1e-12 or cells.max() > 1.0 + 1e-12):
            raise ValueError("priority values must lie in [0, 1]")
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        self.cells = np.clip(cells, 0.0, 1.0)
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @classmethod
    def uniform(cls, value: float, shape=(4, 4), resolution: float = 1.0,
                origin=(0.0, 0.0)) -> "PriorityMap":
        return cls(np.full(shape, float(value)), resolution, origin)

    def save_csv(self, path) -> None:
        np.savetxt(path, self.cells, delimiter=",", fmt="%.12g")


def binary_priority(mask: GroundMask) -> PriorityMap:
    """Mask copied verbatim as a real-valued priority field."""
    return PriorityMap(mask.cells.astype(float), mask.resolution, mask.origin)


def footprint_size(height: float, fov: float) -> float:
    """Side length of the look-down camera footprint: 2 * height * tan(fov/2)."""
    if height <= 0:
        raise ValueError("height must be > 0")
    if not 0 < fov < math.pi:
        raise ValueError("fov must be in (0, pi)")
    return 2.0 * height * math.tan(fov / 2.0)


def window_cells(window: float, resolution: float) -> int:
    """Window size in cells, rounded to the nearest odd count (at least 1)."""
    n = max(1, int(round(window / resolution)))
    return n if n % 2 == 1 else n + 1


def lpf_priority(mask: GroundMask, window: float) -> PriorityMap:
    """Box-filter moving average with a square window of `window` meters.

    The window is rounded to an odd cell count and borders are zero padded,
    treating off-map ground as non-landable.
    """
    if window <= 0:
        raise ValueError("window must be > 0")
    n = window_cells(window, mask.resolution)
    filtered = uniform_filter(mask.cells.astype(float), size=n, mode="constant", cval=0.0)
    return PriorityMap(np.clip(filtered, 0.0, 1.0), mask.resolution, mask.origin)


def sample_priority(pmap: PriorityMap, x: float, y: float, bilinear: bool = False) -> float:
    """Priority at a world point; 0 outside the map extent.

    Nearest-cell lookup by default (half-open cell intervals); bilinear
    interpolation between cell centers is available as an option.
    """
    nx, ny = pmap.cells.shape
    if not bilinear:
        ix = math.floor((x - pmap.origin[0]) / pmap.resolution)
        iy = math.floor((y - pmap.origin[1]) / pmap.resolution)
        if 0 <= ix < nx and 0 <= iy < ny:
            return float(pmap.cells[ix, iy])
        return 0.0
    u = (x - pmap.origin[0]) / pmap.resolution - 0.5
    v = (y - pmap.origin[1]) / pmap.resolution - 0.5
    i0, j0 = math.floor(u), math.floor(v)
    fu, fv = u - i0, v - j0
    total = 0.0
    for di, wu in ((0, 1.0 - fu), (1, fu)):
        for dj, wv in ((0, 1.0 - fv), (1, fv)):
            i, j = i0 + di, j0 + dj
            if 0 <= i < nx and 0 <= j < ny:
                total += wu * wv * float(pmap.cells[i, j])
    return total


def sample_priority_many(pmap: PriorityMap, xy: np.ndarray) -> np.ndarray:
    """Vectorized nearest-cell sampling for (N, 2) points; 0 outside."""
    xy = np.asarray(xy, float).reshape(-1, 2)
    ij = np.floor((xy - np.asarray(pmap.origin)) / pmap.resolution).astype(np.int64)
    nx, ny = pmap.cells.shape
    inside = (ij[:, 0] >= 0) & (ij[:, 0] < nx) & (ij[:, 1] >= 0) & (ij[:, 1] < ny)
    out = np.zeros(xy.shape[0])
    out[inside] = pmap.cells[ij[inside, 0], ij[inside, 1]]
    return out


def load_mask_csv(path, resolution: float, origin=(0.0, 0.0)) -> GroundMask:
    cells = np.loadtxt(path, delimiter=",", dtype=int)
    return GroundMask(np.atleast_2d(cells), resolution, origin)


def save_mask_csv(mask: GroundMask, path) -> None:
    np.savetxt(path, mask.cells, delimiter=",", fmt="%d")


def load_mask_pgm(path, resolution: float, origin=(0.0, 0.0)) -> GroundMask:
    """Read a P2 (ASCII) or P5 (binary) PGM file as a binary mask.

    Pixels above half the declared maxval count as landable. The image rows
    (top to bottom) map to the mask's second axis.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        # token scanner that skips whitespace and # comments
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if len(tokens) < 4 or tokens[0] not in (b"P2", b"P5"):
        raise ValueError(f"not a P2/P5 PGM file: {path}")
    magic = tokens[0]
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pos += 1  # single whitespace after maxval

    if magic == b"P5":
        itemsize = 1 if maxval < 256 else 2
        raw = np.frombuffer(data, dtype=(">u%d" % itemsize), count=width * height, offset=pos)
    else:
        raw = np.array(data[pos:].split()[: width * height], dtype=int)
    if raw.size != width * height:
        raise ValueError(f"PGM payload truncated: {path}")
    img = raw.reshape(height, width)
    cells = (img > maxval // 2).astype(np.int8).T
    return GroundMask(cells, resolution, origin)


def save_mask_pgm(mask: GroundMask, path) -> None:
    img = mask.cells.T.astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n1\n".encode()
    with open(path, "wb") as fh:
        fh.write(header + img.tobytes())
