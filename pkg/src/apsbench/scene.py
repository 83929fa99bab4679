"""Urban scene synthesis: block-grid maps, binary rasters, endpoints, condition images.

Coordinates are in meters with the origin at the top-left corner of the scene;
x grows with the raster column index and y with the row index.  Everything here
is a pure function of its inputs and seeds, so repeated calls are bit-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import MapGenError, SamplingError, SceneError


@dataclass(frozen=True)
class UrbanMap:
    """Equal-height urban layout made of axis-aligned building rectangles."""

    id: int
    width_m: float
    height_m: float
    resolution_m: float
    buildings: tuple[tuple[float, float, float, float], ...]

    @property
    def native_shape(self) -> tuple[int, int]:
        """(H, W) pixel counts implied by the map's own resolution."""
        return (int(round(self.height_m / self.resolution_m)),
                int(round(self.width_m / self.resolution_m)))


@dataclass(frozen=True)
class Raster:
    """Binary occupancy grid; 1 = building, 0 = free."""

    cells: np.ndarray

    @property
    def H(self) -> int:
        return self.cells.shape[0]

    @property
    def W(self) -> int:
        return self.cells.shape[1]


@dataclass(frozen=True)
class Endpoint:
    x: float
    y: float


@dataclass(frozen=True)
class HeatmapConfig:
    sigma_px: float = 2.0

    def __post_init__(self):
        if not self.sigma_px > 0:
            raise ValueError("sigma_px must be positive")


@dataclass(frozen=True)
class ConditionImage:
    """3xHxW stack: building raster, Tx heatmap, Rx heatmap."""

    channels: np.ndarray


@dataclass(frozen=True)
class MapGenParams:
    """Manhattan block-grid generator settings (distances in meters)."""

    width_m: float = 512.0
    height_m: float = 512.0
    resolution_m: float = 2.0
    block_m: float = 38.0
    street_m: float = 26.0
    drop_prob: float = 0.5
    size_jitter: float = 0.25
    min_free_fraction: float = 0.30


def generate_map(seed: int, params: MapGenParams = MapGenParams(), map_id: int = 0) -> UrbanMap:
    """Drop rectangular buildings on a street grid; deterministic in (seed, params).

    Each grid cell hosts at most one building; a cell is left empty with
    probability ``drop_prob`` and occupied footprints are jittered in size and
    position inside the cell so maps are not perfectly periodic.
    """
    rng = np.random.default_rng(seed)
    pitch = params.block_m + params.street_m
    margin = params.street_m / 2.0
    nx = int((params.width_m - params.street_m) // pitch)
    ny = int((params.height_m - params.street_m) // pitch)
    buildings = []
    for iy in range(ny):
        for ix in range(nx):
            if rng.random() < params.drop_prob:
                continue
            bw = params.block_m * (1.0 - params.size_jitter * rng.random())
            bh = params.block_m * (1.0 - params.size_jitter * rng.random())
            ox = rng.random() * (params.block_m - bw)
            oy = rng.random() * (params.block_m - bh)
            x0 = margin + ix * pitch + ox
            y0 = margin + iy * pitch + oy
            buildings.append((x0, y0, x0 + bw, y0 + bh))
    m = UrbanMap(id=map_id, width_m=params.width_m, height_m=params.height_m,
                 resolution_m=params.resolution_m, buildings=tuple(buildings))
    ff = free_fraction(m)
    if ff < params.min_free_fraction:
        raise MapGenError(
            f"free-area fraction {ff:.4f} violates the >= {params.min_free_fraction} invariant "
            f"(seed={seed}, map_id={map_id})")
    return m


def rasterize(m: UrbanMap, H: int, W: int) -> Raster:
    """Pixel-center containment rasterization onto an HxW grid.

    A pixel is marked 1 iff its center falls inside some building rectangle;
    containment is half-open ([x0, x1) x [y0, y1)) so pixel-aligned rectangles
    rasterize to exactly their area.
    """
    if H < 1 or W < 1:
        raise SceneError("raster must have at least one pixel per axis")
    sx = m.width_m / W
    sy = m.height_m / H
    if abs(sx - sy) > 1e-9:
        raise SceneError(f"non-square pixels: {sx} x {sy} m (H,W inconsistent with map extent)")
    xs = (np.arange(W) + 0.5) * sx
    ys = (np.arange(H) + 0.5) * sy
    cells = np.zeros((H, W), dtype=np.uint8)
    for x0, y0, x1, y1 in m.buildings:
        cx = (xs >= x0) & (xs < x1)
        cy = (ys >= y0) & (ys < y1)
        cells[np.ix_(cy, cx)] = 1
    return Raster(cells=cells)


def free_fraction(m: UrbanMap) -> float:
    """Outdoor area fraction, measured by pixel-counting the native raster."""
    H, W = m.native_shape
    r = rasterize(m, H, W)
    return 1.0 - float(r.cells.sum()) / float(H * W)


def _cell_of(x: float, y: float, resolution_m: float, H: int, W: int) -> tuple[int, int]:
    c = min(int(x / resolution_m), W - 1)
    r = min(int(y / resolution_m), H - 1)
    return r, c


def sample_endpoints(m: UrbanMap, n_tx: int, n_rx: int, seed: int,
                     max_tries: int = 1000) -> tuple[list[Endpoint], list[Endpoint]]:
    """Rejection-sample outdoor Tx/Rx positions; deterministic in (map, seed).

    A draw is accepted only if its raster cell is free and the point is not
    inside any building rectangle (cells straddling a building edge count as
    free by the pixel-center rule, but points under the overhang would break
    the tracer's free-space precondition).
    """
    H, W = m.native_shape
    r = rasterize(m, H, W)
    if int(r.cells.sum()) == H * W:
        raise SamplingError("map has no free cells")
    rng = np.random.default_rng(seed)

    def draw() -> Endpoint:
        for _ in range(max_tries):
            x = rng.random() * m.width_m
            y = rng.random() * m.height_m
            row, col = _cell_of(x, y, m.resolution_m, H, W)
            if r.cells[row, col]:
                continue
            if any(x0 <= x <= x1 and y0 <= y <= y1 for x0, y0, x1, y1 in m.buildings):
                continue
            return Endpoint(x, y)
        raise SamplingError(f"retry budget ({max_tries}) exhausted while sampling an endpoint")

    tx = [draw() for _ in range(n_tx)]
    rx = [draw() for _ in range(n_rx)]
    return tx, rx


def gaussian_heatmap(p: Endpoint, cfg: HeatmapConfig, H: int, W: int,
                     resolution_m: float) -> np.ndarray:
    """Peak-normalized Gaussian bump centered at ``p``, distances in pixels.

    The maximum pixel is renormalized to exactly 1, so the endpoint location
    stays recoverable by argmax; far tails are clamped to a tiny positive
    floor where the exponential would underflow to zero.
    """
    if not (0.0 <= p.x <= W * resolution_m and 0.0 <= p.y <= H * resolution_m):
        raise SceneError(f"endpoint ({p.x}, {p.y}) outside the scene")
    px = p.x / resolution_m
    py = p.y / resolution_m
    cols = np.arange(W) + 0.5
    rows = np.arange(H) + 0.5
    d2 = (cols[None, :] - px) ** 2 + (rows[:, None] - py) ** 2
    g = np.exp(-d2 / (2.0 * cfg.sigma_px ** 2))
    return np.clip(g / g.max(), 1e-30, None)


def build_condition(raster: Raster, tx: Endpoint, rx: Endpoint, cfg: HeatmapConfig,
                    resolution_m: float) -> ConditionImage:
    """Stack [building raster; Tx heatmap; Rx heatmap] as a 3xHxW float image."""
    H, W = raster.H, raster.W
    for name, p in (("tx", tx), ("rx", rx)):
        row, col = _cell_of(p.x, p.y, resolution_m, H, W)
        if raster.cells[row, col]:
            raise SceneError(f"{name} endpoint ({p.x}, {p.y}) lies inside a building cell")
    ch0 = raster.cells.astype(np.float32)
    ch1 = gaussian_heatmap(tx, cfg, H, W, resolution_m).astype(np.float32)
    ch2 = gaussian_heatmap(rx, cfg, H, W, resolution_m).astype(np.float32)
    return ConditionImage(channels=np.stack([ch0, ch1, ch2]))


# ---------------------------------------------------------------- persistence

def save_map(path, m: UrbanMap) -> None:
    doc = {
        "id": m.id,
        "width_m": m.width_m,
        "height_m": m.height_m,
        "resolution_m": m.resolution_m,
        "buildings": [list(b) for b in m.buildings],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_map(path) -> UrbanMap:
    with open(path) as f:
        doc = json.load(f)
    return UrbanMap(id=int(doc["id"]), width_m=float(doc["width_m"]),
                    height_m=float(doc["height_m"]), resolution_m=float(doc["resolution_m"]),
                    buildings=tuple(tuple(float(v) for v in b) for b in doc["buildings"]))


def write_pgm(path, raster: Raster) -> None:
    """Binary PGM (P5, maxval 255); building pixels are 255, free pixels 0."""
    data = (raster.cells.astype(np.uint8) * 255).tobytes()
    with open(path, "wb") as f:
        f.write(f"P5\n{raster.W} {raster.H}\n255\n".encode("ascii"))
        f.write(data)


def read_pgm(path) -> Raster:
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(b"P5"):
        raise SceneError(f"{path}: not a binary PGM (P5) file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(blob[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise SceneError(f"{path}: expected maxval 255, got {maxval}")
    cells = np.frombuffer(blob[pos:pos + w * h], dtype=np.uint8).reshape(h, w)
    return Raster(cells=(cells > 0).astype(np.uint8))
