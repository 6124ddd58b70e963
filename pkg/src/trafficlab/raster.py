"""Rasterization: map-aligned semantic grids and ego-centered context stacks.

Grid conventions:
  * map grids are axis-aligned; pixel (row, col) has its center at world
    (origin_x + col * ps, origin_y + row * ps), so world<->pixel is invertible
  * ego rasters are heading-aligned with the ego at the window center; column
    c maps to ego-frame x = (c - (size-1)/2) * ps, row r to ego-frame y

Channel layout of a context tensor (4 semantic + history + 1 occupancy):
  0 drivable, 1 centerlines, 2..3 lane direction as (1 + cos)/2, (1 + sin)/2,
  4..4+h occupancy frames oldest to newest (the last one is the current step).
"""

from dataclasses import dataclass

import numpy as np
import shapely

from .errors import GeometryError
from .geometry import box_corners, ego_rel, rot2
from .nn.layers import bilinear_weights, roi_sample_grid
from .world.mapgen import gen_map
from .world.types import LaneGraph


@dataclass
class SemanticGrid:
    """Map-aligned raster of the static road layout."""

    layers: np.ndarray  # (4, H, W) float
    origin: tuple       # world (x, y) of pixel (0, 0) center
    pixel_size: float
    map_id: str

    @property
    def shape(self):
        return self.layers.shape[1:]

    def world_to_pixel(self, xs, ys):
        """Continuous (col, row) pixel coordinates of world points."""
        cols = (np.asarray(xs, float) - self.origin[0]) / self.pixel_size
        rows = (np.asarray(ys, float) - self.origin[1]) / self.pixel_size
        return cols, rows

    def drivable_at(self, xs, ys):
        """Nearest-pixel drivable lookup; points off the grid count offroad."""
        cols, rows = self.world_to_pixel(xs, ys)
        r = np.rint(rows).astype(int)
        c = np.rint(cols).astype(int)
        H, W = self.shape
        ok = (r >= 0) & (r < H) & (c >= 0) & (c < W)
        out = np.zeros(np.shape(ok), dtype=bool)
        out[ok] = self.layers[0, r[ok], c[ok]] > 0.5
        return out


@dataclass
class DistanceMap:
    """Manhattan pixel distance to the nearest drivable cell, saturated."""

    cells: np.ndarray   # (H, W) int
    saturation: int
    origin: tuple
    pixel_size: float


@dataclass
class RasterContext:
    """Ego-centered context stack plus the agents visible in the window."""

    channels: np.ndarray  # (4 + h + 1, size, size) float
    ego: object           # AgentState at the anchor step
    neighbors: list       # AgentStates at the anchor step, sorted by id
    t: int


def build_semantic_grid(graph: LaneGraph, pixel_size=0.5, pad=4.0):
    """Rasterize a lane graph into the 4 static semantic layers."""
    xmin, ymin, xmax, ymax = graph.bounds
    x0, y0 = xmin - pad, ymin - pad
    W = int(np.ceil((xmax + pad - x0) / pixel_size)) + 1
    H = int(np.ceil((ymax + pad - y0) / pixel_size)) + 1
    layers = np.zeros((4, H, W))
    cols, rows = np.meshgrid(np.arange(W), np.arange(H))
    px = x0 + cols * pixel_size
    py = y0 + rows * pixel_size
    layers[0] = shapely.intersects_xy(graph.drivable, px, py).astype(float)
    for line in graph.centerlines:
        ss = np.arange(0.0, line.length + pixel_size / 4, pixel_size / 2)
        for s in ss:
            x, y, th = line.point_at(s)
            r = int(round((y - y0) / pixel_size))
            c = int(round((x - x0) / pixel_size))
            if 0 <= r < H and 0 <= c < W:
                layers[1, r, c] = 1.0
                layers[2, r, c] = (1.0 + np.cos(th)) / 2.0
                layers[3, r, c] = (1.0 + np.sin(th)) / 2.0
    return SemanticGrid(layers, (x0, y0), pixel_size, graph.map_id)


def distance_map(drivable, saturation=20, origin=(0.0, 0.0), pixel_size=1.0):
    """Saturated 4-connected distance transform via repeated min-updates.

    Each sweep relaxes every cell against its neighbors plus one; `saturation`
    sweeps make every distance up to the saturation value exact.
    """
    if saturation < 1:
        raise GeometryError("saturation must be >= 1")
    drivable = np.asarray(drivable, dtype=bool)
    x = np.where(drivable, 0, saturation).astype(np.int64)
    for _ in range(saturation):
        p = np.pad(x, 1, constant_values=saturation)
        best = np.minimum(
            np.minimum(p[:-2, 1:-1], p[2:, 1:-1]),
            np.minimum(p[1:-1, :-2], p[1:-1, 2:]),
        )
        np.minimum(x, best + 1, out=x)
    return DistanceMap(x, int(saturation), tuple(origin), float(pixel_size))


def roi_crop(grid, centers, headings, window_px, n=7):
    """Oriented bilinear crops of a plain (H, W) grid.

    Args:
        grid: (H, W) array.
        centers: (2,) or (N, 2) pixel coordinates (col, row) of window centers.
        headings: scalar or (N,) window rotations.
        window_px: (wx, wy) window extent in pixels.
        n: samples per side.

    Returns:
        (n, n) for a single center, else (N, n, n).
    """
    grid = np.asarray(grid, float)
    H, W = grid.shape
    centers_arr = np.atleast_2d(np.asarray(centers, float))
    headings_arr = np.atleast_1d(np.asarray(headings, float))
    out = np.empty((len(centers_arr), n, n))
    for i, (ctr, th) in enumerate(zip(centers_arr, headings_arr)):
        cc, rr = roi_sample_grid(ctr, th, window_px, n)
        (r0, c0, r1, c1), (w00, w01, w10, w11) = bilinear_weights(cc, rr, H, W)
        out[i] = (
            grid[r0, c0] * w00 + grid[r0, c1] * w01 + grid[r1, c0] * w10 + grid[r1, c1] * w11
        )
    if np.ndim(centers) == 1:
        return out[0]
    return out


def _fill_box(frame, center_px, rel_heading, length_px, width_px):
    """Mark pixels whose centers fall in an oriented half-open box."""
    size = frame.shape[0]
    cx, cy = center_px
    reach = 0.5 * np.hypot(length_px, width_px)
    c_lo = max(0, int(np.floor(cx - reach)))
    c_hi = min(size - 1, int(np.ceil(cx + reach)))
    r_lo = max(0, int(np.floor(cy - reach)))
    r_hi = min(size - 1, int(np.ceil(cy + reach)))
    if c_lo > c_hi or r_lo > r_hi:
        return
    cols, rows = np.meshgrid(np.arange(c_lo, c_hi + 1), np.arange(r_lo, r_hi + 1))
    dx = cols - cx
    dy = rows - cy
    c, s = np.cos(rel_heading), np.sin(rel_heading)
    lon = dx * c + dy * s
    lat = -dx * s + dy * c
    hit = (
        (lon >= -length_px / 2) & (lon < length_px / 2)
        & (lat >= -width_px / 2) & (lat < width_px / 2)
    )
    frame[rows[hit], cols[hit]] = 1.0


def rasterize_context(steps, ego_id, t, grid: SemanticGrid, cfg):
    """Build the ego-centered context stack for agent `ego_id` at step `t`.

    Args:
        steps: sequence of dict agent_id -> AgentState (a SceneLog's steps or
            a rollout's state buffer).
        grid: the map-aligned SemanticGrid.
        cfg: RasterConfig.

    Returns:
        RasterContext; occupancy frames cover steps t - history .. t, oldest
        first, and frames before the start of `steps` are left empty.
    """
    size, ps, h = cfg.size_px, cfg.pixel_size, cfg.history
    ego = steps[t][ego_id]
    center = (size - 1) / 2.0
    out = np.zeros((4 + h + 1, size, size))

    # static layers: sample the map grid at each ego-raster pixel center
    cols, rows = np.meshgrid(np.arange(size), np.arange(size))
    ex = (cols - center) * ps
    ey = (rows - center) * ps
    R = rot2(ego.heading)
    wx = ego.x + R[0, 0] * ex + R[0, 1] * ey
    wy = ego.y + R[1, 0] * ex + R[1, 1] * ey
    mc = np.rint((wx - grid.origin[0]) / grid.pixel_size).astype(int)
    mr = np.rint((wy - grid.origin[1]) / grid.pixel_size).astype(int)
    Hm, Wm = grid.shape
    ok = (mr >= 0) & (mr < Hm) & (mc >= 0) & (mc < Wm)
    for ch in range(4):
        out[ch][ok] = grid.layers[ch, mr[ok], mc[ok]]

    # occupancy history: all agents, boxes in the anchor-step ego frame
    half = size / 2.0
    for k in range(h + 1):
        tk = t - h + k
        if tk < 0 or tk >= len(steps):
            continue
        frame = out[4 + k]
        for aid in sorted(steps[tk]):
            st = steps[tk][aid]
            rel = ego_rel(st, ego)
            cx = center + rel[0] / ps
            cy = center + rel[1] / ps
            reach = 0.5 * np.hypot(st.length, st.width) / ps
            if cx + reach < 0 or cx - reach > size - 1 or cy + reach < 0 or cy - reach > size - 1:
                continue
            _fill_box(frame, (cx, cy), rel[2], st.length / ps, st.width / ps)

    # neighbors visible in the window at the anchor step, stable order
    neighbors = []
    for aid in sorted(steps[t]):
        if aid == ego_id:
            continue
        st = steps[t][aid]
        rel = ego_rel(st, ego)
        if abs(rel[0]) <= half * ps and abs(rel[1]) <= half * ps:
            neighbors.append(st)
    return RasterContext(out, ego, neighbors, t)


class MapStack:
    """A lane graph plus its rasters, built once per map spec and cached."""

    def __init__(self, graph, grid, dmap):
        self.graph = graph
        self.grid = grid
        self.dmap = dmap


_STACK_CACHE = {}


def build_map_stack(spec, raster_cfg, saturation=20):
    import json

    key = (json.dumps(spec, sort_keys=True), raster_cfg.map_pixel_size,
           raster_cfg.map_pad, saturation)
    if key not in _STACK_CACHE:
        graph = gen_map(spec)
        grid = build_semantic_grid(graph, raster_cfg.map_pixel_size, raster_cfg.map_pad)
        dmap = distance_map(grid.layers[0] > 0.5, saturation, grid.origin, grid.pixel_size)
        if len(_STACK_CACHE) > 16:
            _STACK_CACHE.clear()
        _STACK_CACHE[key] = MapStack(graph, grid, dmap)
    return _STACK_CACHE[key]
