"""Procedural lane-graph construction for three road layouts.

Kinds and parameters (lane_width must lie in [3, 4] meters):
  * straight:  length, lanes, lane_width - parallel same-direction lanes
  * arc:       radius (>= 15), span, lanes, lane_width - curved road
  * four_way:  arm_length, lane_width - unsignalized crossing, one lane per
               direction per road, with through / left / right movements

Lane graphs are deterministic functions of the spec; the seed is carried in
the map id so downstream consumers can key caches on it.
"""

import hashlib
import json

import numpy as np
from shapely.geometry import LineString, Polygon, box
from shapely.ops import unary_union

from ..errors import MapError
from ..geometry import Polyline, arc_polyline, rot2, wrap_angle
from .types import LaneGraph, Route, SpawnPoint

SPAWN_SETBACK = 1.0  # meters from the route start to the spawn pose


def map_spec(kind, params, seed=0):
    return {"kind": kind, "params": dict(params), "seed": int(seed)}


def map_id_of(spec):
    blob = json.dumps(spec, sort_keys=True).encode()
    return f"{spec['kind']}-{hashlib.sha1(blob).hexdigest()[:8]}"


def _check_lane_width(w):
    if not 3.0 <= w <= 4.0:
        raise MapError(f"lane width {w} outside [3, 4] m")


def _dedupe(points):
    pts = np.asarray(points, float)
    keep = [0]
    for i in range(1, len(pts)):
        if np.hypot(*(pts[i] - pts[keep[-1]])) > 1e-9:
            keep.append(i)
    return pts[keep]


def _spawn_for(route_lines, heading_of_first):
    x, y, th = route_lines[0].point_at(SPAWN_SETBACK)
    return x, y, th


def _straight(params):
    L = float(params.get("length", 200.0))
    n = int(params.get("lanes", 2))
    w = float(params.get("lane_width", 3.5))
    _check_lane_width(w)
    if L < 30 or n < 1:
        raise MapError("straight map needs length >= 30 and lanes >= 1")
    centerlines, routes, spawns = [], {}, []
    for i in range(n):
        y = (i - (n - 1) / 2.0) * w
        line = Polyline([[0.0, y], [L, y]])
        centerlines.append(line)
        rid = f"lane{i}"
        routes[rid] = Route(rid, line, "lane")
        x0, y0, th0 = line.point_at(SPAWN_SETBACK)
        spawns.append(SpawnPoint(x0, y0, th0, (rid,)))
    drivable = box(0.0, -n * w / 2.0, L, n * w / 2.0)
    return centerlines, drivable, spawns, routes


def _arc(params):
    R = float(params.get("radius", 40.0))
    span = float(params.get("span", np.pi / 2))
    n = int(params.get("lanes", 2))
    w = float(params.get("lane_width", 3.5))
    _check_lane_width(w)
    if R < 15.0:
        raise MapError("arc radius must be >= 15 m")
    if not 0.3 <= span <= 2 * np.pi:
        raise MapError("arc span out of range")
    if R - n * w / 2.0 <= 2.0:
        raise MapError("arc too tight for the requested lane count")
    centerlines, routes, spawns = [], {}, []
    for i in range(n):
        r = R + (i - (n - 1) / 2.0) * w
        line = Polyline(arc_polyline(0.0, 0.0, r, 0.0, span))
        centerlines.append(line)
        rid = f"lane{i}"
        routes[rid] = Route(rid, line, "lane")
        x0, y0, th0 = line.point_at(SPAWN_SETBACK)
        spawns.append(SpawnPoint(x0, y0, th0, (rid,)))
    outer = arc_polyline(0.0, 0.0, R + n * w / 2.0, 0.0, span)
    inner = arc_polyline(0.0, 0.0, R - n * w / 2.0, 0.0, span)
    drivable = Polygon(np.concatenate([outer, inner[::-1]]))
    return centerlines, drivable, spawns, routes


def _four_way(params):
    A = float(params.get("arm_length", 60.0))
    w = float(params.get("lane_width", 3.5))
    _check_lane_width(w)
    if A < 6 * w:
        raise MapError("four-way arms too short for the turn geometry")
    hw = w / 2.0
    # base approach: eastbound along y = -hw, entering from x = -A
    through = [[-A, -hw], [A, -hw]]
    right = np.concatenate(
        [
            [[-A, -hw]],
            arc_polyline(-w, -w, hw, np.pi / 2, 0.0),  # quarter turn, radius w/2
            [[-hw, -A]],
        ]
    )
    left = np.concatenate(
        [
            [[-A, -hw]],
            arc_polyline(-w, w, 1.5 * w, -np.pi / 2, 0.0),  # radius 1.5 w
            [[hw, A]],
        ]
    )
    base = {"through": np.asarray(through, float), "right": right, "left": left}
    routes, spawns = {}, []
    for k in range(4):
        R = rot2(k * np.pi / 2)
        ids = []
        for kind, pts in base.items():
            rid = f"a{k}_{kind}"
            routes[rid] = Route(rid, Polyline(_dedupe(pts @ R.T)), kind)
            ids.append(rid)
        x0, y0, th0 = routes[f"a{k}_through"].line.point_at(SPAWN_SETBACK)
        spawns.append(SpawnPoint(x0, y0, th0, tuple(ids)))
    # centerlines: the four full straight lane lines (one per direction)
    centerlines = []
    for k in range(4):
        R = rot2(k * np.pi / 2)
        centerlines.append(Polyline(np.asarray(through, float) @ R.T))
    # corner pockets: turning paths buffered by half a lane, so tracked turns
    # (including mild corner cutting) stay on the drivable surface
    pockets = [
        LineString(r.line.points).buffer(0.75 * w, quad_segs=8)
        for r in routes.values()
        if r.kind in ("left", "right")
    ]
    drivable = unary_union([box(-A, -w, A, w), box(-w, -A, w, A)] + pockets)
    return centerlines, drivable, spawns, routes


_BUILDERS = {"straight": _straight, "arc": _arc, "four_way": _four_way}


def gen_map(spec):
    """Build the LaneGraph described by a map spec dict."""
    kind = spec.get("kind")
    if kind not in _BUILDERS:
        raise MapError(f"unknown map kind {kind!r}")
    centerlines, drivable, spawns, routes = _BUILDERS[kind](spec.get("params", {}))
    yield_zone = None
    if kind == "four_way":
        w = float(spec.get("params", {}).get("lane_width", 3.5))
        yield_zone = (0.0, 0.0, 2.2 * w)
    graph = LaneGraph(
        map_id=map_id_of(spec),
        centerlines=centerlines,
        drivable=drivable,
        spawn_points=spawns,
        routes=routes,
        bounds=tuple(drivable.bounds),
        yield_zone=yield_zone,
    )
    _validate_graph(graph)
    return graph


def _validate_graph(graph):
    import shapely

    for line in graph.centerlines:
        pts = line.resample(2.0)
        near = shapely.dwithin(graph.drivable, shapely.points(pts), 1e-6)
        if not np.all(near):
            raise MapError(f"centerline leaves the drivable area in {graph.map_id}")
    for sp in graph.spawn_points:
        if not graph.contains([sp.x], [sp.y])[0]:
            raise MapError(f"spawn point off the drivable area in {graph.map_id}")
        if abs(wrap_angle(sp.heading)) > np.pi:
            raise MapError("bad spawn heading")
