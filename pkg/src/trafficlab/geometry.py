"""Planar geometry helpers: angle wrapping, frame transforms, boxes, polylines.

Conventions used across the package:
  * headings are radians, wrapped to (-pi, pi]
  * poses are (x, y, heading) in meters / radians
  * oriented boxes have `length` along the heading axis and `width` across it
"""

import numpy as np

from .errors import GeometryError

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into (-pi, pi].

    Idempotent, and maps -pi to +pi so the interval is half-open on the left.
    """
    m = np.mod(theta, TWO_PI)  # [0, 2pi)
    out = np.where(m > np.pi, m - TWO_PI, m)
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(out)
    return out


def angle_diff(a, b):
    """Smallest signed difference a - b, wrapped to (-pi, pi]."""
    return wrap_angle(np.asarray(a) - np.asarray(b))


def rot2(theta):
    """2x2 rotation matrix (column-vector convention)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def world_from_ego(points, frame):
    """Map points from the frame of `frame` = (x, y, heading) into world coords.

    Args:
        points: array (..., 2) in the local frame.
        frame: (x, y, heading) of the local frame's origin in world coords.

    Returns:
        array (..., 2) of world coordinates.
    """
    x, y, th = frame
    pts = np.asarray(points, dtype=float)
    return pts @ rot2(th).T + np.array([x, y])


def ego_from_world(points, frame):
    """Inverse of world_from_ego: express world points in the local frame."""
    x, y, th = frame
    pts = np.asarray(points, dtype=float) - np.array([x, y])
    return pts @ rot2(th)  # R(-th) applied on the left == right-multiply by R(th)


def pose_in_frame(pose, frame):
    """Express a world pose (x, y, heading) in the given frame."""
    p = ego_from_world(np.asarray(pose[:2], dtype=float), frame)
    return np.array([p[0], p[1], wrap_angle(pose[2] - frame[2])])


def ego_rel(state, ego):
    """(x, y, heading) of one agent state expressed in another's frame.

    Accepts any objects exposing x, y, heading attributes.
    """
    dx = state.x - ego.x
    dy = state.y - ego.y
    c, s = np.cos(ego.heading), np.sin(ego.heading)
    return np.array(
        [dx * c + dy * s, -dx * s + dy * c, wrap_angle(state.heading - ego.heading)]
    )


def box_corners(x, y, heading, length, width):
    """Corners of an oriented box, counter-clockwise starting front-left.

    Accepts scalars or equal-shaped arrays; returns (..., 4, 2).
    """
    x = np.asarray(x, dtype=float)
    hl, hw = np.asarray(length, dtype=float) / 2.0, np.asarray(width, dtype=float) / 2.0
    local = np.stack(
        [
            np.stack([hl, hw], axis=-1),
            np.stack([-hl, hw], axis=-1),
            np.stack([-hl, -hw], axis=-1),
            np.stack([hl, -hw], axis=-1),
        ],
        axis=-2,
    )  # (..., 4, 2)
    c, s = np.cos(heading), np.sin(heading)
    rx = local[..., 0] * c[..., None] - local[..., 1] * s[..., None]
    ry = local[..., 0] * s[..., None] + local[..., 1] * c[..., None]
    out = np.stack([rx, ry], axis=-1)
    out[..., 0] += np.asarray(x, dtype=float)[..., None]
    out[..., 1] += np.asarray(y, dtype=float)[..., None]
    return out


def boxes_overlap(corners_a, corners_b):
    """Separating-axis overlap test for two convex quads given as (4, 2) corners.

    Touching boxes (zero-width overlap on some axis) count as overlapping.
    """
    for quad in (corners_a, corners_b):
        edges = np.roll(quad, -1, axis=0) - quad
        # outward normal of each edge; only direction matters
        axes = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        pa = corners_a @ axes.T  # (4, 4) projections
        pb = corners_b @ axes.T
        if np.any(pa.max(axis=0) < pb.min(axis=0)) or np.any(pb.max(axis=0) < pa.min(axis=0)):
            return False
    return True


class Polyline:
    """A 2-D polyline with cached arc length, projection, and interpolation."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise GeometryError("polyline needs an (N, 2) array with N >= 2")
        seg = np.diff(pts, axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seglen <= 0.0):
            raise GeometryError("polyline has a zero-length segment")
        self.points = pts
        self._seg = seg
        self._seglen = seglen
        self.cumlen = np.concatenate([[0.0], np.cumsum(seglen)])
        self.length = float(self.cumlen[-1])

    def point_at(self, s):
        """Point and tangent heading at arc length s (clamped to the ends)."""
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.clip(np.searchsorted(self.cumlen, s, side="right") - 1, 0, len(self._seg) - 1))
        t = (s - self.cumlen[i]) / self._seglen[i]
        p = self.points[i] + t * self._seg[i]
        heading = np.arctan2(self._seg[i, 1], self._seg[i, 0])
        return p[0], p[1], heading

    def project(self, x, y):
        """Project a point onto the polyline.

        Returns:
            (s, lateral, heading): arc length of the foot point, signed lateral
            offset (positive to the left of travel), and tangent heading there.
        """
        p = np.array([x, y])
        rel = p - self.points[:-1]  # (N-1, 2)
        t = np.clip(np.einsum("ij,ij->i", rel, self._seg) / self._seglen**2, 0.0, 1.0)
        foot = self.points[:-1] + t[:, None] * self._seg
        d2 = np.sum((p - foot) ** 2, axis=1)
        i = int(np.argmin(d2))
        s = self.cumlen[i] + t[i] * self._seglen[i]
        tang = self._seg[i] / self._seglen[i]
        lateral = tang[0] * (p[1] - foot[i, 1]) - tang[1] * (p[0] - foot[i, 0])
        return float(s), float(lateral), float(np.arctan2(tang[1], tang[0]))

    def resample(self, ds):
        """Points sampled every ds meters of arc length (endpoints included)."""
        if ds <= 0:
            raise GeometryError("resample step must be positive")
        n = max(2, int(np.ceil(self.length / ds)) + 1)
        ss = np.linspace(0.0, self.length, n)
        return np.array([self.point_at(s)[:2] for s in ss])


def arc_polyline(cx, cy, radius, theta0, theta1, n=None):
    """Polyline along a circular arc, counter-clockwise if theta1 > theta0."""
    if radius <= 0:
        raise GeometryError("arc radius must be positive")
    if n is None:
        n = max(8, int(np.ceil(abs(theta1 - theta0) * radius / 0.5)))
    th = np.linspace(theta0, theta1, n)
    return np.stack([cx + radius * np.cos(th), cy + radius * np.sin(th)], axis=1)
