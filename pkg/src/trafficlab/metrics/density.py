"""Spatial occupancy densities: Gaussian KDE profiles and map coverage.

A trial's trajectory distribution is summarized as a kernel density over a
coarse grid covering the map (2 m cells by default).  Profiles from repeated
trials feed coverage counts and pairwise transport distances.
"""

import numpy as np
from dataclasses import dataclass

from ..errors import MetricInputError

# kernel support radius in bandwidths; mass outside is dropped exactly
KERNEL_RADIUS_SIGMA = 3.0


@dataclass
class DensityProfile:
    """Non-negative mass per cell on a fixed coarse grid.

    origin is the world position of the center of cell (0, 0); cell is the
    edge length in meters.  normalized means the total mass is 1.
    """

    mass: np.ndarray          # (H, W) float64
    origin: tuple             # (x0, y0) of cell (0, 0) center
    cell: float
    normalized: bool = False

    @property
    def shape(self):
        return self.mass.shape

    def cell_centers(self):
        """World coordinates of every cell center, shape (H, W, 2)."""
        H, W = self.mass.shape
        xs = self.origin[0] + np.arange(W) * self.cell
        ys = self.origin[1] + np.arange(H) * self.cell
        return np.stack(np.meshgrid(xs, ys), axis=-1)

    def same_grid(self, other):
        return (self.mass.shape == other.mass.shape
                and abs(self.cell - other.cell) < 1e-9
                and abs(self.origin[0] - other.origin[0]) < 1e-9
                and abs(self.origin[1] - other.origin[1]) < 1e-9)


def density_grid(grid, cell):
    """Coarse grid spec (origin, shape) covering a semantic grid's extent."""
    ps = grid.pixel_size
    H, W = grid.shape
    rows = int(np.ceil(H * ps / cell))
    cols = int(np.ceil(W * ps / cell))
    x0 = grid.origin[0] - ps / 2 + cell / 2
    y0 = grid.origin[1] - ps / 2 + cell / 2
    return (x0, y0), (rows, cols)


def rollout_positions(rollout, start=None):
    """All agent (x, y) samples over the simulated span of a rollout.

    By default starts at rollout.t0, the frame where simulation takes over.
    Returns an (N, 2) array; N may be 0.
    """
    t0 = rollout.t0 if start is None else int(start)
    pts = [(st.x, st.y) for frame in rollout.steps[t0:] for st in frame.values()]
    if not pts:
        return np.zeros((0, 2))
    return np.array(pts, dtype=float)


def kde_density(positions, origin, shape, cell, bandwidth):
    """Gaussian kernel density of point samples, evaluated at cell centers.

    Isotropic kernel truncated at KERNEL_RADIUS_SIGMA bandwidths, so each
    sample's entire mass lands inside its truncation disk.  The result is
    normalized to total mass 1 when at least one sample contributes;
    zero samples yield an empty (unnormalized) profile.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    H, W = shape
    mass = np.zeros((H, W))
    if positions.shape[0] == 0:
        return DensityProfile(mass, tuple(origin), float(cell), normalized=False)
    if bandwidth <= 0 or cell <= 0:
        raise MetricInputError("kde bandwidth and cell size must be positive")

    radius = KERNEL_RADIUS_SIGMA * bandwidth
    R = int(np.ceil(radius / cell)) + 1
    offs = np.arange(-R, R + 1)

    # nearest cell of each sample, then a shared (2R+1)^2 patch around it
    cc = np.rint((positions[:, 0] - origin[0]) / cell).astype(int)
    rc = np.rint((positions[:, 1] - origin[1]) / cell).astype(int)
    rows = rc[:, None] + offs[None, :]                      # (N, P)
    cols = cc[:, None] + offs[None, :]
    dy = origin[1] + rows * cell - positions[:, 1:2]        # (N, P)
    dx = origin[0] + cols * cell - positions[:, 0:1]
    r2 = dy[:, :, None] ** 2 + dx[:, None, :] ** 2          # (N, P, P)
    w = np.exp(-r2 / (2.0 * bandwidth ** 2))
    w[r2 > radius ** 2] = 0.0

    rr = np.broadcast_to(rows[:, :, None], r2.shape)
    cs = np.broadcast_to(cols[:, None, :], r2.shape)
    ok = (rr >= 0) & (rr < H) & (cs >= 0) & (cs < W) & (w > 0)
    np.add.at(mass, (rr[ok], cs[ok]), w[ok])

    total = mass.sum()
    if total <= 0:
        return DensityProfile(mass, tuple(origin), float(cell), normalized=False)
    return DensityProfile(mass / total, tuple(origin), float(cell), normalized=True)


def drivable_cell_mask(grid, origin, shape, cell):
    """Bool (H, W): density cells whose center lies on drivable map area."""
    H, W = shape
    xs = origin[0] + np.arange(W) * cell
    ys = origin[1] + np.arange(H) * cell
    X, Y = np.meshgrid(xs, ys)
    return grid.drivable_at(X.ravel(), Y.ravel()).reshape(H, W)


def coverage(profiles, threshold, drivable_mask):
    """Cells visited by any trial, split into drivable / non-drivable counts.

    Trials are accumulated with a per-cell max before thresholding, so
    repeating an identical trial never changes the counts, and adding a
    trial never decreases them.
    """
    profiles = list(profiles)
    mask = np.asarray(drivable_mask, dtype=bool)
    if not profiles:
        return 0, 0
    acc = np.zeros_like(profiles[0].mass)
    for p in profiles:
        if p.mass.shape != mask.shape:
            raise MetricInputError("density profile does not match drivable mask")
        np.maximum(acc, p.mass, out=acc)
    hit = acc > threshold
    return int(np.count_nonzero(hit & mask)), int(np.count_nonzero(hit & ~mask))
