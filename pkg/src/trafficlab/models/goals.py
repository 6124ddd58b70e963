"""Decoding and sampling goal poses from the 4-channel goal map."""

from dataclasses import dataclass

import numpy as np

from ..geometry import wrap_angle


@dataclass(frozen=True)
class GoalPose:
    """A decoded goal in the ego frame, with the log-likelihood of its cell."""

    x: float
    y: float
    heading: float
    log_likelihood: float
    cell: tuple  # (row, col)


@dataclass
class GoalMap:
    """Per-cell goal scores and sub-cell pose corrections over the raster.

    logits are unnormalized; `log_probs()` is the model's goal distribution.
    Residuals are clamped to half a cell on decode so every decoded goal stays
    inside the raster window.
    """

    logits: np.ndarray    # (S, S)
    dx: np.ndarray        # (S, S) meters
    dy: np.ndarray        # (S, S) meters
    heading: np.ndarray   # (S, S) radians
    pixel_size: float

    @property
    def size(self):
        return self.logits.shape[0]

    def log_probs(self, temperature=1.0):
        """Log softmax of the cell logits at the given temperature."""
        z = self.logits / temperature
        m = z.max()
        return z - m - np.log(np.exp(z - m).sum())

    def decode_cell(self, row, col, log_probs=None):
        """GoalPose at a cell: center plus clamped residual, model likelihood."""
        if log_probs is None:
            log_probs = self.log_probs()
        ps = self.pixel_size
        center = (self.size - 1) / 2.0
        half = ps / 2.0
        x = (col - center) * ps + float(np.clip(self.dx[row, col], -half, half))
        y = (row - center) * ps + float(np.clip(self.dy[row, col], -half, half))
        return GoalPose(
            x=x,
            y=y,
            heading=wrap_angle(float(self.heading[row, col])),
            log_likelihood=float(log_probs[row, col]),
            cell=(int(row), int(col)),
        )


def goal_map_from_output(out, pixel_size):
    """Wrap a (4, S, S) net output array as a GoalMap."""
    out = np.asarray(out, float)
    if out.ndim != 3 or out.shape[0] != 4 or out.shape[1] != out.shape[2]:
        raise ValueError(f"goal map output must be (4, S, S), got {out.shape}")
    return GoalMap(out[0], out[1], out[2], out[3], float(pixel_size))


def sample_goals(gmap, k, temperature, rng, mode="sample"):
    """Draw goal poses from a goal map.

    mode "sample": k independent draws from softmax(logits / temperature).
    mode "max": the single argmax cell (first index on exact ties); k ignored.

    Returns a list of GoalPose.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    log_probs = gmap.log_probs()
    if mode == "max":
        flat = int(np.argmax(gmap.logits))
        r, c = divmod(flat, gmap.size)
        return [gmap.decode_cell(r, c, log_probs)]
    if mode != "sample":
        raise ValueError(f"unknown goal sampling mode {mode!r}")
    z = (gmap.logits / temperature).ravel()
    z = z - z.max()
    p = np.exp(z)
    p /= p.sum()
    idx = rng.choice(p.size, size=k, p=p)
    out = []
    for flat in idx:
        r, c = divmod(int(flat), gmap.size)
        out.append(gmap.decode_cell(r, c, log_probs))
    return out
