"""Driving-profile statistics: histogram distances and positional errors.

Rollouts are compared against the logs they were seeded from.  Speed,
longitudinal/lateral acceleration magnitude, and jerk magnitude are pooled
over all agents and scenes into fixed-range histograms; distances between
simulation and log histograms are 1-D Wasserstein, normalized by the
histogram range so every distance lands in [0, 100].
"""

import numpy as np
from dataclasses import dataclass

from ..errors import MetricInputError
from ..geometry import wrap_angle

QUANTITIES = ("speed", "lon_acc", "lat_acc", "jerk")


@dataclass
class DatasetMetrics:
    speed_dist: float
    lon_acc_dist: float
    lat_acc_dist: float
    jerk_dist: float
    sade: float
    sfde: float
    truncated: bool = False   # set when rollout/log horizons differed

    def as_dict(self):
        return {
            "speed_dist": self.speed_dist,
            "lon_acc_dist": self.lon_acc_dist,
            "lat_acc_dist": self.lat_acc_dist,
            "jerk_dist": self.jerk_dist,
            "sade": self.sade,
            "sfde": self.sfde,
            "truncated": self.truncated,
        }


def _agent_tracks(steps):
    """Per-agent arrays of (x, y, heading, speed) over contiguous presence."""
    order = {}
    for frame in steps:
        for aid, st in frame.items():
            order.setdefault(aid, []).append((st.x, st.y, st.heading, st.speed))
    return {aid: np.array(rows) for aid, rows in order.items()}


def driving_profile(steps, dt):
    """Pooled per-quantity samples from every agent track in the frames.

    speed comes straight from the states, accelerations from first
    differences of speed and of heading (times speed), jerk from second
    differences of speed.  All but speed are magnitudes.
    """
    out = {q: [] for q in QUANTITIES}
    for track in _agent_tracks(steps).values():
        v = track[:, 3]
        th = track[:, 2]
        out["speed"].append(v)
        if len(v) >= 2:
            out["lon_acc"].append(np.abs(np.diff(v) / dt))
            out["lat_acc"].append(np.abs(v[:-1] * wrap_angle(np.diff(th)) / dt))
        if len(v) >= 3:
            out["jerk"].append(np.abs(np.diff(v, n=2) / dt ** 2))
    return {q: np.concatenate(vals) if vals else np.zeros(0)
            for q, vals in out.items()}


def profile_histogram(samples, lo, hi, bins):
    """Normalized counts over [lo, hi]; samples are clipped into range."""
    if hi <= lo or bins < 1:
        raise MetricInputError("histogram range must be positive")
    x = np.clip(np.asarray(samples, dtype=float), lo, hi)
    h, _ = np.histogram(x, bins=bins, range=(lo, hi))
    h = h.astype(float)
    total = h.sum()
    return h / total if total > 0 else h


def wasserstein_1d(h1, h2, bin_width):
    """Unnormalized 1-D Wasserstein: sum of |CDF gaps| times bin width."""
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    if h1.shape != h2.shape:
        raise MetricInputError("histograms must have matching bin counts")
    return float(np.abs(np.cumsum(h1 - h2)).sum() * bin_width)


def _hist_ranges(mcfg):
    return {
        "speed": (0.0, mcfg.speed_max),
        "lon_acc": (0.0, mcfg.lon_accel_max),
        "lat_acc": (0.0, mcfg.lat_accel_max),
        "jerk": (0.0, mcfg.jerk_max),
    }


def _common_span(rollout, log):
    """Frame range [t0, end) present in both the rollout and its source."""
    end = min(rollout.n_steps, len(log.steps))
    return rollout.t0, end


def dataset_metrics(rollouts, logs, mcfg):
    """Histogram distances and sADE/sFDE of rollouts vs their source logs.

    rollouts[i] must have been seeded from logs[i].  Profiles are pooled
    across all pairs before histogramming; positional errors average over
    agents (per common step where the agent exists on both sides), then
    over scenes.  Distances are percent of the histogram range.
    """
    rollouts = list(rollouts)
    logs = list(logs)
    if len(rollouts) != len(logs) or not rollouts:
        raise MetricInputError("need matching, non-empty rollout/log lists")

    sim = {q: [] for q in QUANTITIES}
    ref = {q: [] for q in QUANTITIES}
    ades, fdes = [], []
    truncated = False
    for r, log in zip(rollouts, logs):
        t0, end = _common_span(r, log)
        if end < r.n_steps or end < len(log.steps):
            truncated = True
        if end <= t0:
            raise MetricInputError("rollout and log share no frames")
        p = driving_profile(r.steps[t0:end], r.dt)
        q = driving_profile(log.steps[t0:end], log.dt)
        for name in QUANTITIES:
            sim[name].append(p[name])
            ref[name].append(q[name])

        scene_ades, scene_fdes = [], []
        for aid in r.agent_ids:
            gaps = []
            for t in range(t0, end):
                a = r.steps[t].get(aid)
                b = log.steps[t].get(aid)
                if a is None or b is None:
                    continue
                gaps.append(np.hypot(a.x - b.x, a.y - b.y))
            if gaps:
                scene_ades.append(float(np.mean(gaps)))
                scene_fdes.append(float(gaps[-1]))
        if scene_ades:
            ades.append(float(np.mean(scene_ades)))
            fdes.append(float(np.mean(scene_fdes)))

    ranges = _hist_ranges(mcfg)
    dists = {}
    for name in QUANTITIES:
        lo, hi = ranges[name]
        hs = profile_histogram(np.concatenate(sim[name]), lo, hi, mcfg.hist_bins)
        hr = profile_histogram(np.concatenate(ref[name]), lo, hi, mcfg.hist_bins)
        width = (hi - lo) / mcfg.hist_bins
        w = wasserstein_1d(hs, hr, width)
        dists[name] = 100.0 * w / (width * mcfg.hist_bins)

    return DatasetMetrics(
        speed_dist=dists["speed"],
        lon_acc_dist=dists["lon_acc"],
        lat_acc_dist=dists["lat_acc"],
        jerk_dist=dists["jerk"],
        sade=float(np.mean(ades)) if ades else 0.0,
        sfde=float(np.mean(fdes)) if fdes else 0.0,
        truncated=truncated,
    )
