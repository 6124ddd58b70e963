"""Ornstein-Uhlenbeck position noise for stress-testing the learned scorer.

Perturbed logs should score lower under the occupancy likelihood model, with
the drop growing as sigma rises.  Noise is additive on positions only.
"""

import numpy as np
from dataclasses import replace

from ..errors import MetricInputError
from ..simengine import agent_rng
from ..world.types import SceneLog


def ou_noise(n, theta, sigma, dt, rng):
    """2-D OU sample path of length n started at zero.

    n_{t+1} = n_t - theta * n_t * dt + sigma * sqrt(dt) * xi_t
    """
    out = np.zeros((n, 2))
    if sigma == 0.0 or n == 0:
        return out
    xi = rng.standard_normal((n - 1, 2)) if n > 1 else np.zeros((0, 2))
    step = sigma * np.sqrt(dt)
    for t in range(n - 1):
        out[t + 1] = out[t] - theta * out[t] * dt + step * xi[t]
    return out


def ou_perturb(positions, theta, sigma, dt, rng):
    """Positions (T, 2) plus an OU path; sigma = 0 returns them unchanged."""
    if sigma < 0:
        raise MetricInputError("ou sigma must be non-negative")
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    return pos + ou_noise(pos.shape[0], theta, sigma, dt, rng)


def ou_perturb_log(log, theta, sigma, seed):
    """SceneLog with every agent's track displaced by its own OU path.

    Each agent draws from an independent stream keyed by (seed, agent id),
    so adding or removing agents never changes the others' noise.
    """
    if sigma < 0:
        raise MetricInputError("ou sigma must be non-negative")
    if sigma == 0.0:
        return log
    spans = {}
    for t, frame in enumerate(log.steps):
        for aid in frame:
            lo, _ = spans.get(aid, (t, t))
            spans[aid] = (lo, t + 1)
    noise = {}
    for aid in sorted(spans):
        lo, hi = spans[aid]
        noise[aid] = (lo, ou_noise(hi - lo, theta, sigma, log.dt,
                                   agent_rng(seed, aid)))
    steps = []
    for t, frame in enumerate(log.steps):
        new = {}
        for aid, st in frame.items():
            lo, path = noise[aid]
            dx, dy = path[t - lo]
            new[aid] = replace(st, x=st.x + dx, y=st.y + dy)
        steps.append(new)
    return SceneLog(log.map_spec, log.map_id, log.dt, steps,
                    metadata=dict(log.metadata, ou_theta=theta, ou_sigma=sigma))
