"""Slicing logged scenes into supervised samples for the imitation models.

For each agent and anchor step t (from birth + history to death - 1 - horizon,
at a fixed stride), the sample captures, all in the ego frame of (agent, t):
the H future poses and speeds, the goal (the pose at t + H) snapped to a
raster cell plus a sub-cell residual, and the visible neighbors with their
padded future tracks.  Anchors whose goal lands outside the raster window are
dropped and counted.
"""

from dataclasses import dataclass

import numpy as np

from ..geometry import wrap_angle
from ..geometry import ego_rel


@dataclass
class NeighborTrack:
    agent_id: str
    state: np.ndarray    # (4,) ego-frame x, y, heading, speed at the anchor
    future: np.ndarray   # (H, 3) ego-frame poses, zero-padded after death
    valid: np.ndarray    # (H,) bool


@dataclass
class Sample:
    agent_id: str
    t: int
    ego_speed: float
    goal: np.ndarray       # (3,) ego-frame goal pose at t + H
    goal_cell: tuple       # (row, col) in the ego raster
    residual: np.ndarray   # (3,) meters-from-cell-center dx, dy and heading
    future: np.ndarray     # (H, 4) ego-frame x, y, heading, speed
    neighbors: list        # list[NeighborTrack]


@dataclass
class ExtractResult:
    samples: list
    dropped_offwindow: int


def extract_samples(log, raster_cfg, horizon, stride=5, max_neighbors=8):
    """Build supervised samples from a scene log.

    Returns an ExtractResult; `dropped_offwindow` counts anchors whose goal
    pose fell outside the raster window.
    """
    size = raster_cfg.size_px
    ps = raster_cfg.pixel_size
    h = raster_cfg.history
    center = (size - 1) / 2.0
    half_extent = size / 2.0 * ps
    samples = []
    dropped = 0
    for aid in log.agent_ids():
        birth, death = log.lifespan(aid)
        t0 = birth + h
        t1 = death - 1 - horizon
        for t in range(t0, t1 + 1, stride):
            ego = log.steps[t][aid]
            future = np.zeros((horizon, 4))
            for k in range(horizon):
                st = log.steps[t + 1 + k][aid]
                rel = ego_rel(st, ego)
                future[k] = [rel[0], rel[1], rel[2], st.speed]
            goal = future[-1, :3].copy()
            col = int(round(center + goal[0] / ps))
            row = int(round(center + goal[1] / ps))
            if not (0 <= row < size and 0 <= col < size):
                dropped += 1
                continue
            residual = np.array(
                [
                    goal[0] - (col - center) * ps,
                    goal[1] - (row - center) * ps,
                    goal[2],
                ]
            )
            neighbors = []
            for nid in sorted(log.steps[t]):
                if nid == aid:
                    continue
                nst = log.steps[t][nid]
                rel = ego_rel(nst, ego)
                if abs(rel[0]) > half_extent or abs(rel[1]) > half_extent:
                    continue
                nfut = np.zeros((horizon, 3))
                nvalid = np.zeros(horizon, dtype=bool)
                for k in range(horizon):
                    fr = log.steps[t + 1 + k]
                    if nid in fr:
                        nfut[k] = ego_rel(fr[nid], ego)
                        nvalid[k] = True
                    else:
                        break  # lifetimes are contiguous
                neighbors.append(
                    NeighborTrack(nid, np.array([rel[0], rel[1], rel[2], nst.speed]),
                                  nfut, nvalid)
                )
            if len(neighbors) > max_neighbors:
                dists = [float(np.hypot(n.state[0], n.state[1])) for n in neighbors]
                keep = np.argsort(dists, kind="stable")[:max_neighbors]
                neighbors = [neighbors[i] for i in sorted(keep)]
            samples.append(
                Sample(aid, t, ego.speed, goal, (row, col), residual, future, neighbors)
            )
    return ExtractResult(samples, dropped)


def sample_goal_consistency(log, sample, horizon, limits):
    """Max pose error between the stored goal and re-integrated logged controls.

    Back-derives the controls between t and t + H from the log and rolls them
    through the motion model; used as a data-quality check.
    """
    from ..dynamics import controls_from_states, rollout_controls

    aid = sample.agent_id
    t = sample.t
    states = [log.steps[t + k][aid] for k in range(horizon + 1)]
    controls = controls_from_states(states, limits)
    redone = rollout_controls(states[0], controls, limits)
    end = redone[-1]
    rel = ego_rel(end, states[0])
    err_pos = float(np.hypot(rel[0] - sample.goal[0], rel[1] - sample.goal[1]))
    err_th = abs(wrap_angle(rel[2] - sample.goal[2]))
    return max(err_pos, err_th)
