"""Tape-free forward wrappers used by the planner and the simulation engine."""

import numpy as np

from .. import nn
from ..dynamics import integrate_controls_np
from ..geometry import ego_rel
from .goals import goal_map_from_output
from .nets import fine_to_level


def _channels_of(ctx):
    return ctx.channels if hasattr(ctx, "channels") else np.asarray(ctx, float)


def _ctx_tensor(ctx, in_channels):
    arr = np.asarray(_channels_of(ctx), float)
    if arr.ndim != 3 or arr.shape[0] != in_channels:
        raise ValueError(
            f"context shape {arr.shape} does not match the trained input "
            f"({in_channels} channels)"
        )
    return nn.as_tensor(arr[None])


def goalnet_forward(net, ctx, pixel_size):
    """Run the goal net on one context; returns a GoalMap."""
    with nn.no_grad():
        out = net(_ctx_tensor(ctx, net.in_channels)).data[0]
    return goal_map_from_output(out, pixel_size)


def policy_features(net, ctx):
    """Encoder pyramid + global feature for one context (batch of 1)."""
    with nn.no_grad():
        feats, g = net.features(_ctx_tensor(ctx, net.in_channels))
    return feats, g


def policy_controls_batch(net, g, ego_speed, goals):
    """Commanded (speeds, yaw_rates) arrays (K, H) for K goals on one context."""
    goals = np.asarray(goals, float).reshape(-1, 3)
    K = goals.shape[0]
    with nn.no_grad():
        gk = g[np.zeros(K, dtype=int)]
        sp, yw = net.policy_commands(gk, np.full(K, float(ego_speed)), goals)
    return sp.data, yw.data


def policy_forward(net, ctx, ego_speed, goal):
    """Commanded (speeds, yaw_rates) arrays (H,) for a single goal."""
    _, g = policy_features(net, ctx)
    sp, yw = policy_controls_batch(net, g, ego_speed, np.asarray(goal, float))
    return sp[0], yw[0]


def bc_forward(net, ctx, ego_speed):
    """Goal-free commanded (speeds, yaw_rates) arrays (H,)."""
    with nn.no_grad():
        _, g = net.features(_ctx_tensor(ctx, net.in_channels))
        sp, yw = net.bc_commands(g, np.array([float(ego_speed)]))
    return sp.data[0], yw.data[0]


def predictor_forward(net, ctx, rcfg, limits):
    """Predicted ego-frame trajectories for the context's visible neighbors.

    Returns an (M, H, 4) array of (x, y, heading, speed) per neighbor, in the
    order of ctx.neighbors; M = 0 yields an empty array.
    """
    H = net.horizon
    if not ctx.neighbors:
        return np.zeros((0, H, 4))
    center = (rcfg.size_px - 1) / 2.0
    ps = rcfg.pixel_size
    rel = np.stack([
        np.concatenate([ego_rel(st, ctx.ego), [st.speed]]) for st in ctx.neighbors
    ])
    px = np.column_stack([center + rel[:, 0] / ps, center + rel[:, 1] / ps])
    with nn.no_grad():
        feats, g = net.features(_ctx_tensor(ctx, net.in_channels))
        sp, yw = net.neighbor_commands(feats, g, np.zeros(len(rel), dtype=int),
                                       rel, px)
    return integrate_controls_np(rel[:, 0], rel[:, 1], rel[:, 2], rel[:, 3],
                                 sp.data, yw.data, limits)


def occupancy_forward(net, ctx):
    """Per-step cell probability maps (T, n, n); each map sums to 1."""
    with nn.no_grad():
        out = net(_ctx_tensor(ctx, net.in_channels)).data[0]
    T, h, w = out.shape
    z = out.reshape(T, h * w)
    z = z - z.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    return p.reshape(T, h, w)


__all__ = [
    "goalnet_forward",
    "policy_features",
    "policy_controls_batch",
    "policy_forward",
    "bc_forward",
    "predictor_forward",
    "occupancy_forward",
    "fine_to_level",
]
