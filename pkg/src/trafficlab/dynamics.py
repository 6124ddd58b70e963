"""Unicycle motion model with speed/accel/yaw-rate limits.

A control is a commanded speed plus a yaw rate.  The commanded speed is
clamped to the reachable band [speed - a_max*dt, speed + a_max*dt] (and to
[0, v_max]), the yaw rate to [-omega_max, omega_max]; the clamped speed is
applied over the whole step:

    x'     = x + v * cos(heading) * dt
    y'     = y + v * sin(heading) * dt
    head'  = wrap(heading + omega * dt)
    speed' = v

The same integration runs either on plain floats (simulation) or on autodiff
tensors (training through the rollout).
"""

from dataclasses import dataclass

import numpy as np

from . import nn
from .geometry import wrap_angle


@dataclass(frozen=True)
class Control:
    """One step of actuation: commanded speed (m/s) and yaw rate (rad/s)."""

    speed: float
    yaw_rate: float


@dataclass(frozen=True)
class Limits:
    """Actuation limits and the integration step."""

    v_max: float = 30.0
    a_max: float = 10.0
    omega_max: float = np.pi / 2
    dt: float = 0.1

    def __post_init__(self):
        if min(self.v_max, self.a_max, self.omega_max, self.dt) <= 0:
            raise ValueError("limits and dt must be positive")


def clamp_speed(commanded, speed, limits):
    """Commanded speed clamped to the band reachable in one step."""
    lo = max(0.0, speed - limits.a_max * limits.dt)
    hi = min(limits.v_max, speed + limits.a_max * limits.dt)
    return float(np.clip(commanded, lo, hi))


def step(state, u, limits):
    """Advance one agent state by one control step."""
    v = clamp_speed(u.speed, state.speed, limits)
    w = float(np.clip(u.yaw_rate, -limits.omega_max, limits.omega_max))
    return state.replace(
        x=state.x + v * np.cos(state.heading) * limits.dt,
        y=state.y + v * np.sin(state.heading) * limits.dt,
        heading=wrap_angle(state.heading + w * limits.dt),
        speed=v,
    )


def rollout_controls(state, controls, limits):
    """Roll a control sequence forward; returns the H post-step states."""
    out = []
    for u in controls:
        state = step(state, u, limits)
        out.append(state)
    return out


def controls_from_states(states, limits):
    """Recover the control sequence that produced consecutive logged states.

    The commanded speed of step k is states[k+1].speed; the yaw rate is the
    wrapped heading change over dt.  Exact for any trajectory produced by
    `step` whose commands stayed inside the clamp bands.
    """
    us = []
    for a, b in zip(states[:-1], states[1:]):
        us.append(Control(b.speed, wrap_angle(b.heading - a.heading) / limits.dt))
    return us


def integrate_controls(x0, y0, th0, v0, speeds, yaw_rates, limits):
    """Batched tensor rollout of commanded (speed, yaw rate) sequences.

    Args:
        x0, y0, th0, v0: arrays (B,) of initial states (constants).
        speeds, yaw_rates: Tensors (B, H) of per-step commands.
        limits: Limits.

    Returns:
        (xs, ys, ths, vs): Tensors (B, H) of post-step states, differentiable
        w.r.t. the command tensors.
    """
    dt = limits.dt
    x = nn.as_tensor(np.asarray(x0, float))
    y = nn.as_tensor(np.asarray(y0, float))
    th = nn.as_tensor(np.asarray(th0, float))
    v = nn.as_tensor(np.asarray(v0, float))
    H = speeds.shape[1]
    xs, ys, ths, vs = [], [], [], []
    for k in range(H):
        lo = nn.maximum(v - limits.a_max * dt, 0.0)
        hi = nn.minimum(v + limits.a_max * dt, limits.v_max)
        vk = nn.clamp(speeds[:, k], lo, hi)
        wk = nn.clamp(yaw_rates[:, k], -limits.omega_max, limits.omega_max)
        x = x + vk * th.cos() * dt
        y = y + vk * th.sin() * dt
        th = (th + wk * dt).wrap_angle()
        v = vk
        xs.append(x)
        ys.append(y)
        ths.append(th)
        vs.append(v)
    return (
        nn.stack(xs, axis=1),
        nn.stack(ys, axis=1),
        nn.stack(ths, axis=1),
        nn.stack(vs, axis=1),
    )


def integrate_controls_np(x0, y0, th0, v0, speeds, yaw_rates, limits):
    """Plain-numpy batched rollout (no tape); same semantics as the tensor path.

    speeds / yaw_rates are arrays (B, H); returns arrays (B, H, 4) of
    (x, y, heading, speed).
    """
    dt = limits.dt
    x = np.asarray(x0, float).copy()
    y = np.asarray(y0, float).copy()
    th = np.asarray(th0, float).copy()
    v = np.asarray(v0, float).copy()
    B, H = speeds.shape
    out = np.zeros((B, H, 4))
    for k in range(H):
        lo = np.maximum(v - limits.a_max * dt, 0.0)
        hi = np.minimum(v + limits.a_max * dt, limits.v_max)
        vk = np.clip(speeds[:, k], lo, hi)
        wk = np.clip(yaw_rates[:, k], -limits.omega_max, limits.omega_max)
        x = x + vk * np.cos(th) * dt
        y = y + vk * np.sin(th) * dt
        th = wrap_angle(th + wk * dt)
        v = vk
        out[:, k, 0] = x
        out[:, k, 1] = y
        out[:, k, 2] = th
        out[:, k, 3] = v
    return out
