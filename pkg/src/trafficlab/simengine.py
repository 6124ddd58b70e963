"""Closed-loop rollouts: every agent is driven by a replica of one policy.

A rollout re-seeds the scene from a source log at step `history` (so context
rasters have their full occupancy history), then advances all agents
simultaneously at 10 Hz.  Plans are refreshed every `replan_every` steps from
the committed state buffer; between refreshes each agent pops controls from
its queue.  Failure events (collisions, sustained road departure) are
recomputed from the stored states after the run, so archived rollouts always
agree with their event lists.

Policies:
  log_replay   copy the source log (identity),
  bc_baseline  goal-free cloning head,
  bits_sample  one goal drawn from the goal map, decoded and executed,
  bits_max     the argmax goal, decoded and executed,
  bits         K sampled goals, neighbor prediction, cost-based selection.
"""

import json
import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from .config import POLICY_NAMES
from .dynamics import Control, integrate_controls_np, step as dyn_step
from .errors import ConfigError
from .geometry import box_corners, boxes_overlap, ego_rel, wrap_angle
from .models.infer import (
    bc_forward,
    goalnet_forward,
    policy_controls_batch,
    policy_features,
    predictor_forward,
)
from .models.goals import sample_goals
from .models.training import load_model
from .planner import CandidatePlan, CostWeights, select_action
from .raster import build_map_stack, rasterize_context
from .world.types import AgentState


@dataclass(frozen=True)
class FailureEvent:
    agent_id: str
    kind: str                 # "collision" | "offroad"
    step: int                 # frame index of first contact / run start
    collision_type: str = ""  # "front" | "rear" | "side"
    partner: str = ""


@dataclass
class Rollout:
    map_spec: dict
    policy: str
    seed: int
    dt: float
    t0: int                   # frame index where simulation takes over
    steps: list               # list of dict agent_id -> AgentState
    agent_ids: list           # controlled agents
    events: list              # list[FailureEvent]
    decisions: list           # per planning event summaries (bits only)
    meta: dict = field(default_factory=dict)

    @property
    def n_steps(self):
        return len(self.steps)


@dataclass
class ModelBundle:
    """Loaded checkpoints needed to run learned policies."""

    goal: object
    control: object
    rcfg: object
    mcfg: object


def load_bundle(goal_path, policy_path):
    goal, rcfg_g, mcfg_g, _ = load_model(goal_path, "goalnet")
    control, rcfg_p, mcfg_p, _ = load_model(policy_path, "policy")
    if rcfg_g != rcfg_p:
        raise ConfigError("goal and control checkpoints use different rasters")
    return ModelBundle(goal, control, rcfg_g, mcfg_p)


def agent_rng(seed, agent_id):
    """Stream for one agent, independent of the rest of the fleet."""
    tag = zlib.crc32(agent_id.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tag)]))


def _rel_traj_to_states(traj, ego, agent_id):
    """Ego-frame (H, 4) rollout -> world-frame AgentState list."""
    c, s = np.cos(ego.heading), np.sin(ego.heading)
    out = []
    for k in range(traj.shape[0]):
        rx, ry, rh, v = traj[k]
        out.append(AgentState(
            agent_id,
            ego.x + rx * c - ry * s,
            ego.y + rx * s + ry * c,
            wrap_angle(ego.heading + rh),
            float(max(v, 0.0)),
            ego.length,
            ego.width,
        ))
    return out


def _plan_agent(policy, aid, t, buffer, stack, bundle, cfg, rng, limits):
    """One agent's planning event; returns (controls, decision dict or None)."""
    rcfg = bundle.rcfg
    pcfg = cfg.planner
    ctx = rasterize_context(buffer, aid, t, stack.grid, rcfg)
    ego = ctx.ego

    if policy == "bc_baseline":
        sp, yw = bc_forward(bundle.control, ctx, ego.speed)
        return [Control(float(a), float(b)) for a, b in zip(sp, yw)], None

    gmap = goalnet_forward(bundle.goal, ctx, rcfg.pixel_size)
    if policy == "bits_max":
        goals = sample_goals(gmap, 1, pcfg.temperature, rng, mode="max")
    elif policy == "bits_sample":
        goals = sample_goals(gmap, 1, pcfg.temperature, rng)
    else:  # bits
        goals = sample_goals(gmap, pcfg.num_goal_samples, pcfg.temperature, rng)

    _, g = policy_features(bundle.control, ctx)
    goal_arr = np.array([[gp.x, gp.y, gp.heading] for gp in goals])
    sp, yw = policy_controls_batch(bundle.control, g, ego.speed, goal_arr)
    K = len(goals)
    zeros = np.zeros(K)
    rel = integrate_controls_np(zeros, zeros, zeros, np.full(K, ego.speed),
                                sp, yw, limits)
    cands = []
    for i, gp in enumerate(goals):
        controls = [Control(float(a), float(b)) for a, b in zip(sp[i], yw[i])]
        cands.append(CandidatePlan(gp, controls, _rel_traj_to_states(rel[i], ego, aid)))

    if policy in ("bits_max", "bits_sample"):
        return cands[0].controls, None

    preds = predictor_forward(bundle.control, ctx, rcfg, limits)
    neighbor_trajs = [
        _rel_traj_to_states(preds[m], ego, ctx.neighbors[m].agent_id)
        for m in range(preds.shape[0])
    ]
    weights = CostWeights.from_config(pcfg)
    decision = select_action(cands, neighbor_trajs, weights, dmap=stack.dmap,
                             roi_n=rcfg.roi_n)
    dec = {
        "t": t,
        "agent_id": aid,
        "chosen": decision.chosen,
        "tie_break": decision.tie_break,
        "total": float(decision.totals[decision.chosen]),
        "collision": float(decision.collision[decision.chosen]),
        "offroad": float(decision.offroad[decision.chosen]),
    }
    return cands[decision.chosen].controls, dec


def run_rollout(source_log, policy, seed, cfg, bundle=None, steps=None):
    """Simulate a scene under one policy; returns a Rollout.

    The state buffer starts with the source log's frames 0..history, and the
    agents present at frame `history` are controlled from there on.  Replay
    copies the source exactly (and is capped at its length); learned policies
    run for `steps` frames and never despawn.
    """
    if policy not in POLICY_NAMES:
        raise ConfigError(f"unknown policy {policy!r}")
    limits = cfg.dynamics.limits
    n_steps = int(steps if steps is not None else cfg.sim.steps)
    h = cfg.raster.history
    t0 = min(h, len(source_log.steps) - 1)
    stack = build_map_stack(source_log.map_spec, cfg.raster,
                            cfg.planner.distance_saturation)

    if policy == "log_replay":
        end = min(len(source_log.steps) - 1, t0 + n_steps)
        frames = [dict(f) for f in source_log.steps[: end + 1]]
        ids = sorted(frames[t0])
        roll = Rollout(source_log.map_spec, policy, seed, source_log.dt, t0,
                       frames, ids, [], [],
                       {"source_steps": len(source_log.steps),
                        "requested_steps": n_steps})
        roll.events = detect_events(roll.steps, stack.grid, t0,
                                    cfg.metrics.offroad_consecutive,
                                    cfg.metrics.front_angle_deg,
                                    cfg.metrics.rear_angle_deg)
        return roll

    if bundle is None:
        raise ConfigError(f"policy {policy!r} needs trained checkpoints")
    if bundle.rcfg != cfg.raster:
        raise ConfigError("checkpoint raster config does not match the run config")

    frames = [dict(f) for f in source_log.steps[: t0 + 1]]
    ids = sorted(frames[t0])
    rngs = {aid: agent_rng(seed, aid) for aid in ids}
    queues = {aid: [] for aid in ids}
    decisions = []
    replan = cfg.planner.replan_every
    for t in range(t0, t0 + n_steps):
        if (t - t0) % replan == 0:
            for aid in ids:
                controls, dec = _plan_agent(policy, aid, t, frames, stack,
                                            bundle, cfg, rngs[aid], limits)
                queues[aid] = list(controls)
                if dec is not None:
                    decisions.append(dec)
        new_frame = {}
        for aid in ids:
            st = frames[t][aid]
            u = queues[aid].pop(0) if queues[aid] else Control(st.speed, 0.0)
            new_frame[aid] = dyn_step(st, u, limits)
        frames.append(new_frame)

    roll = Rollout(source_log.map_spec, policy, seed, limits.dt, t0, frames,
                   ids, [], decisions,
                   {"source_steps": len(source_log.steps),
                    "requested_steps": n_steps})
    roll.events = detect_events(roll.steps, stack.grid, t0,
                                cfg.metrics.offroad_consecutive,
                                cfg.metrics.front_angle_deg,
                                cfg.metrics.rear_angle_deg)
    return roll


# -- failure detection ------------------------------------------------------


@dataclass(frozen=True)
class ContactPair:
    a: str
    b: str
    type_a: str
    type_b: str


def _bearing_type(ego, other, front_deg, rear_deg):
    rel = ego_rel(other, ego)
    phi = abs(np.degrees(np.arctan2(rel[1], rel[0])))
    if phi < front_deg:
        return "front"
    if phi > rear_deg:
        return "rear"
    return "side"


def detect_collisions(frame, front_deg=45.0, rear_deg=135.0):
    """Exact oriented-box contacts in one frame, classified for both agents."""
    ids = sorted(frame)
    out = []
    for i, a in enumerate(ids):
        sa = frame[a]
        ca = box_corners(sa.x, sa.y, sa.heading, sa.length, sa.width)
        for b in ids[i + 1 :]:
            sb = frame[b]
            cb = box_corners(sb.x, sb.y, sb.heading, sb.length, sb.width)
            if boxes_overlap(ca, cb):
                out.append(ContactPair(
                    a, b,
                    _bearing_type(sa, sb, front_deg, rear_deg),
                    _bearing_type(sb, sa, front_deg, rear_deg),
                ))
    return out


def detect_offroad(steps, grid, start=0):
    """Per-agent centroid-offroad flags over steps[start:].

    Returns dict agent_id -> bool array of length len(steps) - start; steps
    where the agent is absent count as on-road.
    """
    n = len(steps) - start
    ids = sorted({aid for f in steps[start:] for aid in f})
    flags = {aid: np.zeros(n, dtype=bool) for aid in ids}
    for k in range(n):
        frame = steps[start + k]
        for aid, st in frame.items():
            flags[aid][k] = not bool(grid.drivable_at(st.x, st.y))
    return flags


def _first_long_run(flags, min_len):
    """Start index of the first True run of at least min_len, or None."""
    run = 0
    for i, f in enumerate(flags):
        run = run + 1 if f else 0
        if run == min_len:
            return i - min_len + 1
    return None


def detect_events(steps, grid, start=0, offroad_consecutive=11,
                  front_deg=45.0, rear_deg=135.0):
    """All failure events implied by a state sequence, sorted by step.

    Collisions are recorded once per agent pair at their first contact;
    offroad failures at the start of the first run of `offroad_consecutive`
    consecutive offroad steps.
    """
    events = []
    seen = set()
    for t in range(start, len(steps)):
        for pair in detect_collisions(steps[t], front_deg, rear_deg):
            key = (pair.a, pair.b)
            if key in seen:
                continue
            seen.add(key)
            events.append(FailureEvent(pair.a, "collision", t, pair.type_a, pair.b))
            events.append(FailureEvent(pair.b, "collision", t, pair.type_b, pair.a))
    flags = detect_offroad(steps, grid, start)
    for aid in sorted(flags):
        at = _first_long_run(flags[aid], offroad_consecutive)
        if at is not None:
            events.append(FailureEvent(aid, "offroad", start + at))
    events.sort(key=lambda e: (e.step, e.agent_id, e.kind, e.partner))
    return events


# -- rollout archives -------------------------------------------------------

ARCHIVE_VERSION = 1


def save_rollout(path, rollout):
    """Write a rollout archive (JSON, atomic)."""
    dims = {}
    for frame in rollout.steps:
        for aid, st in frame.items():
            if aid not in dims:
                dims[aid] = [st.length, st.width]
    doc = {
        "format": "rollout",
        "version": ARCHIVE_VERSION,
        "map_spec": rollout.map_spec,
        "policy": rollout.policy,
        "seed": rollout.seed,
        "dt": rollout.dt,
        "t0": rollout.t0,
        "agent_ids": rollout.agent_ids,
        "dims": dims,
        "frames": [
            {aid: [st.x, st.y, st.heading, st.speed] for aid, st in sorted(f.items())}
            for f in rollout.steps
        ],
        "events": [
            {"agent_id": e.agent_id, "kind": e.kind, "step": e.step,
             "collision_type": e.collision_type, "partner": e.partner}
            for e in rollout.events
        ],
        "decisions": rollout.decisions,
        "meta": rollout.meta,
    }
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as f:
        json.dump(doc, f)
        f.write("\n")
    os.replace(tmp, path)


def load_rollout(path):
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != "rollout" or doc.get("version") != ARCHIVE_VERSION:
        raise ConfigError(f"{path} is not a version-{ARCHIVE_VERSION} rollout archive")
    dims = doc["dims"]
    steps = []
    for frame in doc["frames"]:
        steps.append({
            aid: AgentState(aid, v[0], v[1], v[2], v[3], dims[aid][0], dims[aid][1])
            for aid, v in frame.items()
        })
    events = [FailureEvent(e["agent_id"], e["kind"], e["step"],
                           e.get("collision_type", ""), e.get("partner", ""))
              for e in doc["events"]]
    return Rollout(doc["map_spec"], doc["policy"], doc["seed"], doc["dt"],
                   doc["t0"], steps, doc["agent_ids"], events,
                   doc.get("decisions", []), doc.get("meta", {}))
