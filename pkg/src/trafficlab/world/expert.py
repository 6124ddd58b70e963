"""Scripted expert traffic used to produce training logs.

Each moving agent follows a fixed route with pure-pursuit steering (lookahead
max(lookahead_base, lookahead_time * v)) and an intelligent-driver-model speed
command against the nearest corridor leader.  Curve speeds come from a
per-route velocity profile (lateral-acceleration bound plus a backward braking
pass).  A fraction of agents is parked: they hold a pose on the road for the
whole log and emit (0, 0) controls.

Unsignalized crossings are serialized first-come-first-served: an agent holds
at the yield-zone boundary while any other mover occupies the zone.  If two
next-step footprints still intersect, the later-spawned agent despawns and the
event is recorded in the log metadata.
"""

import numpy as np

from ..dynamics import Control, step
from ..geometry import box_corners, boxes_overlap, wrap_angle
from .mapgen import map_id_of
from .types import AgentState, SceneLog

END_MARGIN = 1.0        # despawn when the front bumper reaches this close to the end
STOP_MARGIN = 1.5       # standoff before the yield line, meters
PROFILE_DS = 1.0        # velocity-profile sample spacing, meters
ENTRY_CLEAR = 8.0       # route meters that must be free ahead of a spawn
PARKED_CLEARANCE = 12.0  # parked cars keep this far from a crossing center


class _RoutePlan:
    """Per-route precomputation: curve-limited speed profile and yield span."""

    def __init__(self, route, cfg, yield_zone):
        self.route = route
        line = route.line
        n = max(2, int(np.ceil(line.length / PROFILE_DS)) + 1)
        self.ss = np.linspace(0.0, line.length, n)
        pts = np.array([line.point_at(s) for s in self.ss])  # (n, 3) x, y, heading
        self.ds = self.ss[1] - self.ss[0]
        dth = np.abs(wrap_angle(np.diff(pts[:, 2])))
        radius = np.where(dth > 1e-9, self.ds / np.maximum(dth, 1e-9), np.inf)
        v_curve = np.sqrt(cfg.lat_accel * radius)
        v_curve = np.minimum(v_curve, cfg.v0 * 1.3)
        v = v_curve.copy()
        for i in range(len(v) - 2, -1, -1):  # braking feasibility, back to front
            v[i] = min(v[i], np.sqrt(v[i + 1] ** 2 + 2.0 * cfg.brake * self.ds))
        self.v_limit = np.concatenate([v, [v[-1]]])  # one value per sample point
        self.yield_in = None
        if yield_zone is not None and route.kind != "lane":
            cx, cy, rz = yield_zone
            inside = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= rz
            if np.any(inside):
                self.yield_in = float(self.ss[int(np.argmax(inside))])

    def speed_limit(self, s):
        i = int(np.clip(round(s / self.ds), 0, len(self.v_limit) - 1))
        return float(self.v_limit[i])


class _Driver:
    """Mutable bookkeeping for one scripted agent."""

    def __init__(self, idx, agent_id, plan, entry, stationary, s_init, v0, length, width):
        self.idx = idx
        self.agent_id = agent_id
        self.plan = plan
        self.entry = entry
        self.stationary = stationary
        self.s_init = s_init
        self.v0 = v0
        self.length = length
        self.width = width
        self.state = None  # AgentState while alive


def _idm_accel(cfg, v, v0_local, gap, dv):
    s_star = cfg.s0 + max(0.0, v * cfg.headway + v * dv / (2.0 * np.sqrt(cfg.accel * cfg.brake)))
    free = (v / max(v0_local, 0.1)) ** cfg.delta
    interact = (s_star / max(gap, 0.1)) ** 2 if gap < np.inf else 0.0
    return cfg.accel * (1.0 - free - interact)


def _spawn_blocked(driver, pose, live):
    corners = box_corners(pose[0], pose[1], pose[2], driver.length, driver.width)
    for other in live:
        if boxes_overlap(corners, box_corners(other.x, other.y, other.heading,
                                              other.length, other.width)):
            return True
        s_o, lat, _ = driver.plan.route.line.project(other.x, other.y)
        if abs(lat) < 2.5 and 0.0 <= s_o - driver.s_init <= ENTRY_CLEAR:
            return True
    return False


def gen_expert_log(graph, map_spec, cfg, limits, seed, steps, n_agents):
    """Simulate scripted traffic on a lane graph and record a SceneLog."""
    rng = np.random.default_rng(seed)
    yield_zone = getattr(graph, "yield_zone", None)
    plans = {rid: _RoutePlan(r, cfg, yield_zone) for rid, r in graph.routes.items()}

    drivers = []
    shortfall = 0
    n_spawns = len(graph.spawn_points)
    for i in range(n_agents):
        sp = graph.spawn_points[i % n_spawns]
        rid = sp.route_ids[int(rng.integers(len(sp.route_ids)))]
        plan = plans[rid]
        stationary = bool(rng.uniform() < cfg.stationary_prob)
        length = float(rng.uniform(*cfg.length_range))
        width = float(rng.uniform(*cfg.width_range))
        v0 = cfg.v0 * float(rng.uniform(1 - cfg.speed_jitter, 1 + cfg.speed_jitter))
        if stationary:
            entry = 0
            s_init = None
            for _ in range(20):  # keep parked cars off crossings and off each other
                cand = float(rng.uniform(0.25, 0.72)) * plan.route.line.length
                x, y, _ = plan.route.line.point_at(cand)
                if yield_zone is not None and plan.route.kind != "lane":
                    if np.hypot(x - yield_zone[0], y - yield_zone[1]) < PARKED_CLEARANCE:
                        continue
                s_init = cand
                break
            if s_init is None:
                shortfall += 1
                continue
        else:
            entry = 0 if i < n_spawns else int(rng.uniform(0, cfg.entry_frac * steps))
            s_init = 1.0 + float(rng.uniform(0.0, 1.5))
        drivers.append(
            _Driver(len(drivers), f"a{len(drivers):02d}", plan, entry, stationary,
                    s_init, v0, length, width)
        )

    despawns = []
    log_steps = []
    pending = list(drivers)
    live = []

    for t in range(steps):
        # spawn attempts, in creation order
        still = []
        for d in pending:
            if d.entry > t:
                still.append(d)
                continue
            x, y, th = d.plan.route.line.point_at(d.s_init)
            if _spawn_blocked(d, (x, y, th), [o.state for o in live]):
                still.append(d)
                continue
            v_start = 0.0 if d.stationary else 0.4 * d.v0
            d.state = AgentState(d.agent_id, x, y, th, v_start, d.length, d.width)
            live.append(d)
        pending = still

        frame = {d.agent_id: d.state for d in live}
        log_steps.append(frame)

        # controls
        moves = []
        zone_busy = {}
        if yield_zone is not None:
            cx, cy, rz = yield_zone
            for d in live:
                if not d.stationary and np.hypot(d.state.x - cx, d.state.y - cy) <= rz:
                    zone_busy[d.agent_id] = True
        for d in live:
            if d.stationary:
                moves.append((d, Control(0.0, 0.0)))
                continue
            st = d.state
            s_ego, _, _ = d.plan.route.line.project(st.x, st.y)

            gap, dv = np.inf, 0.0
            for o in live:
                if o is d:
                    continue
                s_o, lat_o, tang_o = d.plan.route.line.project(o.state.x, o.state.y)
                if abs(lat_o) > cfg.corridor_halfwidth:
                    continue
                ahead = s_o - s_ego
                if 0.0 < ahead <= cfg.corridor_range:
                    g = ahead - (d.length + o.length) / 2.0
                    if g < gap:
                        v_along = max(0.0, o.state.speed * np.cos(o.state.heading - tang_o))
                        gap, dv = g, st.speed - v_along
            if d.plan.yield_in is not None and s_ego < d.plan.yield_in:
                others_in_zone = any(a != d.agent_id for a in zone_busy)
                if others_in_zone:
                    g = d.plan.yield_in - STOP_MARGIN - s_ego - d.length / 2.0
                    if g < gap:
                        gap, dv = g, st.speed

            v0_local = min(d.v0, d.plan.speed_limit(s_ego))
            if gap < 0.1:
                v_cmd = 0.0
            else:
                acc = float(np.clip(_idm_accel(cfg, st.speed, v0_local, gap, dv),
                                    -limits.a_max, cfg.accel))
                v_cmd = max(0.0, st.speed + acc * limits.dt)

            ld = max(cfg.lookahead_base, cfg.lookahead_time * st.speed)
            tx, ty, _ = d.plan.route.line.point_at(min(s_ego + ld, d.plan.route.line.length))
            dx, dy = tx - st.x, ty - st.y
            c, s = np.cos(st.heading), np.sin(st.heading)
            lx, ly = dx * c + dy * s, -dx * s + dy * c
            d2 = lx * lx + ly * ly
            curv = 2.0 * ly / d2 if d2 > 1e-6 else 0.0
            w_cmd = float(np.clip(st.speed * curv, -limits.omega_max, limits.omega_max))
            moves.append((d, Control(v_cmd, w_cmd)))

        # integrate and resolve
        nxt = {d.agent_id: step(d.state, u, limits) for d, u in moves}
        order = sorted(live, key=lambda d: d.idx)
        killed = set()
        for i, da in enumerate(order):
            for db in order[i + 1 :]:
                if da.agent_id in killed or db.agent_id in killed:
                    continue
                sa, sb = nxt[da.agent_id], nxt[db.agent_id]
                if abs(sa.x - sb.x) + abs(sa.y - sb.y) > 12.0:
                    continue
                if boxes_overlap(
                    box_corners(sa.x, sa.y, sa.heading, sa.length, sa.width),
                    box_corners(sb.x, sb.y, sb.heading, sb.length, sb.width),
                ):
                    loser = db if db.idx > da.idx else da
                    killed.add(loser.agent_id)
                    despawns.append({"agent": loser.agent_id, "t": t + 1, "reason": "conflict"})

        survivors = []
        for d in live:
            if d.agent_id in killed:
                continue
            if not d.stationary:
                ns = nxt[d.agent_id]
                s_next, _, _ = d.plan.route.line.project(ns.x, ns.y)
                if s_next >= d.plan.route.line.length - END_MARGIN - d.length / 2.0:
                    despawns.append({"agent": d.agent_id, "t": t + 1, "reason": "route_end"})
                    continue
                d.state = ns
            survivors.append(d)
        live = survivors

    metadata = {
        "seed": int(seed),
        "requested_agents": int(n_agents),
        "created_agents": len(drivers),
        "spawn_shortfall": int(shortfall + len(pending)),
        "despawns": despawns,
        "stationary_ids": [d.agent_id for d in drivers if d.stationary],
        "expert": "pursuit+idm",
    }
    return SceneLog(map_spec, map_id_of(map_spec), limits.dt, log_steps, metadata)
