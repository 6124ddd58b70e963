"""Core value types for scenes: agents, logs, lane graphs, decision inputs."""

from dataclasses import dataclass, field

import numpy as np
import shapely

from ..errors import GeometryError, LogFormatError
from ..geometry import Polyline, wrap_angle


@dataclass(frozen=True)
class AgentState:
    """Pose, speed, and footprint of one agent at one instant.

    Heading is normalized to (-pi, pi] on construction; length runs along the
    heading axis, width across it.
    """

    agent_id: str
    x: float
    y: float
    heading: float
    speed: float
    length: float
    width: float

    def __post_init__(self):
        vals = (self.x, self.y, self.heading, self.speed, self.length, self.width)
        if not all(np.isfinite(v) for v in vals):
            raise GeometryError(f"non-finite agent state for {self.agent_id!r}")
        if self.speed < 0:
            raise GeometryError(f"negative speed for {self.agent_id!r}")
        if self.length <= 0 or self.width <= 0:
            raise GeometryError(f"non-positive footprint for {self.agent_id!r}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", float(wrap_angle(self.heading)))
        object.__setattr__(self, "speed", float(self.speed))
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "width", float(self.width))

    @property
    def pose(self):
        return np.array([self.x, self.y, self.heading])

    def replace(self, **kw):
        d = dict(
            agent_id=self.agent_id,
            x=self.x,
            y=self.y,
            heading=self.heading,
            speed=self.speed,
            length=self.length,
            width=self.width,
        )
        d.update(kw)
        return AgentState(**d)


@dataclass(frozen=True)
class SpawnPoint:
    """An entry pose plus the ids of the routes that may start there."""

    x: float
    y: float
    heading: float
    route_ids: tuple


@dataclass(frozen=True)
class Route:
    """A complete drivable path an agent can follow across the map."""

    route_id: str
    line: Polyline
    kind: str  # "lane" | "through" | "left" | "right"


@dataclass
class LaneGraph:
    """Static road structure: centerlines, drivable area, entries, routes."""

    map_id: str
    centerlines: list  # list[Polyline], used for the semantic raster layers
    drivable: object  # shapely (Multi)Polygon
    spawn_points: list  # list[SpawnPoint]
    routes: dict  # route_id -> Route
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    yield_zone: tuple = None  # (cx, cy, radius) of an unsignalized crossing

    def contains(self, xs, ys):
        """Vectorized drivable-area membership test (boundary points count)."""
        return shapely.intersects_xy(self.drivable, np.asarray(xs, float), np.asarray(ys, float))


class SceneLog:
    """A recorded scene: per-step agent states over a fixed-dt timeline.

    steps[t] maps agent_id -> AgentState; an agent is present for one
    contiguous block of steps (its lifespan).
    """

    def __init__(self, map_spec, map_id, dt, steps, metadata=None):
        if dt <= 0:
            raise LogFormatError("log dt must be positive")
        self.map_spec = dict(map_spec)
        self.map_id = str(map_id)
        self.dt = float(dt)
        self.steps = list(steps)
        self.metadata = dict(metadata or {})

    @property
    def n_steps(self):
        return len(self.steps)

    def agent_ids(self):
        seen = {}
        for frame in self.steps:
            for aid in frame:
                seen.setdefault(aid, None)
        return list(seen)

    def lifespan(self, agent_id):
        """(birth, death) step indices; death is exclusive."""
        born = None
        for t, frame in enumerate(self.steps):
            if agent_id in frame:
                if born is None:
                    born = t
            elif born is not None:
                return born, t
        if born is None:
            raise KeyError(agent_id)
        return born, len(self.steps)

    def trajectory(self, agent_id):
        """(ts, states) over the agent's lifespan."""
        birth, death = self.lifespan(agent_id)
        return list(range(birth, death)), [self.steps[t][agent_id] for t in range(birth, death)]


def validate_log(log):
    """Check structural invariants; raises LogFormatError on violation."""
    if log.n_steps == 0:
        raise LogFormatError("log has no steps")
    alive = {}
    dims = {}
    for t, frame in enumerate(log.steps):
        for aid, st in frame.items():
            if st.agent_id != aid:
                raise LogFormatError(f"agent id mismatch at step {t}: {aid!r}")
            if aid in dims:
                if (st.length, st.width) != dims[aid]:
                    raise LogFormatError(f"agent {aid!r} changes footprint at step {t}")
            else:
                dims[aid] = (st.length, st.width)
            prev = alive.get(aid)
            if prev is not None and prev != t - 1 and prev != t:
                raise LogFormatError(f"agent {aid!r} lifespan has a gap before step {t}")
            alive[aid] = t
    return True


@dataclass
class DecisionContext:
    """Everything a policy sees when (re)planning for one agent."""

    t: int
    ego: AgentState
    neighbors: list  # list[AgentState], stable order
    raster: object  # RasterContext
    rng: object  # np.random.Generator for this agent's stochastic choices
    extras: dict = field(default_factory=dict)
