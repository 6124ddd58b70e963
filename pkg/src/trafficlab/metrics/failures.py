"""Failure-rate aggregation over rollouts of a scene."""

import numpy as np
from dataclasses import dataclass, fields

from ..errors import MetricInputError

_COLLISION_TYPES = ("front", "rear", "side")


@dataclass
class FailureRates:
    """Percent rates over controlled agents, averaged across rollouts.

    fr counts agents with any failure event; coll_* count agents with at
    least one collision of the matching type, each type independently, so
    the per-type numbers can sum past coll_any.  offroad_fraction is the
    mean fraction of an agent's simulated steps spent off the drivable map.
    """

    fr: float = 0.0
    coll_fr: float = 0.0
    offroad_fr: float = 0.0
    coll_any: float = 0.0
    coll_front: float = 0.0
    coll_rear: float = 0.0
    coll_side: float = 0.0
    offroad_fraction: float = 0.0

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _rollout_rates(rollout, grid):
    ids = list(rollout.agent_ids)
    n = len(ids)
    if n == 0:
        return FailureRates()
    failed = {e.agent_id for e in rollout.events}
    coll = {e.agent_id for e in rollout.events if e.kind == "collision"}
    off = {e.agent_id for e in rollout.events if e.kind == "offroad"}
    by_type = {t: {e.agent_id for e in rollout.events
                   if e.kind == "collision" and e.collision_type == t}
               for t in _COLLISION_TYPES}

    fracs = []
    for aid in ids:
        present = 0
        offroad = 0
        for frame in rollout.steps[rollout.t0:]:
            st = frame.get(aid)
            if st is None:
                continue
            present += 1
            if not bool(grid.drivable_at(st.x, st.y)):
                offroad += 1
        fracs.append(offroad / present if present else 0.0)

    pct = 100.0 / n
    return FailureRates(
        fr=pct * len(failed & set(ids)),
        coll_fr=pct * len(coll & set(ids)),
        offroad_fr=pct * len(off & set(ids)),
        coll_any=pct * len(coll & set(ids)),
        coll_front=pct * len(by_type["front"] & set(ids)),
        coll_rear=pct * len(by_type["rear"] & set(ids)),
        coll_side=pct * len(by_type["side"] & set(ids)),
        offroad_fraction=100.0 * float(np.mean(fracs)),
    )


def failure_rates(rollouts, grid):
    """Mean FailureRates over one or more rollouts of the same scene."""
    rollouts = list(rollouts)
    if not rollouts:
        raise MetricInputError("failure_rates needs at least one rollout")
    per = [_rollout_rates(r, grid) for r in rollouts]
    out = FailureRates()
    for f in fields(FailureRates):
        setattr(out, f.name, float(np.mean([getattr(p, f.name) for p in per])))
    return out
