"""Receding-horizon likelihood scoring of rollouts under the occupancy model.

For each agent and anchor step, the occupancy net predicts per-step cell
distributions from the agent's context; the score is the mean predicted
probability of the cells the agent actually visits, averaged over anchors and
then over agents.  Visited cells that leave the model's grid contribute 0.
"""

from dataclasses import dataclass

import numpy as np

from ..geometry import ego_rel
from ..raster import rasterize_context
from .infer import occupancy_forward


@dataclass
class LikelihoodResult:
    score: float
    truncated: bool   # some anchor was scored on a prefix shorter than T
    n_anchors: int


def _presence(steps, aid):
    """(birth, death) with death exclusive; lifetimes are contiguous."""
    birth = None
    for t, frame in enumerate(steps):
        if aid in frame:
            if birth is None:
                birth = t
        elif birth is not None:
            return birth, t
    return birth, len(steps)


def likelihood_score(steps, net, grid, rcfg, horizon=None, stride=5):
    """Score a state sequence under a trained occupancy net.

    Args:
        steps: sequence of dict agent_id -> AgentState.
        net: OccupancyNet.
        grid: the scene's map-aligned SemanticGrid.
        rcfg: RasterConfig the net was trained with.
        horizon: steps ahead per anchor; defaults to the net's horizon and
            is clamped to it (the net emits one map per predicted step).
        stride: anchor spacing in steps.

    Returns:
        LikelihoodResult; score 0.0 (truncated) when no agent offers a
        scorable anchor.
    """
    T = min(int(horizon), net.horizon) if horizon else net.horizon
    h = rcfg.history
    size, ps = rcfg.size_px, rcfg.pixel_size
    k = net.stride
    n_occ = size // k
    cs = ps * k
    occ_center = (n_occ - 1) / 2.0
    L = len(steps)

    ids = sorted({aid for frame in steps for aid in frame})
    agent_scores = []
    truncated = False
    n_anchors = 0
    for aid in ids:
        birth, death = _presence(steps, aid)
        t0 = birth + h
        anchors = list(range(t0, death - 1 - T + 1, stride))
        if not anchors:
            t0 = min(t0, death - 2)
            if t0 < birth:
                t0 = birth
            if t0 > death - 2:
                continue  # alive for < 2 steps, nothing to score
            anchors = [t0]
            truncated = True
        scores = []
        for t in anchors:
            ctx = rasterize_context(steps, aid, t, grid, rcfg)
            probs = occupancy_forward(net, ctx)
            K = min(T, death - 1 - t)
            ps_k = np.zeros(K)
            for j in range(K):
                rel = ego_rel(steps[t + 1 + j][aid], ctx.ego)
                c = int(round(rel[0] / cs + occ_center))
                r = int(round(rel[1] / cs + occ_center))
                if 0 <= r < n_occ and 0 <= c < n_occ:
                    ps_k[j] = probs[j, r, c]
            if K < T:
                truncated = True
            scores.append(ps_k.mean())
        n_anchors += len(anchors)
        agent_scores.append(float(np.mean(scores)))
    if not agent_scores:
        return LikelihoodResult(0.0, True, 0)
    return LikelihoodResult(float(np.mean(agent_scores)), truncated, n_anchors)
