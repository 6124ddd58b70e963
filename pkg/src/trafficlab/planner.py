"""Cost-based action selection over sampled candidate plans.

Each candidate pairs a sampled goal with the controller's decoded trajectory.
Candidates are scored by a collision term (smooth sigmoid of the nearest-corner
box distance against every predicted neighbor) plus an offroad term (mean of an
oriented crop of the Manhattan distance-to-road map under the vehicle
footprint), and the cheapest candidate wins; exact cost ties fall back to the
goal's likelihood, then to the candidate index.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import GeometryError
from .geometry import box_corners, ego_from_world
from .raster import roi_crop


@dataclass(frozen=True)
class CostWeights:
    """Weights and sharpness constants of the planning cost."""

    w_collision: float = 10.0
    w_offroad: float = 1.0
    alpha: float = 1.0
    beta: float = 4.0

    @classmethod
    def from_config(cls, pcfg):
        return cls(pcfg.w_collision, pcfg.w_offroad, pcfg.alpha, pcfg.beta)


@dataclass
class CandidatePlan:
    """A goal, the decoded controls, and the resulting ego trajectory."""

    goal: object            # GoalPose
    controls: list          # list[Control], length H
    states: list            # list[AgentState], length H (post-step states)
    collision_cost: float = 0.0
    offroad_cost: float = 0.0
    total_cost: float = 0.0


@dataclass
class PlanDecision:
    """Outcome of one planning event."""

    chosen: int
    totals: np.ndarray
    collision: np.ndarray
    offroad: np.ndarray
    tie_break: str          # "cost" | "likelihood" | "index"


def _corner_terms(frame_state, probe_state, include_center):
    """max(|X| - L/2, |Y| - W/2) for probe corners in the frame box's axes."""
    pts = box_corners(probe_state.x, probe_state.y, probe_state.heading,
                      probe_state.length, probe_state.width)
    if include_center:
        pts = np.vstack([pts, [[probe_state.x, probe_state.y]]])
    rel = ego_from_world(pts, (frame_state.x, frame_state.y, frame_state.heading))
    return np.maximum(np.abs(rel[:, 0]) - frame_state.length / 2.0,
                      np.abs(rel[:, 1]) - frame_state.width / 2.0)


def corner_distance(ego, other, literal_max=False):
    """Signed box separation from corner probes, in meters.

    Evaluates max(|X| - L/2, |Y| - W/2) for the other box's corners in the
    ego box's frame and vice versa, plus each box's center in the other's
    frame, and returns the minimum: zero at contact, negative under overlap.
    With ``literal_max`` the reduction over the eight corner terms is a max
    instead (no center probes), which stays positive even for touching boxes;
    it is kept only for comparison.
    """
    for st in (ego, other):
        if st.length <= 0 or st.width <= 0:
            raise GeometryError("corner_distance needs boxes with positive dims")
    terms = np.concatenate([
        _corner_terms(ego, other, not literal_max),
        _corner_terms(other, ego, not literal_max),
    ])
    return float(terms.max() if literal_max else terms.min())


def collision_cost(ego_states, neighbor_trajs, weights, literal_max=False):
    """Smooth collision risk of an ego trajectory against predicted neighbors.

    Per step, the most dangerous neighbor's sigmoid(-alpha * d - beta) is
    taken; step maxima are summed over the horizon.  No neighbors -> 0.
    """
    if not neighbor_trajs:
        return 0.0
    total = 0.0
    for k, ego in enumerate(ego_states):
        worst = -np.inf
        for traj in neighbor_trajs:
            if k >= len(traj):
                continue
            d = corner_distance(ego, traj[k], literal_max=literal_max)
            worst = max(worst, float(expit(-weights.alpha * d - weights.beta)))
        if worst > -np.inf:
            total += worst
    return total


def offroad_cost(ego_states, dmap, roi_n=7):
    """Summed mean distance-map value under the vehicle footprint per step."""
    if not ego_states:
        return 0.0
    xs = np.array([s.x for s in ego_states])
    ys = np.array([s.y for s in ego_states])
    hs = np.array([s.heading for s in ego_states])
    ps = dmap.pixel_size
    cols = (xs - dmap.origin[0]) / ps
    rows = (ys - dmap.origin[1]) / ps
    win = (ego_states[0].length / ps, ego_states[0].width / ps)
    crops = roi_crop(dmap.cells.astype(float), np.column_stack([cols, rows]),
                     hs, win, n=roi_n)
    return float(crops.mean(axis=(1, 2)).sum())


def evaluate_candidates(candidates, neighbor_trajs, weights, dmap=None, roi_n=7,
                        literal_max=False):
    """Fill in the cost fields of every candidate; returns the cost arrays."""
    K = len(candidates)
    coll = np.zeros(K)
    off = np.zeros(K)
    for i, cand in enumerate(candidates):
        coll[i] = collision_cost(cand.states, neighbor_trajs, weights,
                                 literal_max=literal_max)
        if dmap is not None:
            off[i] = offroad_cost(cand.states, dmap, roi_n=roi_n)
        cand.collision_cost = float(coll[i])
        cand.offroad_cost = float(off[i])
        cand.total_cost = float(weights.w_collision * coll[i]
                                + weights.w_offroad * off[i])
    totals = weights.w_collision * coll + weights.w_offroad * off
    return totals, coll, off


def select_action(candidates, neighbor_trajs, weights, dmap=None, roi_n=7,
                  literal_max=False):
    """Score all candidates and pick the cheapest one.

    Ties on exact total cost go to the candidate whose goal has the highest
    log-likelihood; remaining ties to the lowest index.
    """
    if not candidates:
        raise ValueError("select_action needs at least one candidate")
    totals, coll, off = evaluate_candidates(candidates, neighbor_trajs, weights,
                                            dmap=dmap, roi_n=roi_n,
                                            literal_max=literal_max)
    best = totals.min()
    tied = np.nonzero(totals == best)[0]
    if len(tied) == 1:
        chosen, reason = int(tied[0]), "cost"
    else:
        lls = np.array([candidates[i].goal.log_likelihood for i in tied])
        best_ll = lls.max()
        tied_ll = tied[lls == best_ll]
        if len(tied_ll) == 1:
            chosen, reason = int(tied_ll[0]), "likelihood"
        else:
            chosen, reason = int(tied_ll.min()), "index"
    return PlanDecision(chosen, totals, coll, off, reason)
