"""Dissect a single planning event for one agent.

Loads the demo checkpoints (training them first if needed), picks an agent
in the first generated scene, and walks through one replan: sample goal
candidates from the goal map, decode each into a trajectory, predict the
neighbors, and score everything with the collision and offroad costs.
Prints the candidate cost table and renders the trajectories to SVG.
"""

import argparse
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import trafficlab.cli as cli
from trafficlab.dynamics import integrate_controls_np
from trafficlab.models import (goalnet_forward, policy_controls_batch,
                               policy_features, predictor_forward,
                               sample_goals)
from trafficlab.planner import CandidatePlan, CostWeights, select_action
from trafficlab.raster import build_map_stack, rasterize_context
from trafficlab.simengine import _rel_traj_to_states, load_bundle
from trafficlab.world.logio import read_log

from common import tiny_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/demo", help="output root")
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--scene", type=int, default=0)
    ap.add_argument("--t", type=int, default=None,
                    help="timestep of the replan (default: mid-log)")
    ap.add_argument("--svg", default="runs/demo/planner_anatomy.svg")
    args = ap.parse_args()

    cfg = tiny_config(args.out, args.seed)
    gen_dir = cli.cmd_gen(cfg)
    train_dir = cli.cmd_train(cfg, gen_dir=gen_dir)
    bundle = load_bundle(os.path.join(train_dir, "goal.npz"),
                         os.path.join(train_dir, "policy.npz"))

    log = read_log(cli._log_paths(gen_dir)[args.scene])
    stack = build_map_stack(log.map_spec, cfg.raster,
                            saturation=cfg.planner.distance_saturation)
    if args.t is not None:
        t = args.t
    else:
        t = max(cfg.raster.history, log.n_steps // 2)
    # pick whoever has the busiest window at t
    aid, ctx = None, None
    for cand_aid in sorted(log.steps[t]):
        c = rasterize_context(log.steps, cand_aid, t, stack.grid, cfg.raster)
        if ctx is None or len(c.neighbors) > len(ctx.neighbors):
            aid, ctx = cand_aid, c
    ego = ctx.ego
    print(f"scene {args.scene}, agent {aid} at t={t}: "
          f"({ego.x:.1f}, {ego.y:.1f}) doing {ego.speed:.1f} m/s, "
          f"{len(ctx.neighbors)} neighbors in window")

    rng = np.random.default_rng(args.seed)
    limits = cfg.dynamics.limits
    gmap = goalnet_forward(bundle.goal, ctx, cfg.raster.pixel_size)
    goals = sample_goals(gmap, cfg.planner.num_goal_samples,
                         cfg.planner.temperature, rng)

    _, g = policy_features(bundle.control, ctx)
    goal_arr = np.array([[gp.x, gp.y, gp.heading] for gp in goals])
    sp, yw = policy_controls_batch(bundle.control, g, ego.speed, goal_arr)
    K = len(goals)
    zeros = np.zeros(K)
    rel = integrate_controls_np(zeros, zeros, zeros, np.full(K, ego.speed),
                                sp, yw, limits)
    from trafficlab.dynamics import Control
    cands = [CandidatePlan(gp,
                           [Control(float(a), float(b))
                            for a, b in zip(sp[i], yw[i])],
                           _rel_traj_to_states(rel[i], ego, aid))
             for i, gp in enumerate(goals)]

    preds = predictor_forward(bundle.control, ctx, cfg.raster, limits)
    neighbor_trajs = [_rel_traj_to_states(preds[m], ego,
                                          ctx.neighbors[m].agent_id)
                      for m in range(preds.shape[0])]

    decision = select_action(cands, neighbor_trajs,
                             CostWeights.from_config(cfg.planner),
                             dmap=stack.dmap, roi_n=cfg.raster.roi_n)

    print()
    print("  #  goal (ego frame)    log-lik   collision   offroad     total")
    for i, c in enumerate(cands):
        mark = " <- chosen" if i == decision.chosen else ""
        print(f"  {i}  ({c.goal.x:6.1f},{c.goal.y:6.1f})   "
              f"{c.goal.log_likelihood:8.2f}  {c.collision_cost:9.4f}  "
              f"{c.offroad_cost:8.3f}  {c.total_cost:8.3f}{mark}")
    print(f"\ntie break: {decision.tie_break}")

    fig, ax = plt.subplots(figsize=(6, 6))
    g0 = stack.grid
    h, w = g0.layers[0].shape
    extent = [g0.origin[0] - g0.pixel_size / 2,
              g0.origin[0] + (w - 0.5) * g0.pixel_size,
              g0.origin[1] - g0.pixel_size / 2,
              g0.origin[1] + (h - 0.5) * g0.pixel_size]
    ax.imshow(g0.layers[0], origin="lower", extent=extent, cmap="gray_r",
              alpha=0.35)
    for i, c in enumerate(cands):
        xs = [s.x for s in c.states]
        ys = [s.y for s in c.states]
        if i == decision.chosen:
            ax.plot(xs, ys, color="tab:green", lw=2.5, zorder=5,
                    label="chosen plan")
        else:
            ax.plot(xs, ys, color="tab:blue", lw=1.0, alpha=0.6)
    for traj in neighbor_trajs:
        ax.plot([s.x for s in traj], [s.y for s in traj], color="tab:red",
                lw=1.2, ls="--")
    ax.plot(ego.x, ego.y, "ko", ms=6)
    ax.set_aspect("equal")
    ax.set_xlim(ego.x - 20, ego.x + 20)
    ax.set_ylim(ego.y - 20, ego.y + 20)
    ax.legend(loc="upper right")
    ax.set_title(f"candidates for agent {aid} (red dashed = predicted "
                 "neighbors)")
    os.makedirs(os.path.dirname(args.svg) or ".", exist_ok=True)
    fig.savefig(args.svg)
    plt.close(fig)
    print(f"figure: {args.svg}")


if __name__ == "__main__":
    main()
