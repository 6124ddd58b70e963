"""Run the whole pipeline at toy scale and print the metric table.

Generates synthetic expert traffic on three small maps, trains the goal,
control, and occupancy models, rolls the planning policy over a few scenes,
and scores the result.  Stages are content-addressed under --out, so a
second run with the same seed is nearly instant.
"""

import argparse
import os

import trafficlab.cli as cli
from trafficlab.metrics import read_reports_json

from common import tiny_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/demo", help="output root")
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--policy", default="bits",
                    choices=("bits", "bits_sample", "bits_max", "bc_baseline",
                             "log_replay"))
    args = ap.parse_args()

    cfg = tiny_config(args.out, args.seed)
    import dataclasses
    cfg = dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim,
                                                           policy=args.policy))

    print(f"== pipeline into {args.out} (seed {cfg.seed}) ==")
    gen_dir = cli.cmd_gen(cfg)
    train_dir = None
    if args.policy != "log_replay":
        train_dir = cli.cmd_train(cfg, gen_dir=gen_dir)
    sim_dir = cli.cmd_sim(cfg, gen_dir=gen_dir, train_dir=train_dir)
    eval_dir = cli.cmd_eval(cfg, gen_dir=gen_dir, sim_dir=sim_dir,
                            train_dir=train_dir)

    rep = read_reports_json(os.path.join(eval_dir, "report.json"))[0]
    print()
    print(f"policy             {rep.policy}")
    print(f"scenes x trials    {rep.n_scenes} x {rep.n_trials}")
    print(f"failure rate       {rep.fr:.1f}%  "
          f"(collision {rep.coll_fr:.1f}%, offroad {rep.offroad_fr:.1f}%)")
    print(f"coverage           {rep.coverage_drivable} drivable cells")
    print(f"diversity          {rep.diversity:.2f} m")
    print(f"speed / jerk dist  {rep.speed_dist:.2f} / {rep.jerk_dist:.2f}")
    print(f"sADE / sFDE        {rep.sade:.2f} / {rep.sfde:.2f} m")
    if rep.likelihood is not None:
        print(f"likelihood         {rep.likelihood:.4f}")
    print()
    print(f"full report: {os.path.join(eval_dir, 'report.json')}")


if __name__ == "__main__":
    main()
