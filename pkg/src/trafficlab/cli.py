"""Command-line pipeline: gen -> train -> sim -> eval, plus sweeps and plots.

Every stage writes into a directory named by a hash of the config sections
that determine its output, so re-running with an identical config and seed
is a no-op.  The resolved config is saved next to each stage's outputs, and
writing it is the final step: a stage directory containing config.json is
treated as complete.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import metrics as M
from .config import (POLICY_NAMES, RunConfig, config_hash, load_config,
                     save_config, validate_config)
from .errors import ConfigError, TrafficLabError
from .models.scoring import likelihood_score
from .models.training import (build_dataset, load_model, save_model,
                              train_bits, train_occupancy)
from .raster import build_map_stack
from .simengine import load_bundle, load_rollout, run_rollout, save_rollout
from .world.expert import gen_expert_log
from .world.logio import read_log, write_log
from .world.mapgen import gen_map

_GEN_SECTIONS = ("gen", "expert", "dynamics", "seed")
_TRAIN_SECTIONS = _GEN_SECTIONS + ("raster", "model", "train")
_SIM_SECTIONS = _TRAIN_SECTIONS + ("planner", "sim")
_EVAL_SECTIONS = _SIM_SECTIONS + ("metrics",)

SWEEP_AXES = {
    "cost_weights": (0.0, 1.0, 10.0, 100.0),
    "horizon": (10, 20, 50, 80),
    "ou_sigma": None,  # defaults to cfg.metrics.ou_sigmas
}


def _stage_dir(cfg, stage, sections):
    return os.path.join(cfg.out_dir, f"{stage}-{config_hash(cfg, *sections)}")


def _is_complete(stage_dir):
    return os.path.isfile(os.path.join(stage_dir, "config.json"))


def _finish(cfg, stage_dir):
    save_config(cfg, os.path.join(stage_dir, "config.json"))


def _log_paths(gen_dir):
    d = os.path.join(gen_dir, "logs")
    if not os.path.isdir(d):
        raise ConfigError(f"no logs directory under {gen_dir}")
    return [os.path.join(d, f) for f in sorted(os.listdir(d))
            if f.endswith(".log")]


def cmd_gen(cfg, echo=print):
    """Generate the synthetic expert logs described by cfg.gen."""
    out = _stage_dir(cfg, "gen", _GEN_SECTIONS)
    if _is_complete(out):
        echo(f"gen: cached at {out}")
        return out
    os.makedirs(os.path.join(out, "logs"), exist_ok=True)
    limits = cfg.dynamics.limits
    maps = cfg.gen.maps
    for i in range(cfg.gen.n_logs):
        spec = maps[i % len(maps)]
        seed = int(np.random.SeedSequence([cfg.seed, i]).generate_state(1)[0])
        graph = gen_map(spec)
        log = gen_expert_log(graph, spec, cfg.expert, limits, seed,
                             cfg.gen.steps, cfg.gen.n_agents)
        write_log(log, os.path.join(out, "logs", f"scene_{i:03d}.log"))
    _finish(cfg, out)
    echo(f"gen: wrote {cfg.gen.n_logs} logs to {out}")
    return out


def cmd_train(cfg, gen_dir=None, echo=print):
    """Train goal, control, and occupancy models on the generated logs."""
    out = _stage_dir(cfg, "train", _TRAIN_SECTIONS)
    if _is_complete(out):
        echo(f"train: cached at {out}")
        return out
    gen_dir = gen_dir or cmd_gen(cfg, echo=echo)
    logs = [read_log(p) for p in _log_paths(gen_dir)]
    os.makedirs(out, exist_ok=True)

    dataset = build_dataset(logs, cfg.raster, cfg.model,
                            stride=cfg.gen.sample_stride)
    goal_res, pol_res = train_bits(dataset, cfg.raster, cfg.model, cfg.train,
                                   cfg.dynamics.limits)
    occ_res = train_occupancy(dataset, cfg.raster, cfg.model, cfg.train)
    save_model(os.path.join(out, "goal.npz"), goal_res.net, cfg.raster,
               cfg.model, extra={"best_val": goal_res.best_val})
    save_model(os.path.join(out, "policy.npz"), pol_res.net, cfg.raster,
               cfg.model, extra={"best_val": pol_res.best_val})
    save_model(os.path.join(out, "occupancy.npz"), occ_res.net, cfg.raster,
               cfg.model, extra={"best_val": occ_res.best_val})
    curves = {"goal": goal_res.curves, "policy": pol_res.curves,
              "occupancy": occ_res.curves}
    with open(os.path.join(out, "curves.json"), "w") as f:
        json.dump(curves, f, indent=2, sort_keys=True)
    _finish(cfg, out)
    echo(f"train: checkpoints in {out}")
    return out


def _scene_paths(cfg, gen_dir):
    paths = _log_paths(gen_dir)
    n = cfg.sim.scenes if getattr(cfg.sim, "scenes", 0) else len(paths)
    return paths[:n]


def _rollout_name(scene_idx, policy, trial):
    return f"scene_{scene_idx:03d}_{policy}_t{trial}.json"


def cmd_sim(cfg, gen_dir=None, train_dir=None, echo=print):
    """Roll out the configured policy over scenes x trials."""
    if cfg.sim.policy not in POLICY_NAMES:
        raise ConfigError(f"unknown policy {cfg.sim.policy!r}; "
                          f"choose from {', '.join(POLICY_NAMES)}")
    out = _stage_dir(cfg, "sim", _SIM_SECTIONS)
    if _is_complete(out):
        echo(f"sim: cached at {out}")
        return out
    gen_dir = gen_dir or cmd_gen(cfg, echo=echo)
    bundle = None
    if cfg.sim.policy != "log_replay":
        train_dir = train_dir or cmd_train(cfg, gen_dir=gen_dir, echo=echo)
        bundle = load_bundle(os.path.join(train_dir, "goal.npz"),
                             os.path.join(train_dir, "policy.npz"))
    os.makedirs(os.path.join(out, "rollouts"), exist_ok=True)
    n_events = 0
    for si, path in enumerate(_scene_paths(cfg, gen_dir)):
        log = read_log(path)
        for trial in range(cfg.sim.trials):
            seed = int(np.random.SeedSequence(
                [cfg.seed, 1000 + si, trial]).generate_state(1)[0])
            roll = run_rollout(log, cfg.sim.policy, seed, cfg, bundle=bundle,
                               steps=cfg.sim.steps)
            save_rollout(os.path.join(out, "rollouts",
                                      _rollout_name(si, cfg.sim.policy, trial)),
                         roll)
            n_events += len(roll.events)
    _finish(cfg, out)
    echo(f"sim: rollouts in {out} ({n_events} failure events)")
    return out


def _scene_profiles(rollouts, grid, mcfg):
    origin, shape = M.density_grid(grid, mcfg.density_cell)
    profiles = []
    for r in rollouts:
        pos = M.rollout_positions(r)
        profiles.append(M.kde_density(pos, origin, shape, mcfg.density_cell,
                                      mcfg.kde_bandwidth))
    mask = M.drivable_cell_mask(grid, origin, shape, mcfg.density_cell)
    return profiles, mask


def evaluate_rollouts(cfg, scene_logs, scene_rollouts, occupancy=None,
                      policy=""):
    """MetricReport over scenes; scene_rollouts[i] lists trials of scene i."""
    mcfg = cfg.metrics
    frs, covs, divs, likes = [], (0, 0), [], []
    flat_rolls, flat_logs = [], []
    for log, rolls in zip(scene_logs, scene_rollouts):
        stack = build_map_stack(log.map_spec, cfg.raster,
                                saturation=cfg.planner.distance_saturation)
        frs.append(M.failure_rates(rolls, stack.grid))
        profiles, mask = _scene_profiles(rolls, stack.grid, mcfg)
        normed = [p for p in profiles if p.normalized]
        c = M.coverage(normed, mcfg.coverage_threshold, mask)
        covs = (covs[0] + c[0], covs[1] + c[1])
        divs.append(M.diversity(normed))
        if occupancy is not None and rolls:
            score = likelihood_score(rolls[0].steps, occupancy, stack.grid,
                                     cfg.raster,
                                     horizon=mcfg.likelihood_horizon)
            likes.append(score.score)
        flat_rolls.extend(rolls)
        flat_logs.extend([log] * len(rolls))
    dm = M.dataset_metrics(flat_rolls, flat_logs, mcfg)

    def mean(xs):
        return float(np.mean(xs)) if xs else 0.0

    rep = M.MetricReport(
        policy=policy or (flat_rolls[0].policy if flat_rolls else ""),
        n_scenes=len(scene_logs),
        n_trials=max((len(r) for r in scene_rollouts), default=0),
        fr=mean([f.fr for f in frs]),
        coll_fr=mean([f.coll_fr for f in frs]),
        offroad_fr=mean([f.offroad_fr for f in frs]),
        coll_any=mean([f.coll_any for f in frs]),
        coll_front=mean([f.coll_front for f in frs]),
        coll_rear=mean([f.coll_rear for f in frs]),
        coll_side=mean([f.coll_side for f in frs]),
        offroad_fraction=mean([f.offroad_fraction for f in frs]),
        coverage_drivable=covs[0],
        coverage_nondrivable=covs[1],
        diversity=mean(divs),
        speed_dist=dm.speed_dist,
        lon_acc_dist=dm.lon_acc_dist,
        lat_acc_dist=dm.lat_acc_dist,
        jerk_dist=dm.jerk_dist,
        sade=dm.sade,
        sfde=dm.sfde,
        likelihood=mean(likes) if likes else None,
        extras={"truncated": dm.truncated},
    )
    return rep.validate()


def cmd_eval(cfg, gen_dir=None, sim_dir=None, train_dir=None, echo=print):
    """Score one sim stage's rollouts and emit a MetricReport."""
    out = _stage_dir(cfg, "eval", _EVAL_SECTIONS)
    if _is_complete(out):
        echo(f"eval: cached at {out}")
        return out
    gen_dir = gen_dir or cmd_gen(cfg, echo=echo)
    sim_dir = sim_dir or cmd_sim(cfg, gen_dir=gen_dir, echo=echo)
    occupancy = None
    if cfg.sim.policy != "log_replay":
        train_dir = train_dir or _stage_dir(cfg, "train", _TRAIN_SECTIONS)
        occ_path = os.path.join(train_dir, "occupancy.npz")
        if os.path.isfile(occ_path):
            occupancy = load_model(occ_path, "occupancy")[0]

    scene_logs, scene_rollouts = [], []
    for si, path in enumerate(_scene_paths(cfg, gen_dir)):
        scene_logs.append(read_log(path))
        rolls = []
        for trial in range(cfg.sim.trials):
            rp = os.path.join(sim_dir, "rollouts",
                              _rollout_name(si, cfg.sim.policy, trial))
            rolls.append(load_rollout(rp))
        scene_rollouts.append(rolls)
    rep = evaluate_rollouts(cfg, scene_logs, scene_rollouts,
                            occupancy=occupancy, policy=cfg.sim.policy)
    os.makedirs(out, exist_ok=True)
    M.write_reports_json(os.path.join(out, "report.json"), [rep])
    M.write_reports_csv(os.path.join(out, "report.csv"), [rep])
    _finish(cfg, out)
    echo(f"eval: {cfg.sim.policy} FR={rep.fr:.1f}% coverage={rep.coverage_drivable} "
         f"diversity={rep.diversity:.3f} -> {out}")
    return out


def _sweep_value_cfg(cfg, axis, value):
    if axis == "cost_weights":
        return replace(cfg, planner=replace(cfg.planner,
                                            w_collision=float(value)))
    if axis == "horizon":
        h = int(value)
        return replace(cfg, model=replace(cfg.model, horizon=h,
                                          occupancy_horizon=h))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def cmd_sweep(cfg, axis, values=None, echo=print):
    """Run the pipeline across one ablation axis and collect reports."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; "
                          f"choose from {', '.join(SWEEP_AXES)}")
    if values is None:
        values = SWEEP_AXES[axis] or cfg.metrics.ou_sigmas
    out = os.path.join(
        cfg.out_dir,
        f"sweep-{axis}-{config_hash(cfg, *_EVAL_SECTIONS)}")
    if _is_complete(out):
        echo(f"sweep: cached at {out}")
        return out
    reports = []

    if axis == "ou_sigma":
        gen_dir = cmd_gen(cfg, echo=echo)
        train_dir = cmd_train(cfg, gen_dir=gen_dir, echo=echo)
        occupancy = load_model(os.path.join(train_dir, "occupancy.npz"),
                               "occupancy")[0]
        for sigma in values:
            scores = []
            for path in _scene_paths(cfg, gen_dir):
                log = read_log(path)
                pert = M.ou_perturb_log(log, cfg.metrics.ou_theta,
                                        float(sigma), cfg.seed)
                stack = build_map_stack(log.map_spec, cfg.raster,
                                        saturation=cfg.planner.distance_saturation)
                res = likelihood_score(pert.steps, occupancy, stack.grid,
                                       cfg.raster,
                                       horizon=cfg.metrics.likelihood_horizon)
                scores.append(res.score)
            rep = M.MetricReport(policy=cfg.sim.policy,
                                 n_scenes=len(scores),
                                 likelihood=float(np.mean(scores)),
                                 extras={"axis": axis, "value": float(sigma)})
            reports.append(rep)
            echo(f"sweep ou_sigma={sigma}: likelihood={rep.likelihood:.5f}")
    else:
        for value in values:
            vcfg = _sweep_value_cfg(cfg, axis, value)
            eval_dir = cmd_eval(vcfg, echo=echo)
            rep = M.read_reports_json(os.path.join(eval_dir, "report.json"))[0]
            rep.extras = dict(rep.extras, axis=axis,
                              value=float(value))
            reports.append(rep)
            echo(f"sweep {axis}={value}: FR={rep.fr:.1f}%")

    os.makedirs(out, exist_ok=True)
    M.write_reports_json(os.path.join(out, "reports.json"), reports)
    M.write_reports_csv(os.path.join(out, "reports.csv"), reports)
    _finish(cfg, out)
    echo(f"sweep: {len(reports)} reports in {out}")
    return out


def cmd_plot(archive, out_path=None, echo=print):
    """Render a rollout archive (or a sweep report list) to SVG."""
    from . import plotting
    if not os.path.isfile(archive):
        raise ConfigError(f"no such file: {archive}")
    if archive.endswith(".json") and os.path.basename(archive).startswith(
            ("scene_", "rollout")):
        roll = load_rollout(archive)
        out_path = out_path or archive[:-5] + ".svg"
        plotting.save_rollout_svg(roll, out_path)
    else:
        reports = M.read_reports_json(archive)
        out_path = out_path or archive[:-5] + ".svg"
        plotting.save_sweep_svg(reports, out_path)
    echo(f"plot: {out_path}")
    return out_path


def _build_parser():
    p = argparse.ArgumentParser(
        prog="trafficlab",
        description="Desk-scale closed-loop traffic simulation pipeline.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, policy=False):
        sp.add_argument("--config", help="JSON config file (defaults apply)")
        sp.add_argument("--seed", type=int, help="override the run seed")
        sp.add_argument("--out", help="override the output root directory")
        sp.add_argument("--jobs", type=int, help="worker processes (reserved)")
        sp.add_argument("--scenes", type=int,
                        help="limit the number of scenes")
        sp.add_argument("--trials", type=int, help="trials per scene")
        sp.add_argument("--steps", type=int, help="simulated steps per trial")
        if policy:
            sp.add_argument("--policy", choices=POLICY_NAMES,
                            help="agent policy to roll out")

    common(sub.add_parser("gen", help="generate synthetic expert logs"))
    common(sub.add_parser("train", help="train the three models"))
    common(sub.add_parser("sim", help="run closed-loop rollouts"), policy=True)
    common(sub.add_parser("eval", help="score rollouts into a MetricReport"),
           policy=True)
    sp = sub.add_parser("sweep", help="ablation sweep over one axis")
    common(sp, policy=True)
    sp.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sp.add_argument("--values",
                    help="comma-separated axis values (defaults per axis)")
    sp = sub.add_parser("plot", help="render a rollout archive to SVG")
    sp.add_argument("archive", help="rollout .json or sweep reports.json")
    sp.add_argument("--out", dest="plot_out", help="output SVG path")
    return p


def _resolve_config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) \
        else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "jobs", None) is not None:
        cfg = replace(cfg, jobs=args.jobs)
    sim = cfg.sim
    if getattr(args, "scenes", None) is not None:
        sim = replace(sim, scenes=args.scenes)
    if getattr(args, "trials", None) is not None:
        sim = replace(sim, trials=args.trials)
    if getattr(args, "steps", None) is not None:
        sim = replace(sim, steps=args.steps)
    if getattr(args, "policy", None):
        sim = replace(sim, policy=args.policy)
    cfg = replace(cfg, sim=sim)
    validate_config(cfg)
    return cfg


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            cmd_plot(args.archive, args.plot_out)
            return 0
        cfg = _resolve_config(args)
        if args.command == "gen":
            cmd_gen(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "sim":
            cmd_sim(cfg)
        elif args.command == "eval":
            cmd_eval(cfg)
        elif args.command == "sweep":
            values = None
            if args.values:
                values = [float(v) for v in args.values.split(",")]
            cmd_sweep(cfg, args.axis, values)
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except TrafficLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
