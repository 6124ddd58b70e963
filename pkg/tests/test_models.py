"""Goal map, controllers, neighbor predictor, occupancy scorer, training.

The trained-model tests memorize a small scripted dataset: agents that stand
still, cruise, accelerate, brake, and turn, plus two neighbor pairs (one
braking, one constant-velocity).  Group spacing keeps every interaction
inside its own raster window.
"""

import dataclasses

import numpy as np
import pytest

from trafficlab import nn
from trafficlab.config import RunConfig
from trafficlab.dynamics import Control, integrate_controls, integrate_controls_np, step
from trafficlab.errors import CheckpointError, TrainingError
from trafficlab.models import (
    GoalNet,
    OccupancyNet,
    PolicyNets,
    bc_forward,
    build_dataset,
    goal_map_from_output,
    goalnet_forward,
    likelihood_score,
    load_model,
    occupancy_forward,
    policy_forward,
    predictor_forward,
    sample_goals,
    save_model,
    train_goalnet,
    train_occupancy,
    train_policy_nets,
)
from trafficlab.models.training import _masked_traj_loss
from trafficlab.raster import RasterContext, build_map_stack, rasterize_context
from trafficlab.world.mapgen import gen_map, map_spec
from trafficlab.world.types import AgentState, SceneLog


def small_cfg():
    base = RunConfig()
    return dataclasses.replace(
        base,
        raster=dataclasses.replace(base.raster, size_px=32, pixel_size=1.0,
                                   history=4, map_pixel_size=1.0, roi_n=5),
        model=dataclasses.replace(base.model, enc_channels=(8, 12, 16, 16),
                                  feature_dim=32, mlp_hidden=48, horizon=10,
                                  max_neighbors=4, roi_n=5,
                                  occupancy_horizon=10),
        train=dataclasses.replace(base.train, lr=1e-3, batch_size=8,
                                  iters_goal=600, iters_policy=700,
                                  iters_occupancy=300, log_every=100, seed=0),
    )


def scripted_log(spec, graph, limits, variant=0):
    """Deterministic maneuvers on the straight map, 60 steps at 10 Hz."""
    v = variant

    def hold(speed):
        return lambda t, cur: Control(speed, 0.0)

    def ramp(rate):
        return lambda t, cur: Control(cur + rate, 0.0)

    def turn(speed, yaw):
        return lambda t, cur: Control(speed, yaw)

    agents = [
        ("stat", 40.0 + 5 * v, -1.75, 0.0, hold(0.0)),
        ("cruise", 100.0 + 5 * v, -1.75, 10.0 + v, hold(10.0 + v)),
        ("accel", 210.0 + 5 * v, -1.75, 2.0 + v, ramp(0.25 - 0.05 * v)),
        ("turn", 360.0 + 5 * v, -1.75, 6.0 - 0.5 * v, turn(6.0 - 0.5 * v,
                                                           0.4 - 0.75 * v)),
        ("brake_f", 440.0 + 5 * v, -1.75, 10.0 - v, ramp(-0.45)),
        ("brake_l", 450.0 + 5 * v, -1.75, 10.0 - v, ramp(-0.45)),
        ("cv_a", 250.0 + 5 * v, 1.75, 8.0 - v, hold(8.0 - v)),
        ("cv_b", 258.0 + 5 * v, 1.75, 8.0 - v, hold(8.0 - v)),
    ]
    frame = {
        aid: AgentState(aid, x, y, 0.0, v0, 4.5, 2.0)
        for aid, x, y, v0, _ in agents
    }
    frames = [frame]
    for t in range(59):
        cur = frames[-1]
        nxt = {}
        for aid, _, _, _, ctl in agents:
            st = cur[aid]
            nxt[aid] = step(st, ctl(t, st.speed), limits)
        frames.append(nxt)
    return SceneLog(spec, graph.map_id, limits.dt, frames)


@pytest.fixture(scope="module")
def world():
    cfg = small_cfg()
    spec = map_spec("straight", {"length": 520.0, "lanes": 2, "lane_width": 3.5})
    graph = gen_map(spec)
    limits = cfg.dynamics.limits
    logs = [scripted_log(spec, graph, limits, variant=i) for i in range(2)]
    stack = build_map_stack(spec, cfg.raster)
    return cfg, logs, stack


@pytest.fixture(scope="module")
def data(world):
    cfg, logs, _ = world
    return build_dataset(logs, cfg.raster, cfg.model, stride=10)


def component_losses(ds, goal_net, pol_net, occ_net, limits):
    """Per-model training-objective values over the whole dataset."""
    idx = np.arange(len(ds))
    size = ds.rcfg.size_px
    out = {}
    with nn.no_grad():
        ctx = nn.as_tensor(ds.context_batch(idx))

        g_out = goal_net(ctx)
        B = len(idx)
        logits = g_out[:, 0].reshape(B, size * size)
        resid = g_out[:, 1:4].reshape(B, 3, size * size)
        out["goal"] = float((nn.cross_entropy_cells(logits, ds.cell_flat[idx])
                             + nn.masked_residual_loss(resid, ds.residual[idx],
                                                       ds.cell_flat[idx])).data)

        feats, g = pol_net.features(ctx)
        v0 = ds.ego_speed[idx]
        zeros = np.zeros(B)
        sp, yw = pol_net.policy_commands(g, v0, ds.goal[idx])
        xs, ys, ths, _ = integrate_controls(zeros, zeros, zeros, v0, sp, yw,
                                            limits)
        out["policy"] = float(nn.l2_traj_loss(xs, ys, ths,
                                              ds.future[idx][:, :, :3]).data)

        brow, mcol = np.nonzero(ds.nb_present[idx])
        st = ds.nb_state[idx][brow, mcol]
        px = ds.nb_px[idx][brow, mcol]
        sp, yw = pol_net.neighbor_commands(feats, g, brow, st, px)
        xs, ys, ths, _ = integrate_controls(st[:, 0], st[:, 1], st[:, 2],
                                            st[:, 3], sp, yw, limits)
        out["predictor"] = float(_masked_traj_loss(
            xs, ys, ths, ds.nb_future[idx][brow, mcol],
            ds.nb_valid[idx][brow, mcol]).data)

        T = ds.occ_horizon
        n2 = ds.occ_grid ** 2
        occ = occ_net(ctx).reshape(B * T, n2)
        cells = ds.occ_cell[idx].reshape(-1)
        rows = np.nonzero(cells >= 0)[0]
        out["occupancy"] = float(nn.cross_entropy_cells(occ[rows],
                                                        cells[rows]).data)
    return out


@pytest.fixture(scope="module")
def trained(world, data):
    cfg, logs, _ = world
    limits = cfg.dynamics.limits
    rng = np.random.default_rng(cfg.train.seed)
    init = component_losses(data, GoalNet(rng, cfg.raster.channels, cfg.model),
                            PolicyNets(rng, cfg.raster.channels, cfg.model),
                            OccupancyNet(rng, cfg.raster.channels, cfg.model,
                                         cfg.raster.pixel_size), limits)
    goal_res = train_goalnet(data, cfg.raster, cfg.model, cfg.train)
    pol_res = train_policy_nets(data, cfg.raster, cfg.model, cfg.train, limits)
    occ_res = train_occupancy(data, cfg.raster, cfg.model, cfg.train)
    final = component_losses(data, goal_res.net, pol_res.net, occ_res.net,
                             limits)
    return {
        "goal": goal_res, "policy": pol_res, "occ": occ_res,
        "init": init, "final": final,
    }


# -- goal map decode and sampling (no training needed) ----------------------


def make_gmap(logits, pixel_size=1.0):
    logits = np.asarray(logits, float)
    out = np.zeros((4,) + logits.shape)
    out[0] = logits
    return goal_map_from_output(out, pixel_size)


def test_untrained_goalnet_uniform(world):
    cfg, logs, stack = world
    net = GoalNet(np.random.default_rng(0), cfg.raster.channels, cfg.model)
    ctx = rasterize_context(logs[0].steps, "cruise", 10, stack.grid, cfg.raster)
    gmap = goalnet_forward(net, ctx, cfg.raster.pixel_size)
    S = cfg.raster.size_px
    assert np.all(gmap.logits == 0.0)
    assert np.allclose(gmap.log_probs(), -np.log(S * S), atol=1e-12)
    assert np.all(gmap.dx == 0.0) and np.all(gmap.dy == 0.0)
    assert np.all(gmap.heading == 0.0)


def test_goalnet_rejects_wrong_context_shape(world):
    cfg, _, _ = world
    net = GoalNet(np.random.default_rng(0), cfg.raster.channels, cfg.model)
    bad = np.zeros((cfg.raster.channels + 1, 32, 32))
    with pytest.raises(ValueError):
        goalnet_forward(net, bad, cfg.raster.pixel_size)
    with pytest.raises(ValueError):
        goal_map_from_output(np.zeros((3, 8, 8)), 1.0)


def test_goalnet_ignores_content_outside_window(world):
    cfg, logs, stack = world
    net = GoalNet(np.random.default_rng(0), cfg.raster.channels, cfg.model)
    base = logs[0].steps
    moved = [dict(f) for f in base]
    far = AgentState("far", 40.0 + 200.0, -1.75, 0.0, 3.0, 4.5, 2.0)
    for t in range(len(moved)):
        moved[t]["far"] = far.replace(x=far.x + 0.5 * t)
    a = rasterize_context(base, "stat", 10, stack.grid, cfg.raster)
    b = rasterize_context(moved, "stat", 10, stack.grid, cfg.raster)
    assert np.array_equal(a.channels, b.channels)
    ga = goalnet_forward(net, a, cfg.raster.pixel_size)
    gb = goalnet_forward(net, b, cfg.raster.pixel_size)
    assert np.array_equal(ga.logits, gb.logits)


def test_decoded_goals_stay_inside_window():
    rng = np.random.default_rng(4)
    out = rng.normal(0, 10.0, (4, 8, 8))  # wild residuals get clamped
    gmap = goal_map_from_output(out, 2.0)
    half = 8 * 2.0 / 2.0
    for r in range(8):
        for c in range(8):
            gp = gmap.decode_cell(r, c)
            assert abs(gp.x) <= half and abs(gp.y) <= half
            assert -np.pi < gp.heading <= np.pi


def test_sample_goals_one_hot_all_identical():
    logits = np.full((8, 8), -50.0)
    logits[2, 5] = 50.0
    gmap = make_gmap(logits)
    goals = sample_goals(gmap, 10, 1.0, np.random.default_rng(0))
    assert all(g.cell == (2, 5) for g in goals)


def test_sample_goals_temperature_limit_concentrates():
    rng = np.random.default_rng(1)
    gmap = make_gmap(rng.normal(size=(8, 8)))
    flat = int(np.argmax(gmap.logits))
    want = divmod(flat, 8)
    goals = sample_goals(gmap, 20, 1e-8, np.random.default_rng(2))
    assert all(g.cell == want for g in goals)


def test_sample_goals_max_mode_returns_argmax():
    rng = np.random.default_rng(3)
    gmap = make_gmap(rng.normal(size=(8, 8)))
    flat = int(np.argmax(gmap.logits))
    goals = sample_goals(gmap, 50, 1.0, np.random.default_rng(0), mode="max")
    assert len(goals) == 1
    assert goals[0].cell == divmod(flat, 8)


def test_sample_goals_uniform_frequencies_within_3_sigma():
    gmap = make_gmap(np.zeros((4, 4)))
    rng = np.random.default_rng(2024)
    counts = np.zeros(16)
    reps, k = 1000, 50
    for _ in range(reps):
        for g in sample_goals(gmap, k, 1.0, rng):
            counts[g.cell[0] * 4 + g.cell[1]] += 1
    n = reps * k
    p = 1.0 / 16.0
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 3.0 * sigma)


def test_sample_goals_validation():
    gmap = make_gmap(np.zeros((4, 4)))
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_goals(gmap, 0, 1.0, rng)
    with pytest.raises(ValueError):
        sample_goals(gmap, 5, 0.0, rng)
    with pytest.raises(ValueError):
        sample_goals(gmap, 5, 1.0, rng, mode="weird")


# -- control heads (untrained structural behavior) --------------------------


def test_zero_init_policy_holds_speed_and_heading(world):
    cfg, logs, stack = world
    net = PolicyNets(np.random.default_rng(0), cfg.raster.channels, cfg.model)
    ctx = rasterize_context(logs[0].steps, "cruise", 10, stack.grid, cfg.raster)
    sp, yw = policy_forward(net, ctx, 7.0, (5.0, 0.0, 0.0))
    assert np.allclose(sp, 7.0) and np.all(yw == 0.0)
    sp, yw = bc_forward(net, ctx, 7.0)
    assert np.allclose(sp, 7.0) and np.all(yw == 0.0)


def test_policy_goal_conditioning_changes_controls(world):
    cfg, logs, stack = world
    rng = np.random.default_rng(5)
    net = PolicyNets(rng, cfg.raster.channels, cfg.model)
    net.pol_out.w.data = rng.normal(0, 0.05, net.pol_out.w.data.shape)
    ctx = rasterize_context(logs[0].steps, "cruise", 10, stack.grid, cfg.raster)
    sp_a, yw_a = policy_forward(net, ctx, 7.0, (8.0, 0.0, 0.0))
    sp_b, yw_b = policy_forward(net, ctx, 7.0, (-2.0, 4.0, 1.0))
    assert not (np.allclose(sp_a, sp_b) and np.allclose(yw_a, yw_b))


def test_predictor_zero_neighbors_empty(world):
    cfg, logs, stack = world
    net = PolicyNets(np.random.default_rng(0), cfg.raster.channels, cfg.model)
    ctx = rasterize_context(logs[0].steps, "stat", 10, stack.grid, cfg.raster)
    assert ctx.neighbors == []
    out = predictor_forward(net, ctx, cfg.raster, cfg.dynamics.limits)
    assert out.shape == (0, cfg.model.horizon, 4)


def test_predictor_is_permutation_equivariant(world):
    cfg, logs, stack = world
    rng = np.random.default_rng(6)
    net = PolicyNets(rng, cfg.raster.channels, cfg.model)
    net.pred_out.w.data = rng.normal(0, 0.05, net.pred_out.w.data.shape)
    base = rasterize_context(logs[0].steps, "brake_f", 10, stack.grid,
                             cfg.raster)
    assert len(base.neighbors) >= 1
    extra = base.neighbors[0].replace(agent_id="ghost", y=base.neighbors[0].y + 3.0)
    fwdctx = RasterContext(base.channels, base.ego, [base.neighbors[0], extra],
                           base.t)
    revctx = RasterContext(base.channels, base.ego, [extra, base.neighbors[0]],
                           base.t)
    a = predictor_forward(net, fwdctx, cfg.raster, cfg.dynamics.limits)
    b = predictor_forward(net, revctx, cfg.raster, cfg.dynamics.limits)
    assert np.allclose(a[0], b[1]) and np.allclose(a[1], b[0])


# -- dataset construction ---------------------------------------------------


def test_dataset_counts_and_targets(world, data):
    cfg, logs, _ = world
    # 8 agents x 5 anchors x 2 logs
    assert len(data) == 80
    assert data.dropped_offwindow == 0
    stat_rows = [i for i, (li, aid, t) in enumerate(data.refs) if aid == "stat"]
    center = (cfg.raster.size_px - 1) / 2.0
    cell = int(round(center)) * cfg.raster.size_px + int(round(center))
    for i in stat_rows:
        assert data.cell_flat[i] == cell
        assert np.allclose(data.goal[i], 0.0)


def test_build_dataset_validation(world):
    cfg, logs, _ = world
    with pytest.raises(TrainingError):
        build_dataset([], cfg.raster, cfg.model, stride=10)
    bad = dataclasses.replace(cfg.model, occupancy_horizon=99)
    with pytest.raises(TrainingError):
        build_dataset(logs, cfg.raster, bad, stride=10)


# -- trained models ---------------------------------------------------------


def test_all_four_losses_drop_below_ten_percent(trained):
    for name in ("goal", "policy", "predictor", "occupancy"):
        init, final = trained["init"][name], trained["final"][name]
        assert final < 0.1 * init, f"{name}: {final:.4f} vs initial {init:.4f}"


def test_goal_argmax_memorizes_cells(world, data, trained):
    cfg, _, _ = world
    net = trained["goal"].net
    idx = trained["goal"].train_idx
    with nn.no_grad():
        out = net(nn.as_tensor(data.context_batch(idx))).data
    S = cfg.raster.size_px
    pred = out[:, 0].reshape(len(idx), S * S).argmax(axis=1)
    hit = float(np.mean(pred == data.cell_flat[idx]))
    assert hit >= 0.9, f"argmax accuracy {hit:.2f}"


def test_policy_reaches_commanded_goals(world, data, trained):
    cfg, _, _ = world
    limits = cfg.dynamics.limits
    net = trained["policy"].net
    idx = trained["policy"].val_idx
    if len(idx) < 5:
        idx = np.arange(len(data))
    with nn.no_grad():
        ctx = nn.as_tensor(data.context_batch(idx))
        _, g = net.features(ctx)
        sp, yw = net.policy_commands(g, data.ego_speed[idx], data.goal[idx])
    B = len(idx)
    zeros = np.zeros(B)
    traj = integrate_controls_np(zeros, zeros, zeros, data.ego_speed[idx],
                                 sp.data, yw.data, limits)
    gaps = np.hypot(traj[:, -1, 0] - data.goal[idx][:, 0],
                    traj[:, -1, 1] - data.goal[idx][:, 1])
    assert np.mean(gaps < 1.0) >= 0.8, f"endpoint gaps {np.sort(gaps)[-3:]}"


def test_policy_from_rest_with_origin_goal_stays_put(world, data, trained):
    cfg, logs, stack = world
    limits = cfg.dynamics.limits
    net = trained["policy"].net
    ctx = rasterize_context(logs[0].steps, "stat", 20, stack.grid, cfg.raster)
    sp, yw = policy_forward(net, ctx, 0.0, (0.0, 0.0, 0.0))
    traj = integrate_controls_np(np.zeros(1), np.zeros(1), np.zeros(1),
                                 np.zeros(1), sp[None], yw[None], limits)
    assert np.hypot(traj[0, -1, 0], traj[0, -1, 1]) < 0.5


def test_policy_endpoints_track_their_goals(world, data, trained):
    cfg, _, _ = world
    limits = cfg.dynamics.limits
    net = trained["policy"].net
    idx = np.arange(len(data))
    with nn.no_grad():
        ctx = nn.as_tensor(data.context_batch(idx))
        _, g = net.features(ctx)
        sp, yw = net.policy_commands(g, data.ego_speed[idx], data.goal[idx])
    traj = integrate_controls_np(np.zeros(len(idx)), np.zeros(len(idx)),
                                 np.zeros(len(idx)), data.ego_speed[idx],
                                 sp.data, yw.data, limits)
    ends = traj[:, -1, :2]
    own = np.hypot(ends[:, 0] - data.goal[idx, 0],
                   ends[:, 1] - data.goal[idx, 1])
    perm = np.roll(idx, 7)
    other = np.hypot(ends[:, 0] - data.goal[perm, 0],
                     ends[:, 1] - data.goal[perm, 1])
    assert own.mean() < other.mean()


def constant_velocity_rows(data):
    """(sample, neighbor) pairs whose true future is exactly linear."""
    rows = []
    for i in range(len(data)):
        for m in np.nonzero(data.nb_present[i])[0]:
            valid = data.nb_valid[i, m]
            if valid.sum() < 3:
                continue
            fut = data.nb_future[i, m][valid]
            d = np.diff(fut[:, :2], axis=0)
            if np.allclose(d, d[0], atol=1e-9) and np.allclose(
                    fut[:, 2], fut[0, 2], atol=1e-9):
                rows.append((i, m))
    return rows


def test_predictor_constant_velocity_ade(world, data, trained):
    cfg, _, _ = world
    limits = cfg.dynamics.limits
    net = trained["policy"].net
    rows = constant_velocity_rows(data)
    assert rows, "dataset lost its constant-velocity neighbor pairs"
    idx = np.array(sorted({i for i, _ in rows}))
    pos = {v: k for k, v in enumerate(idx)}
    with nn.no_grad():
        ctx = nn.as_tensor(data.context_batch(idx))
        feats, g = net.features(ctx)
        brow = np.array([pos[i] for i, _ in rows])
        st = np.stack([data.nb_state[i, m] for i, m in rows])
        px = np.stack([data.nb_px[i, m] for i, m in rows])
        sp, yw = net.neighbor_commands(feats, g, brow, st, px)
    traj = integrate_controls_np(st[:, 0], st[:, 1], st[:, 2], st[:, 3],
                                 sp.data, yw.data, limits)
    ades = []
    for k, (i, m) in enumerate(rows):
        valid = data.nb_valid[i, m]
        gaps = np.hypot(traj[k, valid, 0] - data.nb_future[i, m][valid, 0],
                        traj[k, valid, 1] - data.nb_future[i, m][valid, 1])
        ades.append(gaps.mean())
    assert float(np.mean(ades)) < 0.5, f"ADE {np.mean(ades):.3f}"


def test_occupancy_channels_sum_to_one(world, data, trained):
    cfg, logs, stack = world
    for net in (OccupancyNet(np.random.default_rng(0), cfg.raster.channels,
                             cfg.model, cfg.raster.pixel_size),
                trained["occ"].net):
        ctx = rasterize_context(logs[0].steps, "cruise", 10, stack.grid,
                                cfg.raster)
        probs = occupancy_forward(net, ctx)
        assert probs.shape[0] == cfg.model.occupancy_horizon
        assert np.allclose(probs.sum(axis=(1, 2)), 1.0, atol=1e-9)
        assert np.all(probs >= 0.0)


def test_occupancy_concentrates_on_stationary_agents(world, data, trained):
    cfg, logs, stack = world
    net = trained["occ"].net
    ctx = rasterize_context(logs[0].steps, "stat", 20, stack.grid, cfg.raster)
    probs = occupancy_forward(net, ctx)
    n_occ = probs.shape[1]
    center = int(round((n_occ - 1) / 2.0))
    hits = sum(np.unravel_index(np.argmax(probs[k]), probs[k].shape)
               == (center, center) for k in range(probs.shape[0]))
    assert hits == probs.shape[0], f"argmax on ego cell for {hits} steps only"


def test_training_is_deterministic(world, data):
    cfg, _, _ = world
    tcfg = dataclasses.replace(cfg.train, iters_goal=60, log_every=20)
    a = train_goalnet(data, cfg.raster, cfg.model, tcfg)
    b = train_goalnet(data, cfg.raster, cfg.model, tcfg)
    assert a.curves == b.curves
    assert a.best_val == b.best_val
    sa, sb = a.net.state_arrays(), b.net.state_arrays()
    assert all(np.array_equal(sa[k], sb[k]) for k in sa)


def test_training_curves_are_logged(trained):
    for key in ("goal", "policy", "occ"):
        curves = trained[key].curves
        assert curves[0]["iter"] == 0
        assert all({"iter", "train", "val"} <= set(c) for c in curves)
        assert trained[key].best_val <= curves[0]["val"]


def test_divergent_training_aborts(world, data):
    cfg, _, _ = world
    from trafficlab.models.training import _run_loop

    net = GoalNet(np.random.default_rng(0), cfg.raster.channels, cfg.model)
    calls = {"n": 0}

    def loss_fn(idx):
        calls["n"] += 1
        scale = float("nan") if calls["n"] > 3 else 1.0
        return (net.head.w * scale).sum()

    tcfg = dataclasses.replace(cfg.train, log_every=5)
    with pytest.raises(TrainingError, match="non-finite"):
        _run_loop(net, loss_fn, data, tcfg, 20, "poisoned")


# -- checkpoints ------------------------------------------------------------


def test_model_checkpoint_round_trip(world, trained, tmp_path):
    cfg, logs, stack = world
    net = trained["goal"].net
    path = tmp_path / "goal.npz"
    save_model(path, net, cfg.raster, cfg.model, extra={"best_val": 1.25})
    back, rcfg, mcfg, manifest = load_model(path, "goalnet")
    assert rcfg == cfg.raster and mcfg == cfg.model
    assert manifest["extra"]["best_val"] == 1.25
    ctx = rasterize_context(logs[0].steps, "cruise", 10, stack.grid, cfg.raster)
    ga = goalnet_forward(net, ctx, cfg.raster.pixel_size)
    gb = goalnet_forward(back, ctx, cfg.raster.pixel_size)
    assert np.array_equal(ga.logits, gb.logits)
    with pytest.raises(CheckpointError):
        load_model(path, "policy")


# -- likelihood scoring -----------------------------------------------------


class StubOcc:
    """Fixed-logit stand-in with the OccupancyNet attributes scoring reads."""

    def __init__(self, in_channels, horizon, size, stride, center_logit=0.0):
        self.in_channels = in_channels
        self.horizon = horizon
        self.stride = stride
        self.n = size // stride
        self.center_logit = center_logit

    def __call__(self, x):
        out = np.zeros((x.data.shape[0], self.horizon, self.n, self.n))
        if self.center_logit:
            c = int(round((self.n - 1) / 2.0))
            out[:, :, c, c] = self.center_logit
        return nn.as_tensor(out)


def stationary_scene(cfg):
    spec = map_spec("straight", {"length": 80.0, "lanes": 2, "lane_width": 3.5})
    stack = build_map_stack(spec, cfg.raster)
    st = AgentState("a", 40.0, -1.75, 0.0, 0.0, 4.5, 2.0)
    steps = [{"a": st} for _ in range(30)]
    return steps, stack


def test_likelihood_uniform_model_scores_one_over_n(world):
    cfg, _, _ = world
    steps, stack = stationary_scene(cfg)
    net = StubOcc(cfg.raster.channels, 10, cfg.raster.size_px, 2)
    res = likelihood_score(steps, net, stack.grid, cfg.raster)
    assert res.score == pytest.approx(1.0 / net.n ** 2, abs=1e-12)
    assert not res.truncated


def test_likelihood_certain_model_scores_one(world):
    cfg, _, _ = world
    steps, stack = stationary_scene(cfg)
    net = StubOcc(cfg.raster.channels, 10, cfg.raster.size_px, 2,
                  center_logit=200.0)
    res = likelihood_score(steps, net, stack.grid, cfg.raster)
    assert res.score == pytest.approx(1.0, abs=1e-9)


def test_likelihood_short_sequence_flagged(world):
    cfg, _, _ = world
    steps, stack = stationary_scene(cfg)
    net = StubOcc(cfg.raster.channels, 10, cfg.raster.size_px, 2)
    res = likelihood_score(steps[:8], net, stack.grid, cfg.raster)
    assert res.truncated
    assert 0.0 <= res.score <= 1.0
