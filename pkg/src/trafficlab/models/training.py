"""Dataset assembly and training loops for the goal, control and occupancy nets.

A Dataset keeps the light per-sample targets dense (goals, futures, neighbor
tracks, occupancy cells) and rebuilds context rasters on demand; when the
full context block fits under a memory cap it is memoized instead.
"""

import math
from dataclasses import dataclass

import numpy as np

from .. import nn
from ..config import ModelConfig, RasterConfig, _from_dict
from ..dynamics import integrate_controls
from ..errors import CheckpointError, TrainingError
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..raster import build_map_stack, rasterize_context
from ..world.samples import extract_samples
from .nets import GoalNet, OccupancyNet, PolicyNets, occupancy_stride


@dataclass
class Dataset:
    """Supervised samples from a set of scene logs, plus their map stacks."""

    rcfg: object
    horizon: int
    occ_horizon: int
    occ_grid: int            # occupancy cells per side
    logs: list
    stacks: list
    refs: list               # (log_idx, agent_id, t) per sample
    ego_speed: np.ndarray    # (N,)
    goal: np.ndarray         # (N, 3)
    cell_flat: np.ndarray    # (N,) flat goal cell over the raster
    residual: np.ndarray     # (N, 3)
    future: np.ndarray       # (N, H, 4)
    occ_cell: np.ndarray     # (N, T) flat coarse cell, -1 off-grid
    nb_state: np.ndarray     # (N, M, 4)
    nb_future: np.ndarray    # (N, M, H, 3)
    nb_valid: np.ndarray     # (N, M, H) bool
    nb_present: np.ndarray   # (N, M) bool
    nb_px: np.ndarray        # (N, M, 2) raster (col, row) of neighbor centers
    dropped_offwindow: int
    _cache: object = None

    def __len__(self):
        return len(self.refs)

    def context(self, i):
        li, aid, t = self.refs[i]
        ctx = rasterize_context(self.logs[li].steps, aid, t, self.stacks[li].grid,
                                self.rcfg)
        return ctx.channels

    def context_batch(self, idx):
        idx = np.asarray(idx, dtype=int)
        if self._cache is not None:
            miss = [i for i in idx if i not in self._cache]
            for i in miss:
                self._cache[int(i)] = self.context(int(i))
            return np.stack([self._cache[int(i)] for i in idx])
        return np.stack([self.context(int(i)) for i in idx])


def build_dataset(logs, rcfg, mcfg, stride=5, cache_limit_mb=512):
    """Extract training samples from scene logs.

    Raises TrainingError if the horizon settings are inconsistent or no log
    yields a single sample.
    """
    H = mcfg.horizon
    T = mcfg.occupancy_horizon
    if T > H:
        raise TrainingError(f"occupancy horizon {T} exceeds sample horizon {H}")
    size, ps = rcfg.size_px, rcfg.pixel_size
    k_occ = occupancy_stride(ps)
    n_occ = size // k_occ
    cs = ps * k_occ
    occ_center = (n_occ - 1) / 2.0
    center = (size - 1) / 2.0
    M = mcfg.max_neighbors

    stacks, refs, rows = [], [], []
    dropped = 0
    for li, log in enumerate(logs):
        stacks.append(build_map_stack(log.map_spec, rcfg))
        res = extract_samples(log, rcfg, H, stride=stride, max_neighbors=M)
        dropped += res.dropped_offwindow
        for s in res.samples:
            refs.append((li, s.agent_id, s.t))
            rows.append(s)
    n = len(rows)
    if n == 0:
        raise TrainingError("no training samples extracted from the given logs")

    ego_speed = np.array([s.ego_speed for s in rows])
    goal = np.stack([s.goal for s in rows])
    cell_flat = np.array([s.goal_cell[0] * size + s.goal_cell[1] for s in rows])
    residual = np.stack([s.residual for s in rows])
    future = np.stack([s.future for s in rows])

    occ_cell = np.full((n, T), -1, dtype=int)
    for i, s in enumerate(rows):
        cc = np.rint(s.future[:T, 0] / cs + occ_center).astype(int)
        rr = np.rint(s.future[:T, 1] / cs + occ_center).astype(int)
        ok = (rr >= 0) & (rr < n_occ) & (cc >= 0) & (cc < n_occ)
        occ_cell[i, ok] = rr[ok] * n_occ + cc[ok]

    nb_state = np.zeros((n, M, 4))
    nb_future = np.zeros((n, M, H, 3))
    nb_valid = np.zeros((n, M, H), dtype=bool)
    nb_present = np.zeros((n, M), dtype=bool)
    nb_px = np.zeros((n, M, 2))
    for i, s in enumerate(rows):
        for m, tr in enumerate(s.neighbors[:M]):
            nb_state[i, m] = tr.state
            nb_future[i, m] = tr.future
            nb_valid[i, m] = tr.valid
            nb_present[i, m] = True
            nb_px[i, m] = (center + tr.state[0] / ps, center + tr.state[1] / ps)

    ds = Dataset(rcfg, H, T, n_occ, list(logs), stacks, refs, ego_speed, goal,
                 cell_flat, residual, future, occ_cell, nb_state, nb_future,
                 nb_valid, nb_present, nb_px, dropped)
    ctx_bytes = n * rcfg.channels * size * size * 8
    if ctx_bytes <= cache_limit_mb * 2 ** 20:
        ds._cache = {}
    return ds


@dataclass
class TrainResult:
    net: object
    curves: list        # dicts {iter, train, val}
    best_val: float
    train_idx: np.ndarray
    val_idx: np.ndarray


def _split(n, tcfg, rng):
    perm = rng.permutation(n)
    n_val = int(round(tcfg.val_frac * n))
    if n - n_val < 1:
        n_val = 0
    return perm[n_val:], perm[:n_val]


def _run_loop(net, loss_fn, dataset, tcfg, iters, label):
    """Shared minibatch loop with periodic validation and best-val selection."""
    n = len(dataset)
    rng = np.random.default_rng(tcfg.seed)
    train_idx, val_idx = _split(n, tcfg, rng)
    hold = val_idx if len(val_idx) else train_idx
    opt = nn.AdamState(net.params(), lr=tcfg.lr, betas=(tcfg.beta1, tcfg.beta2),
                       eps=tcfg.eps)
    curves = []
    best_val = math.inf
    best_arrays = net.state_arrays()

    def evaluate(idx):
        total, cnt = 0.0, 0
        for lo in range(0, len(idx), 64):
            chunk = idx[lo : lo + 64]
            total += float(loss_fn(chunk).data) * len(chunk)
            cnt += len(chunk)
        return total / max(cnt, 1)

    for it in range(iters):
        bs = min(tcfg.batch_size, len(train_idx))
        bidx = rng.choice(train_idx, size=bs, replace=len(train_idx) < tcfg.batch_size)
        loss = loss_fn(bidx)
        lval = float(loss.data)
        if not np.isfinite(lval):
            raise TrainingError(f"{label}: non-finite loss at iteration {it}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        if it % tcfg.log_every == 0 or it == iters - 1:
            vloss = evaluate(hold)
            curves.append({"iter": it, "train": lval, "val": vloss})
            if vloss < best_val:
                best_val = vloss
                best_arrays = net.state_arrays()
    net.load_state_arrays(best_arrays)
    return TrainResult(net, curves, best_val, train_idx, val_idx)


def train_goalnet(dataset, rcfg, mcfg, tcfg, rng=None):
    """Fit the goal map: cell cross-entropy plus residual regression."""
    rng = rng or np.random.default_rng(tcfg.seed)
    net = GoalNet(rng, rcfg.channels, mcfg)
    size = rcfg.size_px

    def loss_fn(idx):
        ctx = nn.as_tensor(dataset.context_batch(idx))
        out = net(ctx)
        B = len(idx)
        logits = out[:, 0].reshape(B, size * size)
        resid = out[:, 1:4].reshape(B, 3, size * size)
        cells = dataset.cell_flat[idx]
        return nn.cross_entropy_cells(logits, cells) + nn.masked_residual_loss(
            resid, dataset.residual[idx], cells)

    return _run_loop(net, loss_fn, dataset, tcfg, tcfg.iters_goal, "goalnet")


def _masked_traj_loss(xs, ys, ths, ref, valid):
    """Mean squared pose error over valid (row, step) entries only."""
    ref = np.asarray(ref, float)
    v = valid.astype(float)
    ex = (xs - ref[:, :, 0]) ** 2
    ey = (ys - ref[:, :, 1]) ** 2
    eth = ((ths - ref[:, :, 2]).wrap_angle()) ** 2
    return ((ex + ey + eth) * v).sum() * (1.0 / max(v.sum(), 1.0))


def train_policy_nets(dataset, rcfg, mcfg, tcfg, limits, rng=None):
    """Jointly fit the goal-conditioned controller, the goal-free cloning head
    and the neighbor predictor on the shared encoder."""
    rng = rng or np.random.default_rng(tcfg.seed)
    net = PolicyNets(rng, rcfg.channels, mcfg)
    zeros = lambda b: np.zeros(b)

    def loss_fn(idx):
        idx = np.asarray(idx, dtype=int)
        B = len(idx)
        ctx = nn.as_tensor(dataset.context_batch(idx))
        feats, g = net.features(ctx)
        v0 = dataset.ego_speed[idx]
        ref = dataset.future[idx][:, :, :3]

        sp, yw = net.policy_commands(g, v0, dataset.goal[idx])
        xs, ys, ths, _ = integrate_controls(zeros(B), zeros(B), zeros(B), v0,
                                            sp, yw, limits)
        loss = nn.l2_traj_loss(xs, ys, ths, ref)

        sp, yw = net.bc_commands(g, v0)
        xs, ys, ths, _ = integrate_controls(zeros(B), zeros(B), zeros(B), v0,
                                            sp, yw, limits)
        loss = loss + nn.l2_traj_loss(xs, ys, ths, ref)

        brow, mcol = np.nonzero(dataset.nb_present[idx])
        if len(brow):
            st = dataset.nb_state[idx][brow, mcol]
            px = dataset.nb_px[idx][brow, mcol]
            sp, yw = net.neighbor_commands(feats, g, brow, st, px)
            xs, ys, ths, _ = integrate_controls(st[:, 0], st[:, 1], st[:, 2],
                                                st[:, 3], sp, yw, limits)
            loss = loss + _masked_traj_loss(
                xs, ys, ths, dataset.nb_future[idx][brow, mcol],
                dataset.nb_valid[idx][brow, mcol])
        return loss

    return _run_loop(net, loss_fn, dataset, tcfg, tcfg.iters_policy, "policy")


def train_occupancy(dataset, rcfg, mcfg, tcfg, rng=None):
    """Fit per-step future-cell distributions with cross-entropy."""
    rng = rng or np.random.default_rng(tcfg.seed)
    net = OccupancyNet(rng, rcfg.channels, mcfg, rcfg.pixel_size)
    T = dataset.occ_horizon
    n2 = dataset.occ_grid ** 2

    def loss_fn(idx):
        idx = np.asarray(idx, dtype=int)
        B = len(idx)
        ctx = nn.as_tensor(dataset.context_batch(idx))
        out = net(ctx).reshape(B * T, n2)
        cells = dataset.occ_cell[idx].reshape(-1)
        rows = np.nonzero(cells >= 0)[0]
        if not len(rows):
            raise TrainingError("occupancy batch has no on-grid targets")
        return nn.cross_entropy_cells(out[rows], cells[rows])

    return _run_loop(net, loss_fn, dataset, tcfg, tcfg.iters_occupancy, "occupancy")


def train_bits(dataset, rcfg, mcfg, tcfg, limits):
    """Train the full imitation stack; returns (goal result, policy result)."""
    return (
        train_goalnet(dataset, rcfg, mcfg, tcfg),
        train_policy_nets(dataset, rcfg, mcfg, tcfg, limits),
    )


def save_model(path, net, rcfg, mcfg, extra=None):
    """Checkpoint a net together with the configs needed to rebuild it."""
    import dataclasses

    cfgd = {"model": dataclasses.asdict(mcfg), "raster": dataclasses.asdict(rcfg)}
    save_checkpoint(path, net.kind, cfgd, net.state_arrays(), extra=extra)


def build_model(kind, rcfg, mcfg, rng=None):
    rng = rng or np.random.default_rng(0)
    if kind == "goalnet":
        return GoalNet(rng, rcfg.channels, mcfg)
    if kind == "policy":
        return PolicyNets(rng, rcfg.channels, mcfg)
    if kind == "occupancy":
        return OccupancyNet(rng, rcfg.channels, mcfg, rcfg.pixel_size)
    raise CheckpointError(f"unknown model kind {kind!r}")


def load_model(path, expect_kind=None):
    """Rebuild a net from a checkpoint; returns (net, rcfg, mcfg, manifest)."""
    manifest, arrays = load_checkpoint(path, expect_kind)
    cfgd = manifest["config"]
    try:
        mcfg = _from_dict(ModelConfig, cfgd["model"], "model.")
        rcfg = _from_dict(RasterConfig, cfgd["raster"], "raster.")
    except (KeyError, TypeError) as e:
        raise CheckpointError(f"bad config block in {path}: {e}") from e
    net = build_model(manifest["kind"], rcfg, mcfg)
    try:
        net.load_state_arrays(arrays)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"parameter mismatch in {path}: {e}") from e
    return net, rcfg, mcfg, manifest
