"""Network definitions for the imitation stack.

All nets consume the same ego-centered context raster (semantic layers plus
occupancy history).  Two map-shaped decoders (goal map, future-occupancy map)
decode with skip connections back up from the strided trunk; the control nets
pool the deepest features into a global vector and emit per-step commands as
offsets from the current speed, so a freshly initialized (zero-head) net
holds speed and drives straight.
"""

import numpy as np

from .. import nn
from ..nn import Conv, Linear, Network

# fixed input scaling so pose/speed features enter the MLPs at O(1)
POS_SCALE = 0.1
SPEED_SCALE = 0.1


def fine_to_level(px, level):
    """Map continuous raster pixel coords to feature-map coords at a stride level.

    Feature pixel j at stride k = 2**level covers raster pixels [j*k, (j+1)*k);
    its center sits at raster coordinate j*k + (k - 1) / 2.
    """
    k = 2 ** level
    return (np.asarray(px, float) - (k - 1) / 2.0) / k


def occupancy_stride(pixel_size):
    """Power-of-two raster stride whose cells land closest to 2 m."""
    j = int(round(np.log2(2.0 / pixel_size)))
    return 2 ** min(max(j, 0), 3)


class Encoder(Network):
    """Conv trunk producing feature maps at strides 1, 2, 4 and 8."""

    def __init__(self, rng, in_channels, cfg):
        ch = cfg.enc_channels
        self.stem = Conv(rng, in_channels, ch[0])
        self.downs = [Conv(rng, ch[i - 1], ch[i], stride=2) for i in range(1, 4)]
        self.mixes = [Conv(rng, ch[i], ch[i]) for i in range(1, 4)]

    def __call__(self, x):
        f = self.stem(x).relu()
        feats = [f]
        for down, mix in zip(self.downs, self.mixes):
            f = mix(down(f).relu()).relu()
            feats.append(f)
        return feats


class GoalNet(Network):
    """U-shaped net emitting the 4-channel goal map at raster resolution.

    Output channels: 0 goal-cell logits, 1/2 sub-cell (dx, dy) residuals in
    meters, 3 goal heading in radians.  The head is zero-initialized, so an
    untrained net scores every cell equally with zero residuals.
    """

    kind = "goalnet"

    def __init__(self, rng, in_channels, cfg):
        ch = cfg.enc_channels
        self.in_channels = in_channels
        self.encoder = Encoder(rng, in_channels, cfg)
        self.ups = [
            Conv(rng, ch[3] + ch[2], ch[2]),
            Conv(rng, ch[2] + ch[1], ch[1]),
            Conv(rng, ch[1] + ch[0], ch[0]),
        ]
        self.head = Conv(rng, ch[0], 4, zero_init=True)

    def __call__(self, x):
        feats = self.encoder(x)
        f = feats[3]
        for conv, skip in zip(self.ups, (feats[2], feats[1], feats[0])):
            f = conv(nn.concat([nn.upsample2x(f), skip], axis=1)).relu()
        return self.head(f)  # (B, 4, S, S)


class OccupancyNet(Network):
    """Future-occupancy scorer: per-step cell logits on a coarse grid.

    The output grid is the raster downsampled by `occupancy_stride(pixel_size)`,
    one channel per future step; softmax over each channel is the predicted
    distribution of the agent's position at that step.
    """

    kind = "occupancy"

    def __init__(self, rng, in_channels, cfg, pixel_size):
        ch = cfg.enc_channels
        self.in_channels = in_channels
        self.horizon = cfg.occupancy_horizon
        self.stride = occupancy_stride(pixel_size)
        self.level = int(round(np.log2(self.stride)))
        self.encoder = Encoder(rng, in_channels, cfg)
        self.ups = [
            Conv(rng, ch[i] + ch[i - 1], ch[i - 1]) for i in range(3, self.level, -1)
        ]
        self.head = Conv(rng, ch[self.level], cfg.occupancy_horizon, zero_init=True)

    def __call__(self, x):
        feats = self.encoder(x)
        f = feats[3]
        lev = 3
        for conv in self.ups:
            lev -= 1
            f = conv(nn.concat([nn.upsample2x(f), feats[lev]], axis=1)).relu()
        return self.head(f)  # (B, T, S/stride, S/stride)


class PolicyNets(Network):
    """Shared-trunk control nets: goal-conditioned head, plain-cloning head,
    and the per-neighbor trajectory predictor.

    All three heads read the same encoder; the control heads emit (speed
    offset, yaw rate) pairs per step, interpreted relative to the subject's
    current speed.
    """

    kind = "policy"

    def __init__(self, rng, in_channels, cfg):
        ch = cfg.enc_channels
        H = cfg.horizon
        F = cfg.feature_dim
        hid = cfg.mlp_hidden
        self.in_channels = in_channels
        self.horizon = H
        self.roi_level = cfg.roi_level
        self.roi_n = cfg.roi_n
        self.encoder = Encoder(rng, in_channels, cfg)
        self.g_fc = Linear(rng, ch[3], F)
        # goal-conditioned controller: [global, x, y, cos, sin, speed]
        self.pol_fc1 = Linear(rng, F + 5, hid)
        self.pol_fc2 = Linear(rng, hid, hid)
        self.pol_out = Linear(rng, hid, 2 * H, zero_init=True)
        # goal-free cloning baseline: [global, speed]
        self.bc_fc1 = Linear(rng, F + 1, hid)
        self.bc_fc2 = Linear(rng, hid, hid)
        self.bc_out = Linear(rng, hid, 2 * H, zero_init=True)
        # neighbor predictor: oriented feature crop + neighbor pose -> embedding
        roi_ch = ch[cfg.roi_level]
        self.nb_fc = Linear(rng, roi_ch * cfg.roi_n ** 2 + 5, F)
        self.pred_fc1 = Linear(rng, 2 * F, hid)
        self.pred_fc2 = Linear(rng, hid, hid)
        self.pred_out = Linear(rng, hid, 2 * H, zero_init=True)

    def features(self, x):
        """Encoder feature pyramid plus the pooled global vector."""
        feats = self.encoder(x)
        g = self.g_fc(feats[3].mean(axis=(2, 3))).relu()
        return feats, g

    def policy_commands(self, g, ego_speed, goal):
        """Commanded (speeds, yaw_rates) Tensors (B, H) for given goals.

        Args:
            g: Tensor (B, F) global features.
            ego_speed: array (B,) current speeds.
            goal: array (B, 3) ego-frame goal (x, y, heading).
        """
        ego_speed = np.asarray(ego_speed, float)
        goal = np.asarray(goal, float)
        gi = np.column_stack([
            goal[:, 0] * POS_SCALE,
            goal[:, 1] * POS_SCALE,
            np.cos(goal[:, 2]),
            np.sin(goal[:, 2]),
            ego_speed * SPEED_SCALE,
        ])
        h = self.pol_fc1(nn.concat([g, nn.as_tensor(gi)], axis=1)).relu()
        out = self.pol_out(self.pol_fc2(h).relu())
        H = self.horizon
        return out[:, :H] + ego_speed[:, None], out[:, H:]

    def bc_commands(self, g, ego_speed):
        """Goal-free commanded (speeds, yaw_rates) Tensors (B, H)."""
        ego_speed = np.asarray(ego_speed, float)
        si = ego_speed[:, None] * SPEED_SCALE
        h = self.bc_fc1(nn.concat([g, nn.as_tensor(si)], axis=1)).relu()
        out = self.bc_out(self.bc_fc2(h).relu())
        H = self.horizon
        return out[:, :H] + ego_speed[:, None], out[:, H:]

    def neighbor_commands(self, feats, g, batch_idx, nb_state, nb_px):
        """Commanded (speeds, yaw_rates) Tensors (A, H) for a flat neighbor list.

        Args:
            feats: encoder feature list from `features`.
            g: Tensor (B, F).
            batch_idx: int array (A,), which batch row each neighbor belongs to.
            nb_state: array (A, 4) ego-frame (x, y, heading, speed).
            nb_px: array (A, 2) raster-pixel (col, row) of each neighbor center.
        """
        batch_idx = np.asarray(batch_idx, dtype=int)
        nb_state = np.asarray(nb_state, float)
        fmap = feats[self.roi_level]
        lvl_px = fine_to_level(nb_px, self.roi_level)
        crops = []
        for a, b in enumerate(batch_idx):
            crop = nn.roi_crop_t(
                fmap[int(b)], lvl_px[a], nb_state[a, 2],
                (self.roi_n, self.roi_n), self.roi_n,
            )
            crops.append(crop.reshape(-1))
        roi = nn.stack(crops, axis=0)  # (A, C*n*n)
        pose = np.column_stack([
            nb_state[:, 0] * POS_SCALE,
            nb_state[:, 1] * POS_SCALE,
            np.cos(nb_state[:, 2]),
            np.sin(nb_state[:, 2]),
            nb_state[:, 3] * SPEED_SCALE,
        ])
        emb = self.nb_fc(nn.concat([roi, nn.as_tensor(pose)], axis=1)).relu()
        h = self.pred_fc1(nn.concat([g[batch_idx], emb], axis=1)).relu()
        out = self.pred_out(self.pred_fc2(h).relu())
        H = self.horizon
        return out[:, :H] + nb_state[:, 3][:, None], out[:, H:]
