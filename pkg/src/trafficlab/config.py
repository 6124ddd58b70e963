"""Run configuration: nested dataclasses, JSON round trip, content hashing."""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Limits
from .errors import ConfigError


@dataclass
class RasterConfig:
    """Ego-centered raster geometry and the map-aligned semantic grid."""

    size_px: int = 96          # ego raster is size_px x size_px
    pixel_size: float = 0.5    # meters per ego-raster pixel
    history: int = 10          # past occupancy frames; channels = 4 + history + 1
    map_pixel_size: float = 0.5
    map_pad: float = 4.0       # meters of margin around the drivable bounds
    roi_n: int = 7

    @property
    def extent(self):
        """Window side length in meters."""
        return self.size_px * self.pixel_size

    @property
    def channels(self):
        return 4 + self.history + 1


@dataclass
class DynamicsConfig:
    v_max: float = 30.0
    a_max: float = 10.0
    omega_max: float = float(np.pi / 2)
    dt: float = 0.1

    @property
    def limits(self):
        return Limits(self.v_max, self.a_max, self.omega_max, self.dt)


@dataclass
class ExpertConfig:
    """Car-following + path-tracking parameters for the scripted drivers."""

    v0: float = 12.0           # desired free speed, m/s
    headway: float = 1.5       # desired time headway T, s
    s0: float = 2.0            # standstill gap, m
    accel: float = 1.5         # max comfortable acceleration a, m/s^2
    brake: float = 2.0         # comfortable braking b, m/s^2
    delta: float = 4.0
    stationary_prob: float = 0.1
    lookahead_base: float = 3.0
    lookahead_time: float = 1.5
    lat_accel: float = 2.0     # lateral accel bound shaping turn speeds
    speed_jitter: float = 0.15
    length_range: tuple = (4.2, 5.0)
    width_range: tuple = (1.8, 2.1)
    entry_frac: float = 0.4    # entries staggered over this fraction of the log
    corridor_range: float = 50.0
    corridor_halfwidth: float = 1.9


@dataclass
class ModelConfig:
    """Shared backbone and head sizes for all networks."""

    enc_channels: tuple = (16, 32, 64, 64)
    feature_dim: int = 64
    mlp_hidden: int = 128
    horizon: int = 20          # decoded control steps H
    max_neighbors: int = 8
    roi_level: int = 2         # encoder stage neighbors crop features from
    roi_n: int = 7
    occupancy_horizon: int = 20


@dataclass
class TrainConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 16
    iters_goal: int = 1500
    iters_policy: int = 1500
    iters_occupancy: int = 1000
    val_frac: float = 0.1
    log_every: int = 100
    seed: int = 0


@dataclass
class PlannerConfig:
    num_goal_samples: int = 50
    temperature: float = 1.0
    alpha: float = 1.0         # collision sharpness
    beta: float = 4.0          # collision offset
    w_collision: float = 10.0
    w_offroad: float = 1.0
    replan_every: int = 5
    distance_saturation: int = 20


@dataclass
class SimConfig:
    steps: int = 200
    trials: int = 5
    policy: str = "bits"
    scenes: int = 0   # how many scene logs to roll out; 0 means all


@dataclass
class GenConfig:
    maps: list = field(default_factory=lambda: [
        {"kind": "straight", "params": {"length": 200.0, "lanes": 2, "lane_width": 3.5}, "seed": 0},
        {"kind": "arc", "params": {"radius": 40.0, "span": float(np.pi / 2), "lanes": 2,
                                   "lane_width": 3.5}, "seed": 0},
        {"kind": "four_way", "params": {"arm_length": 60.0, "lane_width": 3.5}, "seed": 0},
    ])
    n_agents: int = 8
    steps: int = 240
    n_logs: int = 24
    sample_stride: int = 5


@dataclass
class MetricsConfig:
    kde_bandwidth: float = 2.0
    density_cell: float = 2.0
    coverage_threshold: float = 1e-3
    offroad_consecutive: int = 11
    front_angle_deg: float = 45.0
    rear_angle_deg: float = 135.0
    hist_bins: int = 20
    speed_max: float = 30.0
    lon_accel_max: float = 10.0
    lat_accel_max: float = 10.0
    jerk_max: float = 10.0
    ou_theta: float = 0.5
    ou_sigmas: tuple = (0.0, 0.5, 1.0, 2.0)
    likelihood_horizon: int = 20


@dataclass
class RunConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    raster: RasterConfig = field(default_factory=RasterConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    expert: ExpertConfig = field(default_factory=ExpertConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    seed: int = 0
    jobs: int = 1
    out_dir: str = "runs"


_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}

POLICY_NAMES = ("bits", "bits_max", "bits_sample", "bc_baseline", "log_replay")


def validate_config(cfg):
    r = cfg.raster
    if r.size_px <= 0 or r.size_px % 16 != 0:
        raise ConfigError("raster size_px must be a positive multiple of 16")
    if min(r.pixel_size, r.map_pixel_size) <= 0:
        raise ConfigError("pixel sizes must be positive")
    if r.history < 1:
        raise ConfigError("raster history must be >= 1")
    if cfg.dynamics.dt <= 0:
        raise ConfigError("dt must be positive")
    if len(cfg.model.enc_channels) != 4:
        raise ConfigError("enc_channels must list 4 stage widths")
    if not 0 <= cfg.model.roi_level <= 4:
        raise ConfigError("roi_level must be in [0, 4]")
    if cfg.planner.num_goal_samples < 1 or cfg.planner.replan_every < 1:
        raise ConfigError("planner counts must be >= 1")
    if cfg.planner.temperature <= 0:
        raise ConfigError("goal sampling temperature must be positive")
    if cfg.sim.policy not in POLICY_NAMES:
        raise ConfigError(f"unknown policy {cfg.sim.policy!r}; pick from {POLICY_NAMES}")
    if not 0 <= cfg.train.val_frac < 0.5:
        raise ConfigError("val_frac must be in [0, 0.5)")
    if cfg.metrics.offroad_consecutive < 1:
        raise ConfigError("offroad_consecutive must be >= 1")
    return cfg


def _from_dict(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping at {path or 'top level'}")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"unknown config keys at {path or 'top level'}: {sorted(unknown)}")
    kwargs = {}
    for key, val in data.items():
        f = names[key]
        if dataclasses.is_dataclass(f.type) and isinstance(val, dict):
            kwargs[key] = _from_dict(f.type, val, f"{path}{key}.")
        elif isinstance(val, list) and key in ("enc_channels", "length_range",
                                               "width_range", "ou_sigmas"):
            kwargs[key] = tuple(val)
        else:
            kwargs[key] = val
    return cls(**kwargs)


def config_from_dict(data):
    return validate_config(_from_dict(RunConfig, data, ""))


def config_to_dict(cfg):
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def load_config(path):
    """Read a JSON config file; missing keys fall back to defaults."""
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    return config_from_dict(data)


def save_config(cfg, path):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def config_hash(cfg, *sections):
    """Stable short hash of the whole config or a subset of its sections."""
    d = config_to_dict(cfg)
    if sections:
        d = {k: d[k] for k in sections}
    blob = json.dumps(d, sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:12]
