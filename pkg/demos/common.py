"""Shared miniature configuration for the demo scripts.

Small rasters, small nets, a couple of minutes of work on one core.  Every
demo writes under the same --out root so the generation and training stages
are shared between them.
"""

import dataclasses

from trafficlab.config import RunConfig


def tiny_config(out_dir, seed=3):
    base = RunConfig()
    return dataclasses.replace(
        base,
        seed=seed,
        out_dir=out_dir,
        gen=dataclasses.replace(base.gen, n_logs=6, n_agents=4, steps=100),
        raster=dataclasses.replace(base.raster, size_px=32, pixel_size=1.0,
                                   history=4, map_pixel_size=1.0, roi_n=5),
        model=dataclasses.replace(base.model, enc_channels=(8, 12, 16, 16),
                                  feature_dim=24, mlp_hidden=32, horizon=10,
                                  max_neighbors=4, roi_n=5,
                                  occupancy_horizon=10),
        train=dataclasses.replace(base.train, lr=1e-3, batch_size=8,
                                  iters_goal=300, iters_policy=400,
                                  iters_occupancy=200, log_every=100),
        planner=dataclasses.replace(base.planner, num_goal_samples=6),
        sim=dataclasses.replace(base.sim, steps=80, trials=3, scenes=4),
        metrics=dataclasses.replace(base.metrics, likelihood_horizon=10),
    )
