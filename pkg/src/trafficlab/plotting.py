"""SVG rendering of rollouts and sweep summaries.

Trajectory line color encodes the simulation timestep, so diverging trials
and speed changes are visible without animation.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection

from .world.mapgen import gen_map


def _draw_map(ax, map_spec):
    graph = gen_map(map_spec)
    geoms = getattr(graph.drivable, "geoms", [graph.drivable])
    for poly in geoms:
        xs, ys = zip(*poly.exterior.coords)
        ax.fill(xs, ys, color="0.88", zorder=0)
        for hole in poly.interiors:
            hx, hy = zip(*hole.coords)
            ax.fill(hx, hy, color="white", zorder=1)
    for line in graph.centerlines:
        pts = np.asarray(line.points)
        ax.plot(pts[:, 0], pts[:, 1], color="0.75", lw=0.6, ls="--", zorder=2)
    return graph


def _agent_segments(rollout, aid):
    pts, ts = [], []
    for t, frame in enumerate(rollout.steps):
        st = frame.get(aid)
        if st is not None:
            pts.append((st.x, st.y))
            ts.append(t)
    pts = np.asarray(pts)
    if len(pts) < 2:
        return None, None
    segs = np.stack([pts[:-1], pts[1:]], axis=1)
    return segs, np.asarray(ts[:-1], dtype=float)


def rollout_figure(rollout, title=None):
    fig, ax = plt.subplots(figsize=(7, 7))
    _draw_map(ax, rollout.map_spec)
    n = max(rollout.n_steps - 1, 1)
    cmap = plt.get_cmap("viridis")
    for aid in sorted({a for f in rollout.steps for a in f}):
        segs, ts = _agent_segments(rollout, aid)
        if segs is None:
            continue
        lc = LineCollection(segs, cmap=cmap, zorder=3, linewidths=1.4)
        lc.set_array(ts / n)
        lc.set_clim(0.0, 1.0)
        ax.add_collection(lc)
        ax.plot(*segs[0, 0], marker="o", ms=3, color=cmap(0.0), zorder=4)
    for ev in rollout.events:
        st = None
        for frame in rollout.steps[ev.step:ev.step + 1]:
            st = frame.get(ev.agent_id)
        if st is not None:
            ax.plot(st.x, st.y, marker="x", ms=8, color="red", zorder=5)
    sm = plt.cm.ScalarMappable(cmap=cmap, norm=plt.Normalize(0, n * rollout.dt))
    fig.colorbar(sm, ax=ax, fraction=0.04, label="time [s]")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title or f"{rollout.policy} seed={rollout.seed} "
                          f"events={len(rollout.events)}")
    return fig


def save_rollout_svg(rollout, path, title=None):
    fig = rollout_figure(rollout, title=title)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path


def save_sweep_svg(reports, path, fields=("fr", "coll_fr", "offroad_fr")):
    """Line plot of selected report fields over the sweep axis values."""
    xs = [r.extras.get("value", i) for i, r in enumerate(reports)]
    axis = reports[0].extras.get("axis", "value") if reports else "value"
    fig, ax = plt.subplots(figsize=(6, 4))
    if axis == "ou_sigma":
        ys = [r.likelihood for r in reports]
        ax.plot(xs, ys, marker="o", label="likelihood")
        ax.set_ylabel("occupancy likelihood")
    else:
        for f in fields:
            ax.plot(xs, [getattr(r, f) for r in reports], marker="o", label=f)
        ax.set_ylabel("percent")
    ax.set_xlabel(axis)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path
