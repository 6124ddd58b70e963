"""Exact earth mover's distance between density profiles, and trial diversity.

The transport problem is solved with successive shortest augmenting paths on
the bipartite support graph (source cells -> sink cells), using node
potentials so every Dijkstra pass sees non-negative reduced costs.  Mass the
two profiles share in the same cell never needs to move, so it is subtracted
first; only the residuals are routed.
"""

import numpy as np

from ..errors import MetricInputError

# hard cap on support size; quadratic memory/time beyond this is a bug upstream
MAX_SUPPORT = 4000

_NORM_TOL = 1e-6
_MASS_TOL = 1e-12


def transport_distance(src_points, src_mass, dst_points, dst_mass):
    """Minimal total cost of moving src mass onto dst mass.

    Euclidean ground distance.  The two mass vectors must have equal totals.
    Runs min-cost max-flow: Dijkstra with potentials per augmentation,
    at most O(n) augmentations for transportation instances.
    """
    pa = np.asarray(src_points, dtype=float).reshape(-1, 2)
    pb = np.asarray(dst_points, dtype=float).reshape(-1, 2)
    wa = np.asarray(src_mass, dtype=float).ravel().copy()
    wb = np.asarray(dst_mass, dtype=float).ravel().copy()
    if not (np.all(np.isfinite(wa)) and np.all(np.isfinite(wb))):
        raise MetricInputError("transport masses must be finite")
    if np.any(wa < 0) or np.any(wb < 0):
        raise MetricInputError("transport masses must be non-negative")
    total_a, total_b = wa.sum(), wb.sum()
    if abs(total_a - total_b) > _NORM_TOL * max(1.0, total_a, total_b):
        raise MetricInputError("transport requires equal total mass")
    if total_a <= _MASS_TOL:
        return 0.0
    if len(wa) > MAX_SUPPORT or len(wb) > MAX_SUPPORT:
        raise MetricInputError(f"transport support exceeds {MAX_SUPPORT} points")
    # remove exact-zero support, then absorb fp drift so marginals match
    ia, ib = wa > 0, wb > 0
    pa, wa = pa[ia], wa[ia]
    pb, wb = pb[ib], wb[ib]
    wb *= wa.sum() / wb.sum()
    cost = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2))
    return _ssp_transport(cost, wa, wb)


def _ssp_transport(cost, supply, demand):
    """Successive shortest paths with potentials on S->sources->sinks->T.

    Nodes are laid out [S, sources, sinks, T] so every relaxation works on
    contiguous slices.  work holds tentative distances and flips to inf on
    pop; final keeps the settled distance for the potential update.
    """
    n1, n2 = cost.shape
    N = n1 + n2 + 2
    S, T = 0, N - 1
    pot = np.zeros(N)
    flow = np.zeros((n1, n2))
    used_s = np.zeros(n1)
    used_t = np.zeros(n2)
    total = supply.sum()
    pushed = 0.0
    INF = np.inf
    max_aug = 16 * (n1 + n2) + 64

    for _ in range(max_aug):
        if pushed >= total - _MASS_TOL * max(1.0, total):
            break
        work = np.full(N, INF)
        final = np.full(N, INF)
        parent = np.full(N, -1, dtype=np.int64)
        done = np.zeros(N, dtype=bool)
        w_src = work[1:1 + n1]
        w_snk = work[1 + n1:1 + n1 + n2]
        p_src = parent[1:1 + n1]
        p_snk = parent[1 + n1:1 + n1 + n2]
        pot_src = pot[1:1 + n1]
        pot_snk = pot[1 + n1:1 + n1 + n2]
        work[S] = 0.0
        while True:
            u = int(np.argmin(work))
            du = work[u]
            if du == INF:
                raise MetricInputError("transport instance is infeasible")
            work[u] = INF
            done[u] = True
            final[u] = du
            if u == T:
                break
            # popped nodes stay popped: rounding in the reduced costs can
            # go a hair negative, and re-parenting a settled node would
            # let the parent pointers form a cycle
            if u == S:
                open_s = used_s < supply - _MASS_TOL * np.maximum(1.0, supply)
                nd = du + pot[S] - pot_src
                upd = open_s & (nd < w_src) & ~done[1:1 + n1]
                w_src[upd] = nd[upd]
                p_src[upd] = S
            elif u < 1 + n1:
                i = u - 1
                nd = du + cost[i] + pot[u] - pot_snk
                upd = (nd < w_snk) & ~done[1 + n1:1 + n1 + n2]
                w_snk[upd] = nd[upd]
                p_snk[upd] = u
            else:
                j = u - 1 - n1
                if used_t[j] < demand[j] - _MASS_TOL * max(1.0, demand[j]):
                    nd = du + pot[u] - pot[T]
                    if nd < work[T] and not done[T]:
                        work[T] = nd
                        parent[T] = u
                carrying = flow[:, j] > _MASS_TOL
                nd = du - cost[:, j] + pot[u] - pot_src
                upd = carrying & (nd < w_src) & ~done[1:1 + n1]
                w_src[upd] = nd[upd]
                p_src[upd] = u
        dT = final[T]
        pot += np.minimum(np.where(done, final, dT), dT)

        # walk T -> S collecting arcs, find bottleneck, then apply
        path = []
        v = T
        while v != S:
            u = int(parent[v])
            if u < 0 or len(path) >= N:
                raise MetricInputError("transport path reconstruction failed")
            path.append((u, v))
            v = u
        delta = INF
        for u, v in path:
            if u == S:
                delta = min(delta, supply[v - 1] - used_s[v - 1])
            elif v == T:
                delta = min(delta, demand[u - 1 - n1] - used_t[u - 1 - n1])
            elif u < 1 + n1:
                continue                      # forward source->sink, no cap
            else:
                delta = min(delta, flow[v - 1, u - 1 - n1])
        for u, v in path:
            if u == S:
                used_s[v - 1] += delta
            elif v == T:
                used_t[u - 1 - n1] += delta
            elif u < 1 + n1:
                flow[u - 1, v - 1 - n1] += delta
            else:
                flow[v - 1, u - 1 - n1] -= delta
        pushed += delta
    else:
        raise MetricInputError("transport solver did not converge")
    return float((flow * cost).sum())


def emd(p1, p2):
    """Wasserstein-1 distance (meters) between two normalized profiles."""
    if not p1.same_grid(p2):
        raise MetricInputError("emd requires profiles on the same grid")
    for p in (p1, p2):
        if not p.normalized or abs(p.mass.sum() - 1.0) > _NORM_TOL:
            raise MetricInputError("emd requires normalized density profiles")
    common = np.minimum(p1.mass, p2.mass)
    r1 = p1.mass - common
    r2 = p2.mass - common
    moved = r1.sum()
    if moved <= _MASS_TOL:
        return 0.0
    centers = p1.cell_centers()
    i1 = r1 > 0
    i2 = r2 > 0
    return transport_distance(centers[i1], r1[i1], centers[i2], r2[i2])


def diversity(profiles):
    """Mean pairwise EMD across trials; fewer than two trials scores 0."""
    profiles = list(profiles)
    n = len(profiles)
    if n < 2:
        return 0.0
    acc = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            acc += emd(profiles[i], profiles[j])
    return acc / (n * (n - 1) / 2)
