"""Linear-programming oracle for the discrete transport (earth mover) problem."""

import numpy as np
from scipy.optimize import linprog


def emd_lp(src_points, src_mass, dst_points, dst_mass):
    """Minimum-cost transport between two weighted point sets via linprog.

    Euclidean ground distance; masses must each sum to 1.  Returns the optimal
    transport cost.
    """
    a = np.asarray(src_mass, float)
    b = np.asarray(dst_mass, float)
    P = np.asarray(src_points, float)
    Q = np.asarray(dst_points, float)
    m, n = len(a), len(b)
    cost = np.sqrt(((P[:, None, :] - Q[None, :, :]) ** 2).sum(axis=2)).reshape(-1)
    # equality constraints: row sums = a, column sums = b
    A_eq = np.zeros((m + n, m * n))
    for i in range(m):
        A_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        A_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([a, b])
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"linprog failed: {res.message}")
    return float(res.fun)
