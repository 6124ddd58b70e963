"""Training losses for the spatial-map and trajectory networks."""

import numpy as np

from .tensor import Tensor


def cross_entropy_cells(logits, targets):
    """Mean cross-entropy of flat cell logits against integer target cells.

    Args:
        logits: Tensor (B, N), unnormalized scores over N grid cells.
        targets: int array (B,), target cell index per row.

    Returns:
        scalar Tensor, mean over the batch of -log softmax(logits)[target].
    """
    z = logits.data
    B = z.shape[0]
    targets = np.asarray(targets, dtype=int)
    m = z.max(axis=1, keepdims=True)
    ez = np.exp(z - m)
    sez = ez.sum(axis=1, keepdims=True)
    logp = (z - m) - np.log(sez)
    loss = -logp[np.arange(B), targets].mean()

    def back(g):
        grad = ez / sez
        grad[np.arange(B), targets] -= 1.0
        logits._accum(grad * (float(g) / B))

    return Tensor._make(np.float64(loss), (logits,), back)


def masked_residual_loss(pred, targets, cells):
    """Sub-cell pose residual loss evaluated only at each sample's target cell.

    Args:
        pred: Tensor (B, 3, N): per-cell (dx, dy, dheading) predictions over
            N flat grid cells.
        targets: array (B, 3): expected (dx, dy, dheading) at the target cell.
        cells: int array (B,): flat target cell per sample.

    Returns:
        scalar Tensor: mean over the batch of dx^2 + dy^2 + wrapped(dth)^2.
    """
    B = pred.data.shape[0]
    targets = np.asarray(targets, dtype=float)
    picked = pred[np.arange(B), :, np.asarray(cells, dtype=int)]  # (B, 3)
    dxy = picked[:, :2] - targets[:, :2]
    dth = (picked[:, 2] - targets[:, 2]).wrap_angle()
    return ((dxy**2).sum(axis=1) + dth**2).mean()


def l2_traj_loss(xs, ys, ths, ref, heading_weight=1.0):
    """Squared trajectory-tracking error against a reference rollout.

    Args:
        xs, ys, ths: Tensors (B, H), unrolled poses per step.
        ref: array (B, H, 3) of reference (x, y, heading).
        heading_weight: weight on the wrapped squared heading term.

    Returns:
        scalar Tensor, mean over batch and steps.
    """
    ref = np.asarray(ref, dtype=float)
    ex = (xs - ref[:, :, 0]) ** 2
    ey = (ys - ref[:, :, 1]) ** 2
    eth = ((ths - ref[:, :, 2]).wrap_angle()) ** 2
    return (ex + ey + eth * heading_weight).mean()
