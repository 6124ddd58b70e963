"""Central finite-difference gradient checking harness for the autodiff core."""

import numpy as np


def numeric_grad(loss_fn, tensor, eps=1e-4, indices=None):
    """Central-difference gradient of loss_fn() w.r.t. tensor.data.

    loss_fn must recompute the forward pass from scratch (it reads the mutated
    tensor.data).  `indices` optionally restricts checking to a flat subset.
    """
    flat = tensor.data.ravel()
    if indices is None:
        indices = range(flat.size)
    grad = {}
    for i in indices:
        keep = flat[i]
        flat[i] = keep + eps
        fp = loss_fn()
        flat[i] = keep - eps
        fm = loss_fn()
        flat[i] = keep
        grad[i] = (fp - fm) / (2.0 * eps)
    return grad


def max_rel_error(loss_fn, tensors, eps=1e-4, rng=None, max_checks=64):
    """Max relative error between tape and finite-difference gradients.

    Runs one taped backward pass, then checks up to `max_checks` randomly
    chosen coordinates of every tensor.  Relative error uses
    |a - n| / max(1, |a|, |n|).
    """
    for t in tensors:
        t.grad = None
    out = loss_fn(backward=True)
    worst = 0.0
    for t in tensors:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        size = t.data.size
        if rng is not None and size > max_checks:
            idx = rng.choice(size, size=max_checks, replace=False)
        else:
            idx = range(size)
        num = numeric_grad(lambda: loss_fn(backward=False), t, eps=eps, indices=idx)
        aflat = analytic.ravel()
        for i, n in num.items():
            err = abs(aflat[i] - n) / max(1.0, abs(aflat[i]), abs(n))
            worst = max(worst, err)
    return worst, out
