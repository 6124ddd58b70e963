"""Adam: closed-form first step, skip guard, determinism."""

import numpy as np
import pytest

from trafficlab.nn import AdamState, Tensor


def test_first_step_magnitude():
    # with constant gradient g, bias-corrected Adam moves by ~lr * sign(g)
    p = Tensor(np.zeros(3), requires_grad=True)
    opt = AdamState([p], lr=1e-2)
    p.grad = np.array([1.0, -2.0, 0.5])
    assert opt.step()
    assert np.allclose(p.data, [-1e-2, 1e-2, -1e-2], atol=1e-9)
    assert opt.t == 1


def test_constant_gradient_walks_linearly():
    p = Tensor(np.zeros(1), requires_grad=True)
    opt = AdamState([p], lr=1e-3)
    for _ in range(100):
        p.grad = np.array([1.0])
        opt.step()
    assert p.data[0] == pytest.approx(-0.1, rel=1e-4)


def test_nonfinite_gradient_skips_whole_step():
    p = Tensor(np.ones(2), requires_grad=True)
    q = Tensor(np.ones(2), requires_grad=True)
    opt = AdamState([p, q], lr=1e-2)
    p.grad = np.array([1.0, np.nan])
    q.grad = np.array([1.0, 1.0])
    assert not opt.step()
    assert opt.skipped == 1 and opt.t == 0
    assert np.all(p.data == 1.0) and np.all(q.data == 1.0)
    assert np.all(opt.m[0] == 0.0)  # moments untouched too
    p.grad = np.array([np.inf, 0.0])
    q.grad = np.array([0.0, 0.0])
    assert not opt.step()
    assert opt.skipped == 2


def test_missing_grad_treated_as_zero():
    p = Tensor(np.ones(2), requires_grad=True)
    opt = AdamState([p], lr=1e-2)
    p.grad = None
    assert opt.step()
    assert np.all(p.data == 1.0)


def test_zero_grad_clears():
    p = Tensor(np.ones(2), requires_grad=True)
    opt = AdamState([p])
    p.grad = np.ones(2)
    opt.zero_grad()
    assert p.grad is None


def test_deterministic_trajectory():
    def run():
        rng = np.random.default_rng(11)
        p = Tensor(rng.normal(size=4), requires_grad=True)
        opt = AdamState([p], lr=3e-3)
        for _ in range(50):
            p.grad = 2.0 * p.data  # quadratic bowl
            opt.step()
        return p.data.copy()

    assert np.array_equal(run(), run())
