"""Neural-network building blocks on top of the autodiff tensor.

Convolutions are evaluated as k*k shifted matrix products (one tensordot per
kernel tap), which keeps both passes as large BLAS calls instead of explicit
im2col buffers.
"""

import numpy as np

from .tensor import Tensor


def kaiming_uniform(rng, shape, fan_in):
    """Uniform init with bound sqrt(6 / fan_in)."""
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def conv2d(x, w, b, stride=1):
    """2-D convolution with same-padding k//2.

    Args:
        x: Tensor (B, Ci, H, W).
        w: Tensor (Co, Ci, k, k).
        b: Tensor (Co,).
        stride: 1 or 2.

    Returns:
        Tensor (B, Co, Ho, Wo) with Ho = (H + 2*(k//2) - k) // stride + 1.
    """
    xd, wd, bd = x.data, w.data, b.data
    B, ci, H, W = xd.shape
    co, _, k, _ = wd.shape
    p = k // 2
    xp = np.pad(xd, ((0, 0), (0, 0), (p, p), (p, p)))
    Ho = (H + 2 * p - k) // stride + 1
    Wo = (W + 2 * p - k) // stride + 1
    out = np.broadcast_to(bd[None, :, None, None], (B, co, Ho, Wo)).copy()
    for a in range(k):
        for c in range(k):
            xs = xp[:, :, a : a + stride * Ho : stride, c : c + stride * Wo : stride]
            out += np.tensordot(wd[:, :, a, c], xs, axes=([1], [1])).transpose(1, 0, 2, 3)

    def back(g):
        b._accum(g.sum(axis=(0, 2, 3)))
        if w.requires_grad:
            gw = np.zeros_like(wd)
            for a in range(k):
                for c in range(k):
                    xs = xp[:, :, a : a + stride * Ho : stride, c : c + stride * Wo : stride]
                    gw[:, :, a, c] = np.tensordot(g, xs, axes=([0, 2, 3], [0, 2, 3]))
            w._accum(gw)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for a in range(k):
                for c in range(k):
                    contrib = np.tensordot(wd[:, :, a, c], g, axes=([0], [1]))
                    gxp[:, :, a : a + stride * Ho : stride, c : c + stride * Wo : stride] += (
                        contrib.transpose(1, 0, 2, 3)
                    )
            x._accum(gxp[:, :, p : p + H, p : p + W])

    return Tensor._make(out, (x, w, b), back)


def upsample2x(x):
    """Nearest-neighbor 2x spatial upsampling of a (B, C, H, W) tensor."""
    B, C, H, W = x.data.shape
    out = x.data.repeat(2, axis=2).repeat(2, axis=3)
    return Tensor._make(
        out, (x,), lambda g: x._accum(g.reshape(B, C, H, 2, W, 2).sum(axis=(3, 5)))
    )


def roi_sample_grid(center, heading, window_px, n):
    """Pixel coordinates of an n x n oriented sampling grid.

    Args:
        center: (col, row) of the window center, in pixel units.
        heading: window rotation in radians (0 = aligned with the grid).
        window_px: (wx, wy) window extent in pixels.
        n: samples per side.

    Returns:
        (cols, rows): two (n, n) float arrays of sample coordinates.
    """
    wx, wy = window_px
    u = ((np.arange(n) + 0.5) / n - 0.5) * wx  # along the window's x axis
    v = ((np.arange(n) + 0.5) / n - 0.5) * wy
    uu, vv = np.meshgrid(u, v)  # row index i varies v, column index j varies u
    c, s = np.cos(heading), np.sin(heading)
    cols = center[0] + uu * c - vv * s
    rows = center[1] + uu * s + vv * c
    return cols, rows


def bilinear_weights(cols, rows, H, W):
    """Clamped bilinear corner indices and weights for sample coordinates."""
    cols = np.clip(cols, 0.0, W - 1.0)
    rows = np.clip(rows, 0.0, H - 1.0)
    c0 = np.floor(cols).astype(int)
    r0 = np.floor(rows).astype(int)
    c1 = np.minimum(c0 + 1, W - 1)
    r1 = np.minimum(r0 + 1, H - 1)
    fc = cols - c0
    fr = rows - r0
    w00 = (1 - fr) * (1 - fc)
    w01 = (1 - fr) * fc
    w10 = fr * (1 - fc)
    w11 = fr * fc
    return (r0, c0, r1, c1), (w00, w01, w10, w11)


def roi_crop_t(x, center, heading, window_px, n):
    """Differentiable oriented bilinear crop of a (C, H, W) feature tensor."""
    C, H, W = x.data.shape
    cols, rows = roi_sample_grid(center, heading, window_px, n)
    (r0, c0, r1, c1), (w00, w01, w10, w11) = bilinear_weights(cols, rows, H, W)
    out = (
        x.data[:, r0, c0] * w00
        + x.data[:, r0, c1] * w01
        + x.data[:, r1, c0] * w10
        + x.data[:, r1, c1] * w11
    )

    def back(g):
        gp = np.zeros_like(x.data)
        for rr, cc, ww in ((r0, c0, w00), (r0, c1, w01), (r1, c0, w10), (r1, c1, w11)):
            np.add.at(gp, (slice(None), rr, cc), g * ww)
        x._accum(gp)

    return Tensor._make(out, (x,), back)


class Conv:
    """3x3 (or 1x1) convolution layer with bias."""

    def __init__(self, rng, ci, co, k=3, stride=1, zero_init=False):
        if zero_init:
            wdata = np.zeros((co, ci, k, k))
        else:
            wdata = kaiming_uniform(rng, (co, ci, k, k), ci * k * k)
        self.w = Tensor(wdata, requires_grad=True)
        self.b = Tensor(np.zeros(co), requires_grad=True)
        self.stride = stride

    def __call__(self, x):
        return conv2d(x, self.w, self.b, stride=self.stride)

    def params(self):
        return [("w", self.w), ("b", self.b)]


class Linear:
    """Fully connected layer with bias."""

    def __init__(self, rng, ci, co, zero_init=False):
        if zero_init:
            wdata = np.zeros((ci, co))
        else:
            wdata = kaiming_uniform(rng, (ci, co), ci)
        self.w = Tensor(wdata, requires_grad=True)
        self.b = Tensor(np.zeros(co), requires_grad=True)

    def __call__(self, x):
        return x @ self.w + self.b

    def params(self):
        return [("w", self.w), ("b", self.b)]


class Network:
    """Base container: named sublayers, flat parameter access, checkpoint I/O."""

    def _layer_items(self):
        for name, obj in vars(self).items():
            if isinstance(obj, (Conv, Linear)):
                yield name, obj
            elif isinstance(obj, Network):
                for sub_name, sub in obj._layer_items():
                    yield f"{name}.{sub_name}", sub
            elif isinstance(obj, (list, tuple)):
                for i, sub in enumerate(obj):
                    if isinstance(sub, (Conv, Linear)):
                        yield f"{name}.{i}", sub

    def named_params(self):
        out = []
        for lname, layer in self._layer_items():
            for pname, p in layer.params():
                out.append((f"{lname}.{pname}", p))
        return out

    def params(self):
        return [p for _, p in self.named_params()]

    def state_arrays(self):
        return {name: p.data.copy() for name, p in self.named_params()}

    def load_state_arrays(self, arrays):
        for name, p in self.named_params():
            if name not in arrays:
                raise KeyError(f"missing parameter {name!r} in checkpoint")
            if arrays[name].shape != p.data.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: {arrays[name].shape} vs {p.data.shape}"
                )
            p.data = np.asarray(arrays[name], dtype=np.float64).copy()
