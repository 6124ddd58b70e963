"""A small reverse-mode autodiff engine over numpy float64 arrays.

Every operation records its inputs and a backward closure; calling
``Tensor.backward()`` on a scalar output walks the recorded graph in reverse
topological order and accumulates gradients into every tensor created with
``requires_grad=True``.  Graph recording is skipped entirely when no input
requires a gradient, so inference-time forward passes carry no tape overhead.
"""

import numpy as np

_GRAD_ENABLED = True


class no_grad:
    """Context manager suppressing tape construction (inference forwards)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """An n-d float64 array plus an optional gradient tape node."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    # -- graph plumbing ----------------------------------------------------

    @staticmethod
    def _make(data, parents, backward):
        out = Tensor(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def _accum(self, g):
        if self.requires_grad:
            if self.grad is None:
                self.grad = np.zeros_like(self.data)
            self.grad += g

    def backward(self):
        """Backpropagate from this (scalar) tensor through the recorded graph."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        topo, seen, stack = [], set(), [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    def detach(self):
        return Tensor(self.data)

    # -- conveniences ------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor._make(
            self.data + other.data,
            (self, other),
            lambda g: (
                self._accum(_unbroadcast(g, self.data.shape)),
                other._accum(_unbroadcast(g, other.data.shape)),
            ),
        )
        return out

    __radd__ = __add__

    def __neg__(self):
        return Tensor._make(-self.data, (self,), lambda g: self._accum(-g))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor._make(
            self.data * other.data,
            (self, other),
            lambda g: (
                self._accum(_unbroadcast(g * other.data, self.data.shape)),
                other._accum(_unbroadcast(g * self.data, other.data.shape)),
            ),
        )
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        out = Tensor._make(
            self.data / other.data,
            (self, other),
            lambda g: (
                self._accum(_unbroadcast(g / other.data, self.data.shape)),
                other._accum(_unbroadcast(-g * self.data / other.data**2, other.data.shape)),
            ),
        )
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, k):
        if not isinstance(k, (int, float)):
            raise TypeError("only constant exponents are supported")
        out = Tensor._make(
            self.data**k,
            (self,),
            lambda g: self._accum(g * k * self.data ** (k - 1)),
        )
        return out

    def __matmul__(self, other):
        other = as_tensor(other)
        out = Tensor._make(
            self.data @ other.data,
            (self, other),
            lambda g: (
                self._accum(g @ other.data.swapaxes(-1, -2)),
                other._accum(self.data.swapaxes(-1, -2) @ g),
            ),
        )
        return out

    def __getitem__(self, key):
        def back(g):
            gp = np.zeros_like(self.data)
            if _fancy_key(key):
                np.add.at(gp, key, g)
            else:
                gp[key] += g
            self._accum(gp)

        return Tensor._make(self.data[key], (self,), back)

    # -- shape ops ---------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        old = self.data.shape
        return Tensor._make(
            self.data.reshape(shape), (self,), lambda g: self._accum(g.reshape(old))
        )

    def sum(self, axis=None, keepdims=False):
        def back(g):
            if axis is None:
                self._accum(np.broadcast_to(g, self.data.shape))
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                self._accum(np.broadcast_to(gg, self.data.shape))

        return Tensor._make(self.data.sum(axis=axis, keepdims=keepdims), (self,), back)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            n = self.data.size
        else:
            ax = axis if isinstance(axis, tuple) else (axis,)
            n = int(np.prod([self.data.shape[a] for a in ax]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    # -- elementwise nonlinearities ---------------------------------------

    def relu(self):
        mask = self.data > 0
        return Tensor._make(self.data * mask, (self,), lambda g: self._accum(g * mask))

    def exp(self):
        out_data = np.exp(self.data)
        return Tensor._make(out_data, (self,), lambda g: self._accum(g * out_data))

    def log(self):
        return Tensor._make(np.log(self.data), (self,), lambda g: self._accum(g / self.data))

    def sigmoid(self):
        out_data = 1.0 / (1.0 + np.exp(-self.data))
        return Tensor._make(
            out_data, (self,), lambda g: self._accum(g * out_data * (1.0 - out_data))
        )

    def sin(self):
        return Tensor._make(np.sin(self.data), (self,), lambda g: self._accum(g * np.cos(self.data)))

    def cos(self):
        return Tensor._make(np.cos(self.data), (self,), lambda g: self._accum(-g * np.sin(self.data)))

    def wrap_angle(self):
        """Wrap values into (-pi, pi]; the shift is constant so the gradient is 1."""
        m = np.mod(self.data, 2.0 * np.pi)
        out_data = np.where(m > np.pi, m - 2.0 * np.pi, m)
        return Tensor._make(out_data, (self,), lambda g: self._accum(g))


def _fancy_key(key):
    parts = key if isinstance(key, tuple) else (key,)
    return any(isinstance(p, (list, np.ndarray)) for p in parts)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def minimum(a, b):
    """Elementwise min; ties send the gradient to the first argument."""
    a, b = as_tensor(a), as_tensor(b)
    take_a = a.data <= b.data
    out = Tensor._make(
        np.where(take_a, a.data, b.data),
        (a, b),
        lambda g: (
            a._accum(_unbroadcast(g * take_a, a.data.shape)),
            b._accum(_unbroadcast(g * ~take_a, b.data.shape)),
        ),
    )
    return out


def maximum(a, b):
    """Elementwise max; ties send the gradient to the first argument."""
    a, b = as_tensor(a), as_tensor(b)
    take_a = a.data >= b.data
    out = Tensor._make(
        np.where(take_a, a.data, b.data),
        (a, b),
        lambda g: (
            a._accum(_unbroadcast(g * take_a, a.data.shape)),
            b._accum(_unbroadcast(g * ~take_a, b.data.shape)),
        ),
    )
    return out


def clamp(x, lo, hi):
    """Clamp x into [lo, hi]; lo and hi may be tensors or constants."""
    return minimum(maximum(x, lo), hi)


def concat(tensors, axis=0):
    """Concatenate tensors along an axis."""
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            t._accum(piece)

    return Tensor._make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), back)


def stack(tensors, axis=0):
    """Stack tensors along a new axis."""
    tensors = [as_tensor(t) for t in tensors]

    def back(g):
        for i, t in enumerate(tensors):
            t._accum(np.take(g, i, axis=axis))

    return Tensor._make(np.stack([t.data for t in tensors], axis=axis), tuple(tensors), back)
