"""Multilayer perceptrons with explicit reverse-mode gradients.

One class covers both a single network and a stack of ``n_members``
independent networks evaluated together: weights then carry a leading
member axis, ``W[i]`` has shape ``(n_members, fan_in, fan_out)`` and biases
``(n_members, 1, fan_out)``. Inputs may be shared ``(B, d)`` or per member
``(n_members, B, d)``.
"""

import numpy as np

from ts2c.errors import NumericError, ParameterError

ACTIVATIONS = ("relu",)


class MLP:
    def __init__(self, sizes, rng=None, n_members=None, activation="relu", seeds=None):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ParameterError(f"invalid layer sizes {sizes}")
        if activation not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {activation!r}")
        self.sizes = sizes
        self.activation = activation
        self.n_members = n_members
        if seeds is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            count = 1 if n_members is None else n_members
            seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=count)]
        self.weights, self.biases = self._init(seeds)

    def _init(self, seeds):
        # uniform fan-in scaling; each member draws from its own seed
        per_member = []
        for seed in seeds:
            g = np.random.default_rng(seed)
            layers = []
            for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
                bound = 1.0 / np.sqrt(fan_in)
                W = g.uniform(-bound, bound, size=(fan_in, fan_out))
                b = g.uniform(-bound, bound, size=(fan_out,))
                layers.append((W, b))
            per_member.append(layers)
        if self.n_members is None:
            return [W for W, _ in per_member[0]], [b for _, b in per_member[0]]
        weights = [np.stack([m[i][0] for m in per_member]) for i in range(len(self.sizes) - 1)]
        biases = [np.stack([m[i][1] for m in per_member])[:, None, :] for i in range(len(self.sizes) - 1)]
        return weights, biases

    # parameter access -------------------------------------------------
    def params(self):
        """Flat list [W0, b0, W1, b1, ...]; arrays are live references."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def set_params(self, arrays):
        arrays = list(arrays)
        for i in range(len(self.weights)):
            W, b = arrays[2 * i], arrays[2 * i + 1]
            if W.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ParameterError("parameter shapes do not match architecture")
            self.weights[i][...] = W
            self.biases[i][...] = b

    def copy(self):
        new = MLP.__new__(MLP)
        new.sizes = list(self.sizes)
        new.activation = self.activation
        new.n_members = self.n_members
        new.weights = [W.copy() for W in self.weights]
        new.biases = [b.copy() for b in self.biases]
        return new

    def polyak_from(self, source, tau):
        """self <- (1 - tau) self + tau source, in place."""
        for dst, src in zip(self.params(), source.params()):
            dst *= 1.0 - tau
            dst += tau * src

    def member(self, i):
        """Stand-alone copy of one ensemble member."""
        if self.n_members is None:
            raise ParameterError("not an ensemble")
        new = MLP.__new__(MLP)
        new.sizes = list(self.sizes)
        new.activation = self.activation
        new.n_members = None
        new.weights = [W[i].copy() for W in self.weights]
        new.biases = [b[i, 0].copy() for b in self.biases]
        return new

    def n_params(self):
        return sum(p.size for p in self.params())

    def descriptor(self):
        return {"sizes": self.sizes, "activation": self.activation, "n_members": self.n_members}

    # evaluation ----------------------------------------------------------
    def _check_input(self, x):
        if x.shape[-1] != self.sizes[0]:
            raise ParameterError(f"input dim {x.shape[-1]} does not match first layer {self.sizes[0]}")

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        h = x
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i < last:
                np.maximum(h, 0.0, out=h)
        if not np.all(np.isfinite(h)):
            raise NumericError("non-finite network output")
        return h

    __call__ = forward

    def forward_cache(self, x):
        """Forward pass keeping the activations needed by ``backward``."""
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        if not np.all(np.isfinite(h)):
            raise NumericError("non-finite network output")
        return h, acts

    def backward(self, acts, dy, need_params=True, need_input=False):
        """Reverse pass. Returns (param_grads or None, input_grad or None).

        ReLU's derivative at exactly zero is taken as 0.
        """
        grads = [None] * (2 * len(self.weights)) if need_params else None
        dz = dy
        stacked = self.n_members is not None
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = acts[i]
            if need_params:
                if stacked:
                    grads[2 * i] = np.swapaxes(a_in, -1, -2) @ dz
                    grads[2 * i + 1] = dz.sum(axis=-2, keepdims=True)
                else:
                    grads[2 * i] = a_in.T @ dz
                    grads[2 * i + 1] = dz.sum(axis=0)
            if i == 0 and not need_input:
                break
            W = self.weights[i]
            dz = dz @ np.swapaxes(W, -1, -2)
            if i > 0:
                dz = dz * (acts[i] > 0.0)
        dx = None
        if need_input:
            dx = dz
            if stacked and acts[0].ndim == 2:
                dx = dz.sum(axis=0)
        return grads, dx


def loss_and_grad(mlp: MLP, x, loss_fn):
    """Evaluate ``loss_fn(y) -> (loss, dloss/dy)`` on the network output and backpropagate."""
    y, acts = mlp.forward_cache(x)
    loss, dy = loss_fn(y)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss {loss}")
    grads, _ = mlp.backward(acts, dy)
    return float(loss), grads
