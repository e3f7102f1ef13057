"""Central finite-difference gradient checks."""

import numpy as np

FD_STEP = 1e-5


def numeric_grad(loss_fn, params, h=FD_STEP):
    """Finite-difference gradient of ``loss_fn()`` w.r.t. each array in ``params`` (perturbed in place)."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = loss_fn()
            flat[j] = orig - h
            down = loss_fn()
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * h)
        out.append(g)
    return out


def relative_error(analytic, numeric):
    """max |a - n| / max(|a| + |n|, 1e-8) over all concatenated entries."""
    a = np.concatenate([np.ravel(x) for x in analytic])
    n = np.concatenate([np.ravel(x) for x in numeric])
    return float(np.max(np.abs(a - n)) / max(np.max(np.abs(a) + np.abs(n)), 1e-8))


def relu_margin(net, x) -> float:
    """Smallest |pre-activation| over the hidden units of ``net`` at input ``x``.

    Central differences are only valid when no step crosses a ReLU kink, so
    checks screen inputs whose margin is below a few multiples of the step.
    """
    h = np.asarray(x, dtype=np.float64)
    margin = np.inf
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        h = h @ W + b
        margin = min(margin, float(np.min(np.abs(h))))
        h = np.maximum(h, 0.0)
    return margin
