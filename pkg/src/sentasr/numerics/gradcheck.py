"""Finite-difference verification of reverse-mode gradients."""

import numpy as np

from .tensor import GradTape, Tensor


def gradient_check(loss_fn, params, rng, num_coords=120, h=1e-5):
    """Compare tape gradients of `loss_fn(params)` against central differences.

    Meant to run at float64; finite differences are unreliable at float32.
    Checks `num_coords` coordinates sampled across all parameters and returns
    the maximum relative error, with a small floor in the denominator so
    coordinates with near-zero gradient do not dominate.
    """
    with GradTape() as tape:
        loss = loss_fn(params)
        grads = tape.grad(loss, params)

    names = sorted(params)
    sizes = np.array([params[n].data.size for n in names])
    total = int(sizes.sum())
    count = min(num_coords, total)
    picks = rng.choice(total, size=count, replace=False)

    max_rel = 0.0
    for flat in picks:
        k = int(np.searchsorted(np.cumsum(sizes), flat, side="right"))
        name = names[k]
        offset = int(flat - np.concatenate([[0], np.cumsum(sizes)])[k])
        idx = np.unravel_index(offset, params[name].data.shape)

        def shifted(delta):
            shifted_params = dict(params)
            data = params[name].data.copy()
            data[idx] += delta
            shifted_params[name] = Tensor(data, requires_grad=True)
            return loss_fn(shifted_params).item()

        fd = (shifted(+h) - shifted(-h)) / (2.0 * h)
        ad = float(grads[name].data[idx])
        rel = abs(ad - fd) / max(abs(ad), abs(fd), 1e-6)
        max_rel = max(max_rel, rel)
    return max_rel
