"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def grad_check(fn, inputs: list[Tensor], step: float = 1e-5) -> float:
    """Max guarded relative error between analytic and central-difference grads.

    ``fn`` must map the given tensors to a scalar Tensor. The relative error
    denominator is floored at 1e-4 so hard-zero gradients compare on an
    absolute scale instead of amplifying rounding noise.
    """
    for t in inputs:
        t.grad = None
        t._needs = True
    out = fn(*inputs)
    if out.data.size != 1:
        raise ValueError("grad_check target must be scalar-valued")
    out.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    worst = 0.0
    for t, ga in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        gn = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = fn(*inputs).data.item()
            flat[i] = orig - step
            lo = fn(*inputs).data.item()
            flat[i] = orig
            gn[i] = (hi - lo) / (2.0 * step)
        ga_flat = ga.reshape(-1)
        denom = np.maximum(np.abs(ga_flat) + np.abs(gn), 1e-4)
        worst = max(worst, float(np.max(np.abs(ga_flat - gn) / denom)))
    return worst
