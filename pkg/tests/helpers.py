"""Shared oracles for the test suite.

These stay independent of the library's forward/backward code paths:
finite differences perturb raw parameter arrays and re-run a loss
closure, and the naive kernels below are plain-numpy re-derivations.
"""

import numpy as np


def relative_error(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def central_difference(loss_fn, array, index, eps=1e-5):
    """d loss / d array[index] by central differences on the raw array."""
    orig = array.flat[index]
    array.flat[index] = orig + eps
    hi = loss_fn()
    array.flat[index] = orig - eps
    lo = loss_fn()
    array.flat[index] = orig
    return (hi - lo) / (2.0 * eps)


def max_grad_error(loss_fn, params_and_grads, eps=1e-5):
    """Worst relative error between analytic grads and finite differences.

    `params_and_grads` is an iterable of (ndarray, grad ndarray) pairs;
    every scalar entry is checked.
    """
    worst = 0.0
    for array, grad in params_and_grads:
        assert grad.shape == array.shape
        for index in range(array.size):
            fd = central_difference(loss_fn, array, index, eps=eps)
            worst = max(worst, relative_error(grad.flat[index], fd))
    return worst


def naive_matvec(W, x):
    """Element-wise summation oracle for the matrix-vector product."""
    rows, cols = W.shape
    out = np.zeros(rows)
    for r in range(rows):
        acc = 0.0
        for c in range(cols):
            acc += W[r, c] * x[c]
        out[r] = acc
    return out
