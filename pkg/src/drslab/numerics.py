"""Numerically stable scalar transforms backing the loss and acceptance math.

Everything is float64 and accepts scalars or arrays; scalars come back as
Python floats.
"""

import numpy as np


def _prepare(x):
    arr = np.asarray(x, dtype=np.float64)
    return np.atleast_1d(arr), arr.ndim == 0


def sigmoid(x):
    """Logistic function 1/(1+e^-x), stable for large |x|."""
    arr, scalar = _prepare(x)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out[0]) if scalar else out


def softplus(x):
    """log(1 + e^x) without overflow; equals max(x,0) + log1p(e^-|x|)."""
    arr, scalar = _prepare(x)
    out = np.maximum(arr, 0.0) + np.log1p(np.exp(-np.abs(arr)))
    return float(out[0]) if scalar else out


def log_sigmoid(x):
    """log sigma(x) = -softplus(-x)."""
    arr, scalar = _prepare(x)
    out = -(np.maximum(-arr, 0.0) + np.log1p(np.exp(-np.abs(arr))))
    return float(out[0]) if scalar else out


def log1mexp(a):
    """log(1 - e^a) for a < 0, accurate near both endpoints.

    Uses log1p(-e^a) when a < -log 2 and log(-expm1(a)) otherwise.
    """
    arr, scalar = _prepare(a)
    if np.any(arr >= 0):
        raise ValueError("log1mexp requires a < 0")
    cut = -np.log(2.0)
    with np.errstate(divide="ignore"):  # a -> -0 gives -inf, which is correct
        out = np.where(arr < cut, np.log1p(-np.exp(arr)), np.log(-np.expm1(arr)))
    return float(out[0]) if scalar else out
