"""Truncated univariate Taylor polynomial arithmetic on numpy arrays.

Coefficient arrays carry the polynomial degree along the LAST axis
(length K+1 for truncation order K) and broadcast over all leading axes.
Products are truncated to the common length, which is exactly what the
order-by-order manifold recursion needs.
"""
from __future__ import annotations

import numpy as np


def mul(a, b):
    """Truncated product of two coefficient arrays of equal last-axis length."""
    a = np.asarray(a)
    b = np.asarray(b)
    k = a.shape[-1]
    if b.shape[-1] != k:
        raise ValueError("coefficient arrays must have equal truncation order")
    # Direct truncated convolution.  FFT convolution is NOT safe here: jet
    # coefficients can span many orders of magnitude and the low orders must
    # not pick up roundoff relative to the largest coefficient.
    out = np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (k,))
    for i in range(k):
        out[..., i : k] += a[..., i : i + 1] * b[..., : k - i]
    return out


def power(a, alpha):
    """Truncated a(s)**alpha for real alpha, requiring a[..., 0] > 0.

    Classical recurrence from w' a = alpha * w * a':
        k*a0*w_k = sum_{j=1..k} ((alpha+1)*j - k) * a_j * w_{k-j}
    """
    a = np.asarray(a)
    k = a.shape[-1]
    a0 = a[..., 0]
    w = np.zeros_like(a)
    w[..., 0] = a0**alpha
    for m in range(1, k):
        j = np.arange(1, m + 1)
        coef = (alpha + 1.0) * j - m
        acc = np.einsum("...j,...j->...", coef * a[..., 1 : m + 1], w[..., m - 1 :: -1][..., :m])
        w[..., m] = acc / (m * a0)
    return w


def evaluate(coeffs, s):
    """Horner evaluation of coefficient arrays at scalar or array s.

    ``coeffs`` has shape (..., K+1); ``s`` broadcasts against the leading
    axes of the result.
    """
    coeffs = np.asarray(coeffs)
    s = np.asarray(s)
    out = np.broadcast_to(coeffs[..., -1], np.broadcast_shapes(coeffs.shape[:-1], s.shape)).copy()
    for m in range(coeffs.shape[-1] - 2, -1, -1):
        out = out * s + coeffs[..., m]
    return out
