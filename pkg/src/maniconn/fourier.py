"""Spectral operations on uniform periodic grids.

A "grid" is any array whose FIRST axis samples a 2*pi-periodic function at
theta_i = 2*pi*i/N; trailing axes are carried along componentwise.  N must
be even and at least 4: with the symmetric frequency range -N/2 .. N/2-1
real inputs stay real, and the ambiguous Nyquist mode is handled by the
cosine rule under shifts and zeroed under differentiation.
"""
from __future__ import annotations

import numpy as np


def check_grid(values) -> int:
    """Validate the theta sampling axis and return N."""
    values = np.asarray(values)
    n = values.shape[0]
    if n < 4 or n % 2 != 0:
        raise ValueError(f"periodic grid size must be even and >= 4, got {n}")
    return n


def grid_points(n: int):
    """The sample angles theta_i = 2*pi*i/N."""
    return 2.0 * np.pi * np.arange(n) / n


def _to_spectrum(values):
    return np.fft.fft(np.asarray(values, dtype=complex), axis=0)


def _from_spectrum(spec, real_input: bool):
    out = np.fft.ifft(spec, axis=0)
    if real_input:
        return out.real
    return out


def shift(values, rho: float):
    """Samples of a(theta + rho) on the same grid; exact for band-limited a."""
    values = np.asarray(values)
    n = check_grid(values)
    real_input = not np.iscomplexobj(values)
    k = np.fft.fftfreq(n, d=1.0 / n)  # 0..N/2-1, -N/2..-1
    factor = np.exp(1j * k * rho)
    # Nyquist energy is split evenly between +-N/2, which keeps real data real.
    factor[n // 2] = np.cos(n / 2 * rho)
    spec = _to_spectrum(values)
    spec *= factor.reshape((n,) + (1,) * (values.ndim - 1))
    return _from_spectrum(spec, real_input)


def differentiate(values):
    """Samples of da/dtheta on the same grid; the Nyquist mode is dropped."""
    values = np.asarray(values)
    n = check_grid(values)
    real_input = not np.iscomplexobj(values)
    k = np.fft.fftfreq(n, d=1.0 / n)
    factor = 1j * k
    factor[n // 2] = 0.0
    spec = _to_spectrum(values)
    spec *= factor.reshape((n,) + (1,) * (values.ndim - 1))
    return _from_spectrum(spec, real_input)


def trig_interp(values, theta):
    """Evaluate the band-limited interpolant at arbitrary angles.

    ``theta`` may be a scalar or an array; the returned array has shape
    ``theta.shape + values.shape[1:]``.  Reproduces grid values exactly at
    the sample points.
    """
    values = np.asarray(values)
    n = check_grid(values)
    real_input = not np.iscomplexobj(values)
    theta = np.asarray(theta, dtype=float)
    scalar = theta.ndim == 0
    th = np.atleast_1d(theta).ravel()

    spec = _to_spectrum(values) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    basis = np.exp(1j * np.outer(th, k))  # (T, N)
    basis[:, n // 2] = np.cos(n / 2 * th)
    flat = spec.reshape(n, -1)
    out = basis @ flat
    out = out.reshape(th.shape + values.shape[1:])
    if real_input:
        out = out.real
    if scalar:
        return out[0] if out.shape == (1,) else out.reshape(values.shape[1:])
    return out.reshape(theta.shape + values.shape[1:])


def shift_matrix(n: int, rho: float):
    """Dense N x N matrix S with (S a)(theta_i) = a(theta_i + rho)."""
    return shift(np.eye(n), rho)


def coefficients(values):
    """Forward DFT coefficients with the 1/N normalization (a = sum c_k e^{ik theta})."""
    n = check_grid(values)
    return _to_spectrum(values) / n
