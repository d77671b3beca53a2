"""Invariant circles of the stroboscopic map and their Floquet bundles.

The circle solve is a direct Newton iteration on the grid residual
R_i = F(K(theta_i)) - K(theta_i + omega) with the shift applied spectrally
and the DF blocks from variational integration.  A phase condition (the
first Fourier phase of the x coordinate is held fixed) removes the
rotational null direction.

Bundles: the hyperbolic directions come from power iteration of the
transfer cocycle DF composed with the spectral shift; a scalar cohomology
equation then rescales each section so its multiplier is a true constant.
The center-conjugate column completes the frame symplectically, with the
shear T(theta) read off as the residual tangent component.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np

from . import fourier
from .errors import (
    FileFormatError,
    HyperbolicityError,
    NoConvergenceError,
    SingularSystemError,
)
from .flowmap import FlowSettings, strobe_map_batch
from .models import ModelParams

log = logging.getLogger(__name__)

CIRCLE_MAGIC = b"ICR1"

#: Symplectic structure matrix for (x, y, px, py).
J_SYMPLECTIC = np.block(
    [[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]
)


@dataclass
class InvariantCircle:
    """Grid samples K(theta_i) of a circle invariant under the strobe map."""

    K: np.ndarray  # (N, 4)
    omega: float
    params: ModelParams
    residual: float = np.nan
    tol: float = np.nan

    @property
    def n_theta(self) -> int:
        return self.K.shape[0]


@dataclass
class BundleSet:
    """Frame P(theta) and reduced Floquet data along an invariant circle.

    Columns of P: tangent, symplectic-conjugate center, stable, unstable.
    The reduced matrix has ones and the shear T(theta) in the center block
    and the constant multipliers lambda_s < 1 < lambda_u outside it.
    """

    P: np.ndarray  # (N, 4, 4)
    T_shear: np.ndarray  # (N,)
    lambda_s: float
    lambda_u: float

    def reduced_matrix(self, i: int) -> np.ndarray:
        lam = np.array(
            [
                [1.0, self.T_shear[i], 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, self.lambda_s, 0.0],
                [0.0, 0.0, 0.0, self.lambda_u],
            ]
        )
        return lam


def strobe_grid(K, params: ModelParams, settings: FlowSettings):
    """F(K_i) and DF(K_i) for a whole grid in one batched integration."""
    return strobe_map_batch(K, 1, params, settings, with_stm=True)


def invariance_residual(K, omega: float, params: ModelParams,
                        settings: FlowSettings) -> float:
    """max_i ||F(K_i) - K(theta_i + omega)||_inf, evaluated from scratch."""
    FK, _ = strobe_map_batch(K, 1, params, settings, with_stm=False)
    return float(np.max(np.abs(FK - fourier.shift(K, omega))))


def solve_invariant_circle(seed, omega: float, params: ModelParams,
                           settings: FlowSettings, tol: float = 1e-9,
                           max_iter: int = 15) -> InvariantCircle:
    """Newton-solve the invariance equation from a seed grid.

    The seed must lie in the Newton basin (in practice: a sampled periodic
    orbit for eps = 0, or a converged circle at a nearby eps).
    """
    K = np.array(seed, dtype=float)
    n = fourier.check_grid(K)
    if K.shape != (n, 4):
        raise ValueError(f"seed must have shape (N, 4), got {K.shape}")

    theta = fourier.grid_points(n)
    shift_mat = fourier.shift_matrix(n, omega)
    phase_row = np.zeros(4 * n)
    phase_row[0::4] = -np.sin(theta)

    resid = np.inf
    for iteration in range(max_iter + 1):
        FK, DF = strobe_grid(K, params, settings)
        R = FK - fourier.shift(K, omega)
        resid = float(np.max(np.abs(R)))
        if resid < tol:
            return InvariantCircle(K=K, omega=omega, params=params,
                                   residual=resid, tol=tol)
        if iteration == max_iter:
            break

        jac = np.zeros((n, 4, n, 4))
        idx = np.arange(n)
        jac[idx, :, idx, :] = DF
        for c in range(4):
            jac[:, c, :, c] -= shift_mat
        full = np.vstack([jac.reshape(4 * n, 4 * n), phase_row])
        rhs = np.concatenate([-R.reshape(-1), [0.0]])
        delta, _, rank, sv = np.linalg.lstsq(full, rhs, rcond=None)
        if sv[0] > 0 and sv[-1] / sv[0] < 1e-14:
            raise SingularSystemError(
                "Newton system for the invariance equation is singular",
                condition=float(sv[0] / max(sv[-1], np.finfo(float).tiny)),
            )
        K = K + delta.reshape(n, 4)

    raise NoConvergenceError(
        f"invariance equation did not reach {tol:g} in {max_iter} iterations",
        residual=resid,
        iterations=max_iter,
    )


def _twisted_solve(g, omega: float, factor: complex):
    """Solve xi(theta + omega) - factor * xi(theta) = g(theta) spectrally."""
    n = g.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n)
    denom = np.exp(1j * k * omega) - factor
    if np.min(np.abs(denom)) < 1e-9:
        raise SingularSystemError(
            "small divisor in twisted cohomology solve",
            condition=float(1.0 / np.min(np.abs(denom))),
        )
    spec = np.fft.fft(g, axis=0)
    return np.fft.ifft(spec / denom.reshape((n,) + (1,) * (g.ndim - 1)), axis=0).real


def _log_cohomology(logratio, omega: float):
    """Solve a(theta+omega) - a(theta) = logratio with mean(a) = 0."""
    n = logratio.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n)
    denom = np.exp(1j * k * omega) - 1.0
    spec = np.fft.fft(logratio)
    small = np.abs(denom) < 1e-9
    small[0] = True
    if np.any(small[1:] & (np.abs(spec[1:]) > 1e-6 * n)):
        raise SingularSystemError("small divisor in bundle rescaling")
    denom[small] = 1.0
    spec = spec / denom
    spec[small] = 0.0
    return np.fft.ifft(spec).real


def _align_signs(v):
    """Flip pointwise signs so the section is continuous along theta."""
    v = v.copy()
    for i in range(1, v.shape[0]):
        if np.dot(v[i], v[i - 1]) < 0.0:
            v[i] = -v[i]
    if np.dot(v[0], v[-1]) < 0.0:
        raise HyperbolicityError(
            "bundle section is non-orientable over the circle"
        )
    return v


def _power_iterate(apply_op, n, tol=1e-14, max_iter=5000):
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((n, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    for _ in range(max_iter):
        w = apply_op(v)
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        # compare directions modulo pointwise sign
        sign = np.sign(np.einsum("ij,ij->i", w, v))[:, None]
        delta = np.max(np.abs(w - sign * v))
        v = w
        if delta < tol:
            return v
    raise NoConvergenceError(
        "bundle power iteration did not converge", residual=delta
    )


def _constant_multiplier_section(v, DF, omega: float):
    """Rescale a pointwise-normalized section so DF v = lambda * v(.+omega).

    Returns (section, lambda).  The free overall constant is fixed so the
    geometric mean of the pointwise norms is one.
    """
    v = _align_signs(v)
    v_shift = fourier.shift(v, omega)
    v_shift /= np.linalg.norm(v_shift, axis=1, keepdims=True)
    c = np.einsum("nij,nj,ni->n", DF, v, v_shift)
    if np.any(c <= 0.0):
        raise HyperbolicityError("bundle multiplier changes sign along the circle")
    lam = float(np.exp(np.mean(np.log(c))))
    log_a = _log_cohomology(np.log(c) - np.log(lam), omega)
    return v * np.exp(log_a)[:, None], lam


def compute_bundles(circle: InvariantCircle, settings: FlowSettings) -> BundleSet:
    """Frame P(theta), shear T(theta), and multipliers for a converged circle."""
    K = circle.K
    omega = circle.omega
    n = K.shape[0]
    _, DF = strobe_grid(K, circle.params, settings)

    def forward(v):
        return fourier.shift(np.einsum("nij,nj->ni", DF, v), -omega)

    def backward(v):
        return np.linalg.solve(DF, fourier.shift(v, omega)[..., None])[..., 0]

    v_u = _power_iterate(forward, n)
    v_s = _power_iterate(backward, n)
    v_u, lambda_u = _constant_multiplier_section(v_u, DF, omega)
    v_s, lambda_s = _constant_multiplier_section(v_s, DF, omega)
    if abs(lambda_u) - 1.0 < 1e-4:
        raise HyperbolicityError(
            f"circle is not usably unstable: lambda_u = {lambda_u}"
        )

    v_t = fourier.differentiate(K)
    # Symplectic-conjugate completion: Omega(v_t, w) = 1 pointwise.
    w = (v_t @ J_SYMPLECTIC.T) / np.einsum("ni,ni->n", v_t, v_t)[:, None]

    # Expand DF w in the frame at theta + omega and clean the hyperbolic
    # components with twisted cohomology solves; the tangent component is
    # the shear T(theta).
    frame = np.stack([v_t, w, v_s, v_u], axis=2)  # columns
    frame_shift = fourier.shift(frame, omega)
    coef = np.linalg.solve(
        frame_shift, np.einsum("nij,nj->ni", DF, w)[..., None]
    )[..., 0]
    T_shear = coef[:, 0].copy()
    xi_s = _twisted_solve(coef[:, 2], omega, lambda_s)
    xi_u = _twisted_solve(coef[:, 3], omega, lambda_u)
    v_c = w + xi_s[:, None] * v_s + xi_u[:, None] * v_u

    P = np.stack([v_t, v_c, v_s, v_u], axis=2)
    conds = np.linalg.cond(P)
    log.info(
        "bundle frame condition: max %.3e (median %.3e); lambda_u = %.9g",
        float(np.max(conds)), float(np.median(conds)), lambda_u,
    )
    return BundleSet(P=P, T_shear=T_shear, lambda_s=lambda_s, lambda_u=lambda_u)


def bundle_residual(circle: InvariantCircle, bundles: BundleSet,
                    settings: FlowSettings) -> float:
    """max_i || DF(K_i) P_i - P(theta_i + omega) Lambda_i ||_max."""
    _, DF = strobe_grid(circle.K, circle.params, settings)
    P_shift = fourier.shift(bundles.P, circle.omega)
    lhs = np.einsum("nij,njk->nik", DF, bundles.P)
    rhs = np.empty_like(lhs)
    for i in range(circle.n_theta):
        rhs[i] = P_shift[i] @ bundles.reduced_matrix(i)
    return float(np.max(np.abs(lhs - rhs)))


def write_circle(path, circle: InvariantCircle) -> None:
    """Binary circle file: magic ICR1, N, omega, K coordinate-major, mu, eps."""
    n = circle.n_theta
    with open(path, "wb") as fh:
        fh.write(CIRCLE_MAGIC)
        fh.write(struct.pack("<I", n))
        fh.write(struct.pack("<d", circle.omega))
        fh.write(np.asarray(circle.K.T, dtype="<f8").tobytes())
        fh.write(struct.pack("<dd", circle.params.mu, circle.params.eps))


def read_circle(path, omega_p: float = 1.0) -> InvariantCircle:
    """Read an ICR1 file; the perturbation frequency is not stored in it."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CIRCLE_MAGIC:
            raise FileFormatError(f"{path}: bad magic {magic!r}, expected ICR1")
        (n,) = struct.unpack("<I", fh.read(4))
        (omega,) = struct.unpack("<d", fh.read(8))
        K = np.frombuffer(fh.read(8 * 4 * n), dtype="<f8").reshape(4, n).T
        mu, eps = struct.unpack("<dd", fh.read(16))
        if fh.read(1):
            raise FileFormatError(f"{path}: trailing bytes after circle data")
    params = ModelParams(mu=mu, eps=eps, omega_p=omega_p)
    return InvariantCircle(K=K.copy(), omega=omega, params=params)
