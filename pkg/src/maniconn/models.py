"""Planar circular / elliptic restricted three-body vector fields.

States are numpy arrays with the four components ``(x, y, px, py)`` on the
last axis; every function broadcasts over leading axes so batches of states
can be evaluated in one call.  Units are the usual normalized ones: the
primary separation (semi-major axis in the elliptic case) is 1, the
primaries' period is 2*pi, and G*(m1+m2) = 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError, SingularityError
from . import polyjet

#: States closer than this to either primary trip a SingularityError.  Far
#: below any physically meaningful distance; signals misuse, not dynamics.
SINGULARITY_RADIUS = 1e-12

KEPLER_TOL = 1e-13


@dataclass(frozen=True)
class ModelParams:
    """Mass ratio, perturbation strength, and perturbation frequency.

    ``eps`` is the orbital eccentricity of the primaries in the elliptic
    model; ``eps = 0`` reduces to the circular problem exactly.  ``omega_p``
    is fixed to 1 for the elliptic model (primaries' period 2*pi).
    """

    mu: float
    eps: float = 0.0
    omega_p: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must be in (0, 1), got {self.mu}")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must be in [0, 1), got {self.eps}")
        if not self.omega_p > 0.0:
            raise ValueError(f"omega_p must be positive, got {self.omega_p}")

    @property
    def map_period(self) -> float:
        return 2.0 * np.pi / self.omega_p


@dataclass(frozen=True)
class EllipticKinematics:
    """Eccentric anomaly and instantaneous angular rate at epoch t."""

    t: float
    E: float
    n: float


def kepler_solve(mean_anomaly, eps):
    """Solve E - eps*sin(E) = M for the eccentric anomaly E.

    Newton iteration seeded with E0 = M + eps*sin(M); falls back to
    bisection for any entries that have not converged after 50 steps.
    The result is continuous in M (E(M + 2*pi*k) = E(M) + 2*pi*k).
    """
    M = np.asarray(mean_anomaly, dtype=float)
    scalar = M.ndim == 0
    M = np.atleast_1d(M)
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must be in [0, 1), got {eps}")

    # Reduce to [0, 2pi) and add the whole turns back at the end so that E
    # is continuous (not just correct mod 2pi).
    turns = np.floor(M / (2.0 * np.pi))
    Mr = M - 2.0 * np.pi * turns

    E = Mr + eps * np.sin(Mr)
    converged = np.zeros(E.shape, dtype=bool)
    for _ in range(50):
        f = E - eps * np.sin(E) - Mr
        converged = np.abs(f) < KEPLER_TOL
        if converged.all():
            break
        E = E - f / (1.0 - eps * np.cos(E))
    if not converged.all():
        bad = ~converged
        E[bad] = _kepler_bisect(Mr[bad], eps)
        f = E - eps * np.sin(E) - Mr
        if np.any(np.abs(f) >= KEPLER_TOL):
            raise NoConvergenceError(
                "Kepler solve failed to converge", residual=float(np.max(np.abs(f)))
            )

    E = E + 2.0 * np.pi * turns
    return float(E[0]) if scalar else E


def _kepler_bisect(Mr, eps):
    # g(E) = E - eps*sin(E) - M is increasing; root lies in [0, 2pi].
    lo = np.zeros_like(Mr)
    hi = np.full_like(Mr, 2.0 * np.pi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = mid - eps * np.sin(mid) - Mr
        take_hi = g > 0.0
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
    return 0.5 * (lo + hi)


def elliptic_kinematics(t, eps) -> EllipticKinematics:
    """E(t) and n(t) for the primaries' ellipse (a = 1, period 2*pi).

    t = 0 is a periapse passage, so the mean anomaly equals t.  The angular
    rate follows from the two-body angular momentum h = sqrt(1 - eps^2) and
    r = 1 - eps*cos(E):  n = h / r^2.
    """
    E = kepler_solve(t, eps)
    r = 1.0 - eps * np.cos(E)
    n = np.sqrt(1.0 - eps * eps) / (r * r)
    return EllipticKinematics(t=float(t), E=float(E), n=float(n))


def _geometry(t, params: ModelParams):
    """Primary separation rho(t) and angular rate n(t); (1.0, 1.0) at eps=0."""
    if params.eps == 0.0:
        return 1.0, 1.0
    kin = elliptic_kinematics(t, params.eps)
    rho = 1.0 - params.eps * np.cos(kin.E)
    return rho, kin.n


def _offsets(state, t, params: ModelParams):
    """Displacements and distances from both primaries, with guard."""
    rho, n = _geometry(t, params)
    x = state[..., 0]
    y = state[..., 1]
    dx1 = x + params.mu * rho
    dx2 = x - (1.0 - params.mu) * rho
    r1 = np.sqrt(dx1 * dx1 + y * y)
    r2 = np.sqrt(dx2 * dx2 + y * y)
    if np.any(r1 < SINGULARITY_RADIUS) or np.any(r2 < SINGULARITY_RADIUS):
        raise SingularityError("state within guard radius of a primary")
    return n, dx1, dx2, r1, r2


def vector_field(state, t, params: ModelParams):
    """Hamilton's equations for the (circular or elliptic) planar RTBP.

    Returns d(state)/dt with the same shape as ``state``.
    """
    state = np.asarray(state, dtype=float)
    n, dx1, dx2, r1, r2 = _offsets(state, t, params)
    y = state[..., 1]
    px = state[..., 2]
    py = state[..., 3]
    one_m_mu = 1.0 - params.mu

    inv_r13 = r1 ** -3
    inv_r23 = r2 ** -3
    gx = -one_m_mu * dx1 * inv_r13 - params.mu * dx2 * inv_r23
    gy = -(one_m_mu * inv_r13 + params.mu * inv_r23) * y

    out = np.empty_like(state)
    out[..., 0] = px + n * y
    out[..., 1] = py - n * state[..., 0]
    out[..., 2] = n * py + gx
    out[..., 3] = -n * px + gy
    return out


def hamiltonian(state, t, params: ModelParams):
    """Energy function; an integral of motion only when eps = 0."""
    state = np.asarray(state, dtype=float)
    n, _, _, r1, r2 = _offsets(state, t, params)
    x = state[..., 0]
    y = state[..., 1]
    px = state[..., 2]
    py = state[..., 3]
    return (
        0.5 * (px * px + py * py)
        + n * (px * y - py * x)
        - (1.0 - params.mu) / r1
        - params.mu / r2
    )


def variational_field(state, t, params: ModelParams):
    """Jacobian of ``vector_field`` with respect to the state.

    Shape ``state.shape + (4,)`` with axes (..., row, column); trace-free
    because the field is Hamiltonian.
    """
    state = np.asarray(state, dtype=float)
    n, dx1, dx2, r1, r2 = _offsets(state, t, params)
    y = state[..., 1]
    one_m_mu = 1.0 - params.mu

    inv_r13 = r1 ** -3
    inv_r23 = r2 ** -3
    inv_r15 = inv_r13 / (r1 * r1)
    inv_r25 = inv_r23 / (r2 * r2)

    gxx = -one_m_mu * (inv_r13 - 3.0 * dx1 * dx1 * inv_r15) - params.mu * (
        inv_r23 - 3.0 * dx2 * dx2 * inv_r25
    )
    gxy = 3.0 * (one_m_mu * dx1 * y * inv_r15 + params.mu * dx2 * y * inv_r25)
    gyy = -one_m_mu * (inv_r13 - 3.0 * y * y * inv_r15) - params.mu * (
        inv_r23 - 3.0 * y * y * inv_r25
    )

    jac = np.zeros(state.shape + (4,), dtype=float)
    jac[..., 0, 1] = n
    jac[..., 0, 2] = 1.0
    jac[..., 1, 0] = -n
    jac[..., 1, 3] = 1.0
    jac[..., 2, 0] = gxx
    jac[..., 2, 1] = gxy
    jac[..., 2, 3] = n
    jac[..., 3, 0] = gxy
    jac[..., 3, 1] = gyy
    jac[..., 3, 2] = -n
    return jac


def vector_field_jet(coeffs, t, params: ModelParams):
    """Vector field applied to truncated Taylor polynomials in one variable.

    ``coeffs`` has shape (..., 4, K+1): per state component, the Taylor
    coefficients of its expansion in the transverse manifold parameter.
    All arithmetic is carried out to truncation order K, so the result is
    the exact jet of the field along the polynomial family.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    rho, n = _geometry(t, params)
    mu = params.mu
    one_m_mu = 1.0 - mu

    x = coeffs[..., 0, :]
    y = coeffs[..., 1, :]
    px = coeffs[..., 2, :]
    py = coeffs[..., 3, :]

    dx1 = x.copy()
    dx1[..., 0] += mu * rho
    dx2 = x.copy()
    dx2[..., 0] -= one_m_mu * rho

    y2 = polyjet.mul(y, y)
    r1sq = polyjet.mul(dx1, dx1) + y2
    r2sq = polyjet.mul(dx2, dx2) + y2
    if np.any(r1sq[..., 0] < SINGULARITY_RADIUS**2) or np.any(
        r2sq[..., 0] < SINGULARITY_RADIUS**2
    ):
        raise SingularityError("jet base point within guard radius of a primary")
    inv_r13 = polyjet.power(r1sq, -1.5)
    inv_r23 = polyjet.power(r2sq, -1.5)

    gx = -one_m_mu * polyjet.mul(dx1, inv_r13) - mu * polyjet.mul(dx2, inv_r23)
    gy = polyjet.mul(-one_m_mu * inv_r13 - mu * inv_r23, y)

    out = np.empty_like(coeffs)
    out[..., 0, :] = px + n * y
    out[..., 1, :] = py - n * x
    out[..., 2, :] = n * py + gx
    out[..., 3, :] = -n * px + gy
    return out
