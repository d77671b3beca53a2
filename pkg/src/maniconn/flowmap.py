"""Trajectory propagation and the stroboscopic map.

All propagation goes through scipy's DOP853 (8th order embedded
Runge-Kutta); iterated-map residual targets of 1e-9 need the high order.
State transition matrices integrate the exact variational field alongside
the state, never finite differences.  Batches of initial conditions are
integrated as one large ODE system so the numpy-vectorized field is
evaluated once per step for the whole batch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import models
from .errors import NumericsError
from .models import ModelParams


@dataclass(frozen=True)
class FlowSettings:
    """Integrator tolerances and step cap."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_step: float = np.inf

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            tol = getattr(self, name)
            if not 0.0 < tol <= 1e-3:
                raise ValueError(f"{name} must be in (0, 1e-3], got {tol}")


@dataclass
class StrobeResult:
    """State after k applications of the stroboscopic map, plus optional DF^k."""

    state: np.ndarray
    stm: np.ndarray | None = None


def _integrate(rhs, y0, t0, tf, settings: FlowSettings):
    if tf == t0:
        return np.array(y0, dtype=float, copy=True)
    sol = solve_ivp(
        rhs,
        (t0, tf),
        np.asarray(y0, dtype=float).ravel(),
        method="DOP853",
        rtol=settings.rel_tol,
        atol=settings.abs_tol,
        max_step=settings.max_step,
        dense_output=False,
    )
    if not sol.success:
        raise NumericsError(f"integration failed on [{t0}, {tf}]: {sol.message}")
    return sol.y[:, -1]


def flow_batch(states, t0, tf, params: ModelParams, settings: FlowSettings):
    """Propagate a batch of states (n, 4) from t0 to tf."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = states.shape[0]

    def rhs(t, y):
        return models.vector_field(y.reshape(n, 4), t, params).ravel()

    return _integrate(rhs, states, t0, tf, settings).reshape(n, 4)


def flow(state, t0, tf, params: ModelParams, settings: FlowSettings):
    """Propagate a single state (4,) from t0 to tf."""
    return flow_batch(state, t0, tf, params, settings)[0]


def flow_batch_with_stm(states, t0, tf, params: ModelParams, settings: FlowSettings):
    """Propagate states (n, 4) and their state transition matrices.

    Returns (states (n, 4), stms (n, 4, 4)) with the STMs integrated from
    the identity using the exact variational field.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = states.shape[0]
    y0 = np.concatenate(
        [states, np.tile(np.eye(4).ravel(), (n, 1))], axis=1
    )  # (n, 20)

    def rhs(t, y):
        z = y.reshape(n, 20)
        x = z[:, :4]
        phi = z[:, 4:].reshape(n, 4, 4)
        dx = models.vector_field(x, t, params)
        jac = models.variational_field(x, t, params)
        dphi = np.einsum("nij,njk->nik", jac, phi)
        return np.concatenate([dx, dphi.reshape(n, 16)], axis=1).ravel()

    out = _integrate(rhs, y0, t0, tf, settings).reshape(n, 20)
    return out[:, :4].copy(), out[:, 4:].reshape(n, 4, 4).copy()


def strobe_map(state, k: int, params: ModelParams, settings: FlowSettings,
               with_stm: bool = False) -> StrobeResult:
    """k-th iterate of the time-2*pi/Omega_p map from perturbation phase 0.

    Negative k integrates backwards; k = 0 is the identity with STM = I.
    """
    tf = k * params.map_period
    if with_stm:
        x, phi = flow_batch_with_stm(state, 0.0, tf, params, settings)
        return StrobeResult(state=x[0], stm=phi[0])
    return StrobeResult(state=flow(state, 0.0, tf, params, settings))


def strobe_map_batch(states, k: int, params: ModelParams, settings: FlowSettings,
                     with_stm: bool = False):
    """Batch version of :func:`strobe_map`; returns (states, stms-or-None)."""
    tf = k * params.map_period
    if with_stm:
        return flow_batch_with_stm(states, 0.0, tf, params, settings)
    return flow_batch(states, 0.0, tf, params, settings), None


def map_applier(params: ModelParams, settings: FlowSettings):
    """Closure (state, k, with_stm) -> (state, stm|None) over the strobe map.

    The refinement stage takes the map through this interface so synthetic
    maps can be substituted in tests.
    """

    def apply(state, k, with_stm=False):
        res = strobe_map(state, k, params, settings, with_stm=with_stm)
        return res.state, res.stm

    return apply


def flow_jet(coeffs, t0, tf, params: ModelParams, settings: FlowSettings):
    """Propagate truncated Taylor expansions of a family of trajectories.

    ``coeffs`` has shape (n, 4, K+1): for each of n base points, the
    polynomial jet (in the manifold parameter) of the initial condition.
    The jet of the flow map is obtained by integrating with truncated
    polynomial arithmetic in the right-hand side.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    shape = coeffs.shape

    def rhs(t, y):
        return models.vector_field_jet(y.reshape(shape), t, params).ravel()

    return _integrate(rhs, coeffs, t0, tf, settings).reshape(shape)
