"""State residual and the adjoint gradient of the objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .emom import ForwardModel, ObjectiveSpec, StateTrajectory, objective_from_moments
from .errors import DimensionMismatch
from .grid import as_control


@dataclass(frozen=True)
class GradientResult:
    gradient: np.ndarray
    value: float
    adjoint: np.ndarray
    trajectory: StateTrajectory


def state_residual(v, c, model: ForwardModel) -> np.ndarray:
    """Residual of the incremental concentration recurrence at an arbitrary state ``c``.

    ``F[0] = c[0]`` and ``F[k+1] = c[k+1] - c[k] - gamma1 (ctot[k+1] - ctot[k])
    + gamma2 N(c[k]) delta[k] G(k,k)**3 + gamma2 sum_{l<k} N(c[l]) delta[l] (G(l,k)**3 - G(l,k-1)**3)``.
    ``F[k+1]`` depends on ``c[0..k+1]`` only and has unit slope in ``c[k+1]``.
    """
    grid, p = model.grid, model.params
    v = as_control(v, grid)
    c = np.asarray(c, dtype=float)
    if c.shape != (grid.n + 1,):
        raise DimensionMismatch(f"state must have {grid.n + 1} entries, got {c.shape}")
    kern = _backend.get(model.backend)
    ctot = kern.total_concentration(v, grid.points, grid.deltas, p.k_r)
    d = grid.deltas
    rates = [model.kinetics.rates(ck) for ck in c[:-1]]
    n = np.array([r[0] for r in rates]) * d
    g = np.array([r[2] for r in rates]) * d
    s = np.cumsum(g)
    sprev = np.concatenate(([0.0], s[:-1]))
    a = 1.0 - p.beta
    xa = p.x_n ** a

    def cube(l_hi, k):
        # G(l, k)**3 for l = 0..l_hi-1
        return (xa + a * (s[k] - sprev[:l_hi])) ** (3.0 / a)

    F = np.empty(grid.n + 1)
    F[0] = c[0]
    for k in range(grid.n):
        rhs = c[k] + p.gamma1 * (ctot[k + 1] - ctot[k])
        rhs -= p.g2 * n[k] * cube(k + 1, k)[k]
        if k > 0:
            rhs -= p.g2 * np.dot(n[:k], cube(k, k) - cube(k, k - 1))
        F[k + 1] = c[k + 1] - rhs
    return F


def gradient_objective(v, model: ForwardModel, spec: ObjectiveSpec | None = None) -> GradientResult:
    """Objective and its gradient with respect to the control by one reverse sweep.

    The objective has no explicit control dependence, so the gradient is
    ``-lam^T dF/dv`` with ``(dF/dc)^T lam = dJ/dc``; the state Jacobian is unit
    lower triangular and the system is solved by back substitution.
    """
    spec = spec or model.spec
    traj = model.solve(v)
    p = model.params
    grid = model.grid
    kern = _backend.get(model.backend)
    m = kern.moments(traj.n, traj.s, p.x_n, p.beta, grid.n)
    value, dj = objective_from_moments(m[0], m[1], m[2], spec)
    grad, lam = kern.adjoint(
        traj.v, grid.points, grid.deltas, p.k_r, p.gamma1, p.g2, p.x_n, p.beta,
        traj.n, traj.g, traj.s, traj.dn, traj.dg, dj,
    )
    return GradientResult(np.asarray(grad), float(value), np.asarray(lam), traj)


def fd_gradient(v, model: ForwardModel, spec: ObjectiveSpec | None = None, h: float = 1e-6) -> np.ndarray:
    """Central finite differences with relative step ``h * max(1, |v_i|)``."""
    spec = spec or model.spec
    from .emom import objective

    v = as_control(v, model.grid)
    out = np.zeros_like(v)
    for i in range(len(v)):
        step = h * max(1.0, abs(v[i]))
        vp = v.copy()
        vm = v.copy()
        vp[i] += step
        vm[i] -= step
        out[i] = (objective(model.solve(vp), spec) - objective(model.solve(vm), spec)) / (2.0 * step)
    return out
