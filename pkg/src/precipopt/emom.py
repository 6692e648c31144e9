"""Discrete exact-method-of-moments forward model.

The liquid-phase concentration is marched on the time grid; moments and the
particle size distribution are then read off the discrete characteristics.
All arrays use 0-based grid indices: ``c[k]`` is the concentration at
``t[k]`` for ``k = 0..N`` and ``v[l]``, ``N(c[l])``, ``G0(c[l])`` act on the
interval ``[t[l], t[l+1])``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DegenerateCharacteristic, EmptyPopulation, NumericalBlowup
from .grid import TimeGrid, as_control
from .kinetics import ClassicalKinetics, KineticsModel, KineticsParams

M0_MIN = 1e-12


@dataclass(frozen=True)
class ObjectiveSpec:
    """Weights of the squared mean deviation and of the variance, and the target mean (nm)."""

    w1: float = 1.0
    w2: float = 1.0
    target: float = 4.0
    m0_min: float = M0_MIN

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0:
            raise ValueError("objective weights must be nonnegative")
        if not self.target > 0:
            raise ValueError("target mean must be positive")


@dataclass(frozen=True)
class MomentSet:
    m0: float
    m1: float
    m2: float
    m3: float

    @property
    def mean(self) -> float:
        return self.m1 / self.m0

    @property
    def variance(self) -> float:
        mu = self.m1 / self.m0
        return self.m2 / self.m0 - mu * mu


@dataclass(frozen=True)
class PsdSample:
    x: float
    q: float
    index: int


@dataclass(frozen=True)
class PsdReconstruction:
    samples: list
    dropped: int

    def arrays(self):
        """``(x, q, index)`` arrays sorted by increasing size."""
        x = np.array([s.x for s in self.samples])
        q = np.array([s.q for s in self.samples])
        idx = np.array([s.index for s in self.samples], dtype=int)
        order = np.argsort(x, kind="stable")
        return x[order], q[order], idx[order]


class StateTrajectory:
    """Solved concentrations plus the per-interval rates and growth prefix sums."""

    def __init__(self, v, grid, params, kinetics, c, ctot, n, g, s, dn, dg, backend=None):
        self.backend = backend
        self.v = v
        self.grid = grid
        self.params = params
        self.kinetics = kinetics
        self.c = c
        self.ctot = ctot
        self.n = n
        self.g = g
        self.s = s
        self.dn = dn
        self.dg = dg
        for arr in (v, c, ctot, n, g, s, dn, dg):
            arr.setflags(write=False)

    @property
    def nucleation(self) -> np.ndarray:
        """``N(c[l])`` per interval."""
        return self.n / self.grid.deltas

    @property
    def growth(self) -> np.ndarray:
        """``G0(c[l])`` per interval."""
        return self.g / self.grid.deltas

    def _base(self, l, k):
        a = 1.0 - self.params.beta
        sp = self.s[l - 1] if l > 0 else 0.0
        return self.params.x_n ** a + a * (self.s[k] - sp)

    def characteristic_size(self, l: int, k: int) -> float:
        """Size at ``t[k+1]`` of a particle nucleated at ``t[l]`` (``0 <= l <= k < N``)."""
        if not 0 <= l <= k < self.grid.n:
            raise IndexError(f"need 0 <= l <= k < {self.grid.n}, got l={l}, k={k}")
        base = self._base(l, k)
        if base <= 0.0:
            raise DegenerateCharacteristic(k)
        return base ** (1.0 / (1.0 - self.params.beta))

    def moments(self, p: int, k: int | None = None) -> float:
        """``m_p(t[k]) = sum_{l<k} N(c[l]) delta[l] G(l, k-1)**p``; ``k`` defaults to ``N``."""
        if p not in (0, 1, 2, 3):
            raise ValueError("moment order must be 0..3")
        return float(self._moment_vector(k)[p])

    def _moment_vector(self, k=None):
        k = self.grid.n if k is None else k
        if not 0 <= k <= self.grid.n:
            raise IndexError(f"time index {k} outside 0..{self.grid.n}")
        kern = _backend.get(self.backend)
        return kern.moments(self.n, self.s, self.params.x_n, self.params.beta, k)

    def moment_set(self, k: int | None = None) -> MomentSet:
        m = self._moment_vector(k)
        return MomentSet(*map(float, m))

    def mass_balance_residual(self) -> np.ndarray:
        """``gamma1 * ctot[k] - gamma2 * m3(t[k]) - c[k]`` for every grid index."""
        out = np.empty(self.grid.n + 1)
        for k in range(self.grid.n + 1):
            m3 = self._moment_vector(k)[3]
            out[k] = self.params.gamma1 * self.ctot[k] - self.params.g2 * m3 - self.c[k]
        return out

    def reconstruct_psd(self, k: int | None = None, g_min: float = 1e-12) -> PsdReconstruction:
        """Number density samples ``q = x**(-beta) N / G0`` along each characteristic at ``t[k]``."""
        k = self.grid.n if k is None else k
        if not 1 <= k <= self.grid.n:
            raise IndexError(f"time index {k} outside 1..{self.grid.n}")
        beta = self.params.beta
        nuc = self.nucleation
        gro = self.growth
        samples = []
        dropped = 0
        for l in range(k):
            if nuc[l] <= 0.0:
                continue
            if gro[l] <= g_min:
                dropped += 1
                continue
            x = self.characteristic_size(l, k - 1)
            samples.append(PsdSample(x, x ** (-beta) * nuc[l] / gro[l], l))
        return PsdReconstruction(samples, dropped)


def total_concentration(v, grid: TimeGrid, k_r: float) -> np.ndarray:
    """Total concentration at all ``N+1`` grid points for a piecewise-constant inflow."""
    v = as_control(v, grid)
    if not k_r > 0:
        raise ValueError("k_r must be positive")
    return _backend.get().total_concentration(v, grid.points, grid.deltas, float(k_r))


def _uses_compiled_law(kinetics, kern):
    return type(kinetics) is ClassicalKinetics and hasattr(kern, "forward_cnt")


def solve_state(
    v,
    grid: TimeGrid,
    params: KineticsParams,
    kinetics: KineticsModel | None = None,
    backend: str | None = None,
) -> StateTrajectory:
    """March the concentration recurrence for control ``v``.

    Controls need not be admissible (perturbed controls are solved too).
    """
    v = as_control(v, grid)
    kinetics = kinetics if kinetics is not None else ClassicalKinetics(params)
    kern = _backend.get(backend)
    args = (v, grid.points, grid.deltas, params.k_r, params.gamma1, params.g2, params.x_n, params.beta)
    if _uses_compiled_law(kinetics, kern):
        out = kern.forward_cnt(*args, kinetics.k_N, kinetics.B, kinetics.k_G, kinetics.c_sat, kinetics.eps)
    else:
        from . import _kernels_py

        out = _kernels_py.forward(*args, kinetics.rates)
    c, ctot, n, g, s, dn, dg, bad = out
    if bad >= 0:
        raise NumericalBlowup(bad)
    if bad <= -2:
        raise DegenerateCharacteristic(-2 - bad)
    return StateTrajectory(v, grid, params, kinetics, c, ctot, n, g, s, dn, dg, backend)


def objective_from_moments(m0, m1, m2, spec: ObjectiveSpec):
    """Objective value and its partial derivatives with respect to ``(m0, m1, m2)``."""
    if not m0 > spec.m0_min:
        raise EmptyPopulation(f"zeroth moment {m0:.3g} at final time is below {spec.m0_min:.1g}")
    mu = m1 / m0
    dev = mu - spec.target
    value = spec.w1 * dev * dev + spec.w2 * (m2 / m0 - mu * mu)
    d0 = -2.0 * spec.w1 * dev * mu / m0 + spec.w2 * (-m2 / m0 + 2.0 * mu * mu) / m0
    d1 = 2.0 * spec.w1 * dev / m0 - 2.0 * spec.w2 * mu / m0
    d2 = spec.w2 / m0
    return value, np.array([d0, d1, d2])


def objective(traj: StateTrajectory, spec: ObjectiveSpec) -> float:
    m = traj._moment_vector()
    return float(objective_from_moments(m[0], m[1], m[2], spec)[0])


class ForwardModel:
    """Grid, kinetics and objective bundled for repeated solves."""

    def __init__(self, grid: TimeGrid, params: KineticsParams, spec: ObjectiveSpec | None = None,
                 kinetics: KineticsModel | None = None, backend: str | None = None):
        self.grid = grid
        self.params = params
        self.spec = spec or ObjectiveSpec()
        self.kinetics = kinetics if kinetics is not None else ClassicalKinetics(params)
        self.backend = backend

    def solve(self, v) -> StateTrajectory:
        return solve_state(v, self.grid, self.params, self.kinetics, self.backend)

    def objective(self, v, spec: ObjectiveSpec | None = None) -> float:
        return objective(self.solve(v), spec or self.spec)

    def value_and_grad(self, v):
        from .sensitivity import gradient_objective

        res = gradient_objective(v, self)
        return res.value, res.gradient
