"""Projected gradient with Armijo backtracking for the nominal problem."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import BadInitialControl, DegenerateCharacteristic, EmptyPopulation, NumericalBlowup
from .grid import AdmissibleSet

log = logging.getLogger(__name__)

_TRIAL_FAILURES = (EmptyPopulation, NumericalBlowup, DegenerateCharacteristic)


@dataclass(frozen=True)
class NominalConfig:
    max_iter: int = 10000
    initial_step: float = 1.0
    backtrack: float = 0.5
    sufficient_decrease: float = 1e-4
    tol_stationarity: float = 1e-6
    min_step: float = 1e-14
    # trial step after an accepted one: Barzilai-Borwein estimate, or the last
    # step times step_growth when the curvature estimate is not positive
    step_rule: str = "bb"
    step_growth: float = 2.0
    max_step: float = 1e6

    def __post_init__(self):
        if not self.initial_step > 0:
            raise ValueError("initial step must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient-decrease constant must lie in (0, 1)")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.step_rule not in ("bb", "growth"):
            raise ValueError("step_rule must be 'bb' or 'growth'")


@dataclass
class OptTrace:
    """One row per iteration: objective, stationarity measure, step size, accepted flag."""

    rows: list = field(default_factory=list)

    def add(self, **row):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return [r[name] for r in self.rows]


@dataclass
class NominalResult:
    v: np.ndarray
    value: float
    stationarity: float
    iterations: int
    converged: bool
    trace: OptTrace
    status: str


def stationarity(v, grad, aset: AdmissibleSet) -> float:
    return float(np.linalg.norm(v - aset.project(v - grad)))


def optimize_nominal(fun, aset: AdmissibleSet, cfg: NominalConfig | None = None, v0=None) -> NominalResult:
    """Minimize ``fun`` over ``aset``; ``fun(v)`` returns ``(value, gradient)``.

    Starts from the uniform admissible control unless ``v0`` is given. Trial
    points where the forward model fails count as rejected steps.
    """
    cfg = cfg or NominalConfig()
    v = aset.project(aset.uniform() if v0 is None else np.asarray(v0, dtype=float))
    try:
        value, grad = fun(v)
    except _TRIAL_FAILURES as exc:
        raise BadInitialControl(f"objective undefined at the initial control: {exc}") from exc
    trace = OptTrace()
    step = cfg.initial_step
    stat = stationarity(v, grad, aset)
    trace.add(iteration=0, objective=value, stationarity=stat, step=0.0, accepted=True)
    status = "max_iter"
    it = 0
    while True:
        if stat <= cfg.tol_stationarity:
            status = "stationary"
            break
        if it >= cfg.max_iter:
            break
        it += 1
        accepted = False
        while step >= cfg.min_step:
            trial = aset.project(v - step * grad)
            try:
                tval, tgrad = fun(trial)
            except _TRIAL_FAILURES:
                step *= cfg.backtrack
                continue
            if tval <= value + cfg.sufficient_decrease * float(grad @ (trial - v)):
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            trace.add(iteration=it, objective=value, stationarity=stat, step=step, accepted=False)
            status = "line_search_failed"
            break
        sv, yv = trial - v, tgrad - grad
        v, value, grad = trial, tval, tgrad
        stat = stationarity(v, grad, aset)
        trace.add(iteration=it, objective=value, stationarity=stat, step=step, accepted=True)
        curv = float(sv @ yv)
        if cfg.step_rule == "bb" and curv > 0.0:
            step = float(sv @ sv) / curv
        else:
            step = step * cfg.step_growth
        step = min(max(step, cfg.min_step), cfg.max_step)
    log.info("nominal optimization: %s after %d iterations, J=%.6g, stat=%.3g", status, it, value, stat)
    return NominalResult(v, float(value), stat, it, status == "stationary", trace, status)
