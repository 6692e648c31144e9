"""Two-level step perturbations of the inflow and the exact worst-case oracle."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .emom import ForwardModel, ObjectiveSpec
from .errors import DimensionMismatch, EmptyPopulation, NumericalBlowup, DegenerateCharacteristic
from .sensitivity import gradient_objective


@dataclass(frozen=True)
class UncertaintySet:
    """Multiplicative levels ``{lower, 1, upper}`` with a single jump on an ``n``-point grid.

    ``test_mode`` admits the degenerate set ``lower = upper = 1`` (and any
    levels touching 1), which the production path rejects.
    """

    lower: float
    upper: float
    n: int
    test_mode: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one discretization step")
        if self.test_mode:
            if not (0 < self.lower <= 1 <= self.upper < math.inf):
                raise ValueError("need 0 < lower <= 1 <= upper < inf")
        elif not (0 < self.lower < 1 < self.upper < math.inf):
            raise ValueError("need 0 < lower < 1 < upper < inf")

    @classmethod
    def symmetric(cls, size: float, n: int) -> "UncertaintySet":
        """``[1 - size, 1 + size]``; ``size = 0`` gives the degenerate nominal-only set."""
        return cls(1.0 - size, 1.0 + size, n, test_mode=size == 0.0)

    @property
    def levels(self) -> tuple:
        return tuple(sorted({self.lower, 1.0, self.upper}))

    def size(self) -> int:
        k = len(self.levels)
        return k + k * (k - 1) * (self.n - 1)


@dataclass(frozen=True)
class UncertaintyScenario:
    """``u_i = level1`` for ``i <= jump`` (1-based) and ``level2`` afterwards."""

    level1: float
    level2: float
    jump: int

    def expand(self, n: int) -> np.ndarray:
        if not 1 <= self.jump <= n:
            raise DimensionMismatch(f"jump {self.jump} outside 1..{n}")
        u = np.full(n, self.level2, dtype=float)
        u[: self.jump] = self.level1
        return u

    @property
    def is_nominal(self) -> bool:
        return self.level1 == 1.0 and self.level2 == 1.0

    def describe(self, points) -> dict:
        """Report descriptor; the jump happens at ``t_j``."""
        return {"level1": self.level1, "level2": self.level2, "jump_time": float(points[self.jump])}


def enumerate_scenarios(uset: UncertaintySet) -> list:
    """Distinct scenarios: constants first, then ordered level pairs by jump index.

    Constant vectors are listed once (with ``jump = n``) instead of once per jump.
    """
    lv = uset.levels
    out = [UncertaintyScenario(a, a, uset.n) for a in lv]
    for a in lv:
        for b in lv:
            if a == b:
                continue
            out.extend(UncertaintyScenario(a, b, j) for j in range(1, uset.n))
    return out


def apply(scenario: UncertaintyScenario, v) -> np.ndarray:
    """Entrywise product of the expanded scenario with ``v`` (``v`` is not modified)."""
    v = np.asarray(v, dtype=float)
    return scenario.expand(len(v)) * v


def nominal_index(scenarios) -> int:
    return next(i for i, s in enumerate(scenarios) if s.is_nominal)


@dataclass(frozen=True)
class WorstCaseResult:
    scenario: UncertaintyScenario
    index: int
    value: float
    subgradient: np.ndarray
    values: np.ndarray
    scenarios: list
    tolerance: float = 0.0


def default_workers() -> int:
    env = os.environ.get("PRECIPOPT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def scenario_values(v, scenarios, model: ForwardModel, spec: ObjectiveSpec | None = None,
                    workers: int | None = None) -> np.ndarray:
    """Objective for every scenario; failed or empty-population scenarios score ``-inf``."""
    spec = spec or model.spec
    v = np.asarray(v, dtype=float)

    def one(sc):
        try:
            return model.objective(apply(sc, v), spec)
        except (EmptyPopulation, NumericalBlowup, DegenerateCharacteristic):
            return -math.inf

    workers = default_workers() if workers is None else workers
    # threads only help when the compiled kernels release the GIL
    if workers > 1 and _backend.active_name() == "compiled" and len(scenarios) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(one, scenarios))
    else:
        vals = [one(sc) for sc in scenarios]
    return np.array(vals, dtype=float)


def worst_case(v, uset: UncertaintySet, model: ForwardModel, spec: ObjectiveSpec | None = None,
               workers: int | None = None, scenarios=None) -> WorstCaseResult:
    """Exact maximizer over the enumerated set and the chain-rule subgradient there.

    Ties go to the first maximizer in canonical order.
    """
    spec = spec or model.spec
    v = np.asarray(v, dtype=float)
    if len(v) != uset.n:
        raise DimensionMismatch(f"control has {len(v)} entries, uncertainty set expects {uset.n}")
    scenarios = enumerate_scenarios(uset) if scenarios is None else scenarios
    vals = scenario_values(v, scenarios, model, spec, workers)
    if not np.any(np.isfinite(vals)):
        raise EmptyPopulation("every scenario yields an empty population")
    idx = int(np.argmax(vals))
    sc = scenarios[idx]
    u = sc.expand(len(v))
    res = gradient_objective(u * v, model, spec)
    return WorstCaseResult(sc, idx, float(vals[idx]), u * res.gradient, vals, scenarios)
