"""Search over the default rate-law constants.

The nucleation and growth constants are not known for the target system, so
they are picked from a small fixed grid: a candidate must bring the nominal
optimum's mean within a band around the target size, and must reproduce the
qualitative robust-versus-nominal orderings on the reference uncertainty set.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field

from .bundle import BundleConfig, optimize_robust
from .emom import ForwardModel, ObjectiveSpec
from .errors import PrecipError
from .grid import AdmissibleSet, make_uniform_grid
from .kinetics import KineticsParams
from .nominal import NominalConfig
from .uncertainty import UncertaintySet, enumerate_scenarios, worst_case

log = logging.getLogger(__name__)

K_N_GRID = (0.3, 1.0, 3.0)
B_GRID = (1.0, 2.0, 3.0)
K_G_GRID = (2.0, 2.5, 3.0)


@dataclass
class CalibrationCandidate:
    k_N: float
    B: float
    k_G: float
    nominal_value: float = float("nan")
    nominal_mean: float = float("nan")
    worst_ratio: float = float("nan")
    robust_ratio: float = float("nan")
    nominal_worst_mean: float = float("nan")
    robust_worst_mean: float = float("nan")
    accepted: bool = False
    reason: str = ""


@dataclass
class CalibrationReport:
    candidates: list = field(default_factory=list)
    chosen: CalibrationCandidate | None = None

    def to_dict(self) -> dict:
        return {
            "candidates": [asdict(c) for c in self.candidates],
            "chosen": None if self.chosen is None else asdict(self.chosen),
        }


def evaluate_candidate(k_N, B, k_G, *, budget=4.0, T=10.0, n_t=100, size=0.1,
                       spec: ObjectiveSpec | None = None, band=0.05,
                       nominal_cfg: NominalConfig | None = None,
                       bundle_cfg: BundleConfig | None = None) -> CalibrationCandidate:
    spec = spec or ObjectiveSpec()
    cand = CalibrationCandidate(k_N, B, k_G)
    grid = make_uniform_grid(T, n_t)
    params = KineticsParams(k_N=k_N, B=B, k_G=k_G)
    model = ForwardModel(grid, params, spec)
    aset = AdmissibleSet.for_grid(grid, 0.0, 3.0 * budget / T, budget)
    uset = UncertaintySet.symmetric(size, n_t)
    scenarios = enumerate_scenarios(uset)
    nominal_cfg = nominal_cfg or NominalConfig(max_iter=10000)
    try:
        robust, nom = optimize_robust(model, aset, uset, bundle_cfg, nominal_cfg)
    except PrecipError as exc:
        cand.reason = f"solver failure: {exc}"
        return cand
    cand.nominal_value = nom.value
    cand.nominal_mean = model.solve(nom.v).moment_set().mean
    wn = worst_case(nom.v, uset, model, scenarios=scenarios)
    wr = worst_case(robust.v, uset, model, scenarios=scenarios)
    cand.worst_ratio = wn.value / nom.value
    cand.robust_ratio = wr.value / wn.value
    cand.nominal_worst_mean = model.solve(wn.scenario.expand(n_t) * nom.v).moment_set().mean
    cand.robust_worst_mean = model.solve(wr.scenario.expand(n_t) * robust.v).moment_set().mean
    target = spec.target
    if abs(cand.nominal_mean - target) > band * target:
        cand.reason = "nominal mean outside band"
    elif cand.worst_ratio < 2.0:
        cand.reason = "nominal process not sensitive enough"
    elif cand.robust_ratio > 0.9:
        cand.reason = "robust worst case not clearly better"
    elif abs(cand.robust_worst_mean - target) >= abs(cand.nominal_worst_mean - target):
        cand.reason = "robust worst-case mean not closer to target"
    else:
        cand.accepted = True
    return cand


def calibrate(grid=None, **kwargs) -> CalibrationReport:
    """Evaluate every candidate; choose the accepted one with the mean closest to target.

    Ties keep grid order. ``kwargs`` are passed to :func:`evaluate_candidate`.
    """
    grid = grid if grid is not None else list(itertools.product(K_N_GRID, B_GRID, K_G_GRID))
    report = CalibrationReport()
    target = (kwargs.get("spec") or ObjectiveSpec()).target
    for k_N, B, k_G in grid:
        cand = evaluate_candidate(k_N, B, k_G, **kwargs)
        log.info("candidate k_N=%g B=%g k_G=%g: %s", k_N, B, k_G, "accepted" if cand.accepted else cand.reason)
        report.candidates.append(cand)
    ok = [c for c in report.candidates if c.accepted]
    if ok:
        report.chosen = min(ok, key=lambda c: abs(c.nominal_mean - target))
    return report
