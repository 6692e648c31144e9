"""Scenario evaluation, uncertainty-size sweeps, and CSV/JSON output."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bundle import optimize_robust
from .config import RunConfig
from .emom import ForwardModel, StateTrajectory, objective_from_moments
from .errors import PrecipError
from .nominal import optimize_nominal
from .uncertainty import UncertaintySet, apply, enumerate_scenarios, nominal_index

log = logging.getLogger(__name__)

DEFAULT_SWEEP_SIZES = (0.0, 5.0, 10.0, 15.0, 20.0)


def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


@dataclass
class ScenarioRow:
    index: int
    level1: float
    level2: float
    jump: int
    jump_time: float
    objective: float
    m0: float = math.nan
    m1: float = math.nan
    m2: float = math.nan
    m3: float = math.nan
    mean: float = math.nan
    variance: float = math.nan
    status: str = "ok"


@dataclass
class ScenarioEvaluation:
    """One control evaluated on every scenario of a set."""

    control: np.ndarray
    rows: list
    nominal: int
    worst: int

    @property
    def values(self) -> np.ndarray:
        return np.array([r.objective for r in self.rows])

    @property
    def nominal_row(self) -> ScenarioRow:
        return self.rows[self.nominal]

    @property
    def worst_row(self) -> ScenarioRow:
        return self.rows[self.worst]

    def summary(self) -> dict:
        return {
            "control": [float(x) for x in self.control],
            "nominal": asdict(self.nominal_row),
            "worst": asdict(self.worst_row),
            "objective_values": [float(x) for x in self.values],
        }


def evaluate_scenarios(v, cfg: RunConfig, model: ForwardModel | None = None,
                       uset: UncertaintySet | None = None) -> ScenarioEvaluation:
    """Objective, moments, mean and variance of ``v`` on every scenario.

    Failing scenarios are recorded with their error name and do not abort.
    The worst row is the first maximizer, as in the worst-case oracle.
    """
    model = model or cfg.model()
    uset = uset or cfg.uncertainty_set()
    grid = model.grid
    v = np.asarray(v, dtype=float)
    scenarios = enumerate_scenarios(uset)
    rows = []
    for i, sc in enumerate(scenarios):
        d = sc.describe(grid.points)
        row = ScenarioRow(i, d["level1"], d["level2"], sc.jump, d["jump_time"], -math.inf)
        try:
            ms = model.solve(apply(sc, v)).moment_set()
            row.m0, row.m1, row.m2, row.m3 = ms.m0, ms.m1, ms.m2, ms.m3
            row.objective = float(objective_from_moments(ms.m0, ms.m1, ms.m2, model.spec)[0])
            row.mean, row.variance = ms.mean, ms.variance
        except PrecipError as exc:
            row.status = type(exc).__name__
        rows.append(row)
    vals = np.array([r.objective for r in rows])
    return ScenarioEvaluation(v, rows, nominal_index(scenarios), int(np.argmax(vals)))


@dataclass
class SweepRow:
    size_pct: float
    nominal_nominal: float = math.nan
    nominal_worst: float = math.nan
    robust_nominal: float = math.nan
    robust_worst: float = math.nan
    status: str = "ok"


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    nominal_control: np.ndarray | None = None
    robust_controls: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def sweep_uncertainty(cfg: RunConfig, sizes=DEFAULT_SWEEP_SIZES, model: ForwardModel | None = None) -> SweepResult:
    """Four curves per set size ``s`` (percent): both processes in the nominal scenario and in their worst case.

    The nominal optimum does not depend on the set and is computed once.
    """
    for s in sizes:
        if not 0 <= s <= 50:
            raise ValueError(f"sweep sizes must lie in [0, 50] percent, got {s}")
    model = model or cfg.model()
    aset = cfg.admissible_set(model.grid)
    out = SweepResult()
    nom = optimize_nominal(model.value_and_grad, aset, cfg.nominal)
    out.nominal_control = nom.v
    for s in sizes:
        row = SweepRow(float(s))
        try:
            uset = cfg.uncertainty_set(s / 100.0)
            ev_nom = evaluate_scenarios(nom.v, cfg, model, uset)
            row.nominal_nominal = ev_nom.nominal_row.objective
            row.nominal_worst = ev_nom.worst_row.objective
            res, _ = optimize_robust(model, aset, uset, cfg.bundle, cfg.nominal, v0=nom.v)
            ev_rob = evaluate_scenarios(res.v, cfg, model, uset)
            row.robust_nominal = ev_rob.nominal_row.objective
            row.robust_worst = ev_rob.worst_row.objective
            out.robust_controls[float(s)] = res.v
            row.status = res.status
        except PrecipError as exc:
            row.status = f"{type(exc).__name__}: {exc}"
        log.info("sweep %g%%: %s", s, row.status)
        out.rows.append(row)
    return out


# -- writers ---------------------------------------------------------------

def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])


def write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_plain(data), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def write_control(path, v, grid):
    pts = grid.points
    write_csv(path, ["t_start", "t_end", "v"], [(pts[i], pts[i + 1], float(v[i])) for i in range(grid.n)])


def read_control(path, n: int | None = None) -> np.ndarray:
    """Read a control CSV with a ``v`` column (or a single numeric column)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty control file")
    head = [h.strip() for h in rows[0]]
    if "v" in head:
        col = head.index("v")
        body = rows[1:]
    else:
        col = 0
        try:
            float(rows[0][0])
            body = rows
        except ValueError:
            body = rows[1:]
    v = np.array([float(r[col]) for r in body])
    if n is not None and len(v) != n:
        raise ValueError(f"{path}: control has {len(v)} entries, grid has {n} intervals")
    return v


def write_timeseries(path, traj: StateTrajectory, v_nominal):
    """Grid-point table; rates and ``v`` are interval values repeated at the left endpoint.

    The state columns belong to the realized inflow ``traj.v``; the last row
    (``t = T``) carries blank interval quantities.
    """
    grid = traj.grid
    nuc, gro = traj.nucleation, traj.growth
    rows = []
    for k in range(grid.n + 1):
        if k < grid.n:
            rows.append((grid.points[k], float(v_nominal[k]), float(traj.v[k]), traj.c[k], traj.ctot[k], nuc[k], gro[k]))
        else:
            rows.append((grid.points[k], "", "", traj.c[k], traj.ctot[k], "", ""))
    write_csv(path, ["t", "v", "v_perturbed", "c", "c_tot", "nucleation_rate", "growth_rate"], rows)


def write_psd(path, traj: StateTrajectory):
    x, q, idx = traj.reconstruct_psd().arrays()
    pts = traj.grid.points
    write_csv(path, ["x_nm", "q", "nucleation_time"], [(x[i], q[i], float(pts[idx[i]])) for i in range(len(x))])


def write_scenarios(path, ev: ScenarioEvaluation):
    names = [f.name for f in ScenarioRow.__dataclass_fields__.values()]
    write_csv(path, names, [[getattr(r, n) for n in names] for r in ev.rows])


def write_trace(path, trace):
    if not trace.rows:
        write_csv(path, [], [])
        return
    names = list(trace.rows[0].keys())
    write_csv(path, names, [[r.get(n, "") for n in names] for r in trace.rows])


def write_sweep(path, sweep: SweepResult):
    names = ["size_pct", "nominal_nominal", "nominal_worst", "robust_nominal", "robust_worst"]
    write_csv(path, names, [[getattr(r, n) for n in names] for r in sweep.rows])
