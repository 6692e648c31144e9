"""Command-line entry point: ``precipopt <command> [--config PATH] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__, _backend
from .bundle import optimize_robust
from .calibration import calibrate
from .config import RunConfig, load_config
from .errors import ConfigError, PrecipError
from .nominal import optimize_nominal
from . import report as rp

log = logging.getLogger("precipopt")

COMMANDS = ("simulate", "optimize-nominal", "optimize-robust", "worst-case", "evaluate", "sweep", "calibrate")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="precipopt", description="Nominal and robust inflow optimization for particle precipitation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "simulate": "solve the forward model for one control",
        "optimize-nominal": "optimize the inflow for the nominal scenario",
        "optimize-robust": "optimize the inflow against the worst scenario",
        "worst-case": "find the worst scenario for a control",
        "evaluate": "evaluate a control on every scenario",
        "sweep": "nominal and robust optima across uncertainty-set sizes",
        "calibrate": "search the default rate-law constants",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", metavar="PATH", help="TOML run configuration (defaults if omitted)")
        s.add_argument("--out", metavar="DIR", help="output directory (overrides [output] directory)")
        s.add_argument("--uncertainty-size", metavar="PCT", type=float,
                       help="symmetric set [1 - PCT/100, 1 + PCT/100]; 0 gives the nominal-only set")
        s.add_argument("--control", metavar="PATH", help="control CSV with a 'v' column")
        s.add_argument("-v", "--verbose", action="count", default=0)
        if name == "sweep":
            s.add_argument("--sizes", metavar="PCT", type=float, nargs="+", default=list(rp.DEFAULT_SWEEP_SIZES))
    return p


def _outdir(args, cfg: RunConfig) -> str:
    out = args.out or cfg.output.directory
    os.makedirs(out, exist_ok=True)
    return out


def _control(args, cfg, grid, required):
    if args.control is None:
        if required:
            raise UsageError(f"{args.command} needs --control PATH")
        return cfg.admissible_set(grid).uniform()
    return rp.read_control(args.control, grid.n)


def _base_report(args, cfg):
    return {"command": args.command, "version": __version__, "backend": _backend.active_name(),
            "config": cfg.to_dict(), "seeds": []}


def _nominal_summary(res):
    return {"status": res.status, "iterations": res.iterations, "value": res.value,
            "stationarity": res.stationarity, "converged": res.converged}


def _bundle_summary(res):
    return {"status": res.status, "value": res.value, "serious_steps": res.serious_steps,
            "inner_iterations": res.inner_iterations, "planes": res.planes, "worst_index": res.tag}


def _write_state(out, model, v, scenario=None, suffix=""):
    from .uncertainty import apply

    realized = v if scenario is None else apply(scenario, v)
    traj = model.solve(realized)
    rp.write_timeseries(os.path.join(out, f"timeseries{suffix}.csv"), traj, v)
    rp.write_psd(os.path.join(out, f"psd{suffix}.csv"), traj)


def _cross(report, evs):
    """Evaluate each process at the other processes' worst scenarios too."""
    for name, ev in evs.items():
        block = report["processes"][name]
        for other, ev_o in evs.items():
            block[f"at_{other}_worst"] = asdict(ev.rows[ev_o.worst])


def run(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.uncertainty_size is not None:
        cfg = cfg.with_uncertainty_size(args.uncertainty_size / 100.0)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
    out = _outdir(args, cfg)
    model = cfg.model()
    grid = model.grid
    aset = cfg.admissible_set(grid)
    rep = _base_report(args, cfg)
    timings = {}
    t0 = time.perf_counter()
    cmd = args.command

    if cmd == "simulate":
        v = _control(args, cfg, grid, required=False)
        traj = model.solve(v)
        ms = traj.moment_set()
        rep["simulation"] = {"control": v, "moments": asdict(ms), "mean": ms.mean, "variance": ms.variance,
                             "objective": model.objective(v),
                             "mass_balance_max_abs": float(np.max(np.abs(traj.mass_balance_residual())))}
        _write_state(out, model, v)

    elif cmd == "optimize-nominal":
        res = optimize_nominal(model.value_and_grad, aset, cfg.nominal)
        timings["nominal"] = time.perf_counter() - t0
        ms = model.solve(res.v).moment_set()
        rep["optimizer"] = {"nominal": _nominal_summary(res)}
        rep["processes"] = {"nominal": {"control": res.v, "moments": asdict(ms), "mean": ms.mean,
                                        "variance": ms.variance, "objective": res.value}}
        rp.write_control(os.path.join(out, "nominal.csv"), res.v, grid)
        rp.write_trace(os.path.join(out, "trace_nominal.csv"), res.trace)
        _write_state(out, model, res.v)

    elif cmd == "optimize-robust":
        uset = cfg.uncertainty_set()
        res, nom = optimize_robust(model, aset, uset, cfg.bundle, cfg.nominal)
        timings["optimize"] = time.perf_counter() - t0
        evs = {"nominal": rp.evaluate_scenarios(nom.v, cfg, model, uset),
               "robust": rp.evaluate_scenarios(res.v, cfg, model, uset)}
        rep["optimizer"] = {"nominal": _nominal_summary(nom), "robust": _bundle_summary(res)}
        rep["processes"] = {k: ev.summary() for k, ev in evs.items()}
        _cross(rep, evs)
        rp.write_control(os.path.join(out, "nominal.csv"), nom.v, grid)
        rp.write_control(os.path.join(out, "robust.csv"), res.v, grid)
        rp.write_trace(os.path.join(out, "trace_nominal.csv"), nom.trace)
        rp.write_trace(os.path.join(out, "trace_robust.csv"), res.trace)
        rp.write_scenarios(os.path.join(out, "scenarios_nominal.csv"), evs["nominal"])
        rp.write_scenarios(os.path.join(out, "scenarios_robust.csv"), evs["robust"])
        _write_state(out, model, res.v, _scenario(uset, evs["robust"].worst))
        _write_state(out, model, nom.v, _scenario(uset, evs["nominal"].worst), suffix="_nominal")

    elif cmd in ("worst-case", "evaluate"):
        v = _control(args, cfg, grid, required=True)
        if not aset.contains(v, tol=1e-8):
            log.warning("control is not admissible; evaluating it as given")
        uset = cfg.uncertainty_set()
        ev = rp.evaluate_scenarios(v, cfg, model, uset)
        block = ev.summary()
        if cmd == "worst-case":
            block = {"control": block["control"], "nominal": block["nominal"], "worst": block["worst"]}
        else:
            rp.write_scenarios(os.path.join(out, "scenarios.csv"), ev)
        rep["processes"] = {"input": block}
        _write_state(out, model, v, _scenario(uset, ev.worst))

    elif cmd == "sweep":
        sw = rp.sweep_uncertainty(cfg, args.sizes, model)
        rep["sweep"] = {"rows": [asdict(r) for r in sw.rows], "nominal_control": sw.nominal_control,
                        "robust_controls": {fmt_key(k): v for k, v in sw.robust_controls.items()}}
        rp.write_sweep(os.path.join(out, "sweep.csv"), sw)

    elif cmd == "calibrate":
        a = cfg.admissible
        report = calibrate(budget=a.V_tot, T=cfg.grid.T, n_t=cfg.grid.N_t,
                           size=cfg.uncertainty.u_u - 1.0, spec=cfg.objective,
                           nominal_cfg=cfg.nominal, bundle_cfg=cfg.bundle)
        rep["calibration"] = report.to_dict()
        if report.chosen is None:
            rp.write_json(os.path.join(out, "report.json"), rep)
            print("no candidate satisfied the calibration checks", file=sys.stderr)
            return 1
        c = report.chosen
        with open(os.path.join(out, "calibration.toml"), "w", encoding="utf-8") as fh:
            fh.write(f"[kinetics]\nk_N = {c.k_N!r}\nB = {c.B!r}\nk_G = {c.k_G!r}\n")
        print(f"k_N = {c.k_N!r}, B = {c.B!r}, k_G = {c.k_G!r} (nominal mean {c.nominal_mean:.4f} nm)")

    timings["total"] = time.perf_counter() - t0
    rp.write_json(os.path.join(out, "report.json"), rep)
    rp.write_json(os.path.join(out, "timings.json"), {"wall_clock_seconds": timings})
    return 0


def fmt_key(x: float) -> str:
    return format(x, "g")


def _scenario(uset, index):
    from .uncertainty import enumerate_scenarios

    return enumerate_scenarios(uset)[index]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command; choose one of " + ", ".join(COMMANDS))
        return run(args)
    except UsageError as exc:
        print(f"precipopt: usage error: {exc}", file=sys.stderr)
        return 2
    except (PrecipError, ConfigError, OSError, ValueError) as exc:
        print(f"precipopt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
