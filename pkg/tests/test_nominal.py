import numpy as np
import pytest

from precipopt.emom import ForwardModel
from precipopt.errors import BadInitialControl
from precipopt.grid import AdmissibleSet, make_uniform_grid
from precipopt.kinetics import KineticsParams
from precipopt.nominal import NominalConfig, optimize_nominal, stationarity

from conftest import ZeroNucleation


def quadratic(a):
    a = np.asarray(a, dtype=float)
    return lambda v: (float(np.sum((v - a) ** 2)), 2.0 * (v - a))


@pytest.mark.parametrize("rule", ["bb", "growth"])
def test_quadratic_converges_to_projection(rule):
    s = AdmissibleSet(0.0, 1.0, np.array([1.0, 1.0]), 1.0)
    res = optimize_nominal(quadratic([0.5, 0.9]), s, NominalConfig(step_rule=rule))
    assert res.converged
    assert np.allclose(res.v, [0.3, 0.7], atol=1e-7)


def test_stationary_start_takes_no_steps():
    s = AdmissibleSet(0.0, 1.0, np.array([1.0, 1.0]), 1.0)
    res = optimize_nominal(quadratic([0.3, 0.7]), s, v0=[0.3, 0.7])
    assert res.iterations == 0
    assert res.status == "stationary"
    assert len(res.trace) == 1


def test_iterates_feasible_and_monotone(model, aset):
    res = optimize_nominal(model.value_and_grad, aset, NominalConfig(max_iter=300))
    obj = np.asarray(res.trace.column("objective"))
    acc = np.asarray(res.trace.column("accepted"), dtype=bool)
    vals = obj[acc]
    assert np.all(np.diff(vals) <= 0.0)
    assert aset.contains(res.v, tol=1e-10)


def test_flagged_at_cap(model, aset):
    res = optimize_nominal(model.value_and_grad, aset, NominalConfig(max_iter=5))
    assert res.status == "max_iter" and not res.converged
    assert res.iterations == 5


def test_calibrated_mean(model, aset):
    res = optimize_nominal(model.value_and_grad, aset)
    assert res.converged
    assert stationarity(res.v, model.value_and_grad(res.v)[1], aset) <= 1e-6
    mean = model.solve(res.v).moment_set().mean
    assert abs(mean - 4.0) <= 0.05 * 4.0


def test_deterministic(model, aset):
    a = optimize_nominal(model.value_and_grad, aset, NominalConfig(max_iter=200))
    b = optimize_nominal(model.value_and_grad, aset, NominalConfig(max_iter=200))
    assert np.array_equal(a.v, b.v) and a.value == b.value


def test_bad_initial_control():
    grid = make_uniform_grid(1.0, 4)
    m = ForwardModel(grid, KineticsParams(), kinetics=ZeroNucleation())
    s = AdmissibleSet.for_grid(grid, 0.0, 2.0, 1.0)
    with pytest.raises(BadInitialControl):
        optimize_nominal(m.value_and_grad, s)


@pytest.mark.parametrize("bad", [{"initial_step": 0.0}, {"backtrack": 1.0}, {"sufficient_decrease": 0.0},
                                 {"step_rule": "newton"}])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        NominalConfig(**bad)
