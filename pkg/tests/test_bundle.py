import numpy as np
import pytest
from scipy.optimize import linprog

from precipopt.bundle import (
    BundleConfig,
    CuttingPlane,
    OracleAnswer,
    WorkingModel,
    acceptance_test,
    downshift,
    optimize_robust,
    project_simplex,
    proximal_bundle,
    solve_prox_subproblem,
)
from precipopt.errors import ModelInconsistency
from precipopt.grid import AdmissibleSet
from precipopt.nominal import optimize_nominal
from precipopt.uncertainty import UncertaintySet

from oracles import grid_minimize

# stopping threshold matched to the 1e-4 accuracy checks below
VALIDATION = BundleConfig(eps_stop=1e-8)


def planes_model(A, G, center):
    center = np.asarray(center, dtype=float)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    pl = [CuttingPlane(np.zeros(G.shape[1]), float(a), g.copy()) for a, g in zip(A, G)]
    return WorkingModel(pl, center)


def test_single_flat_plane_returns_center():
    s = AdmissibleSet(-1.0, 1.0, np.ones(3))
    c = np.array([0.2, -0.4, 0.9])
    res = solve_prox_subproblem(planes_model([0.0], [np.zeros(3)], c), 1.0, s)
    assert np.allclose(res.v, c, atol=1e-8)


@pytest.mark.parametrize("method", ["interior", "dual"])
def test_abs_value_prox(method):
    s = AdmissibleSet(-5.0, 5.0, np.ones(1))
    wm = planes_model([-1.0, 1.0], [[1.0], [-1.0]], [0.0])
    res = solve_prox_subproblem(wm, 1.0, s, method=method)
    assert res.objective == pytest.approx(0.5, abs=1e-8)
    assert res.gap <= 1e-8
    # strong convexity: tau/2 |v - 1|^2 <= objective gap
    assert abs(res.v[0] - 1.0) <= np.sqrt(2.0 * 1e-8)
    tight = solve_prox_subproblem(wm, 1.0, s, tol=1e-13, method=method)
    assert tight.v[0] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("budget", [False, True])
def test_subproblem_matches_grid_oracle(dim, budget):
    rng = np.random.default_rng(10 * dim + budget)
    for _ in range(6):
        m = int(rng.integers(1, 7))
        A = rng.normal(size=m)
        G = rng.normal(size=(m, dim))
        c = rng.uniform(-1, 1, dim)
        tau = float(10.0 ** rng.uniform(-2, 1))
        if budget and dim == 2:
            s = AdmissibleSet(-1.0, 1.0, np.array([1.0, 1.0]), 0.3)
            # one free coordinate; the other is fixed by the budget
            def f(X):
                V = np.c_[X[:, 0], 0.3 - X[:, 0]]
                return np.max(A + V @ G.T, axis=1) + 0.5 * tau * np.sum((V - c) ** 2, axis=1)
            _, ref = grid_minimize(f, -0.7, 1.0, 1, 2001)
        elif budget:
            continue
        else:
            s = AdmissibleSet(-1.0, 1.0, np.ones(dim))
            def f(X):
                return np.max(A + X @ G.T, axis=1) + 0.5 * tau * np.sum((X - c) ** 2, axis=1)
            _, ref = grid_minimize(f, -1.0, 1.0, dim, 2001 if dim == 1 else 201)
        res = solve_prox_subproblem(planes_model(A, G, c), tau, s)
        assert abs(res.objective - ref) <= 1e-8 + 1e-10 * abs(ref)
        assert res.objective <= ref + 1e-8
        assert s.contains(res.v, tol=1e-10)


def test_prox_path_monotone():
    rng = np.random.default_rng(2)
    s = AdmissibleSet(-3.0, 3.0, np.ones(4), 1.0)
    A = rng.normal(size=5)
    G = rng.normal(size=(5, 4))
    c = s.project(rng.normal(size=4))
    dist = []
    for tau in (10.0, 1.0, 0.1, 0.01):
        v = solve_prox_subproblem(planes_model(A, G, c), tau, s).v
        dist.append(np.linalg.norm(v - c))
    assert all(b >= a - 1e-7 for a, b in zip(dist, dist[1:]))


def test_simplex_projection():
    rng = np.random.default_rng(3)
    for _ in range(100):
        y = rng.normal(size=int(rng.integers(1, 8))) * 3
        p = project_simplex(y)
        assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12
        for _ in range(5):
            z = project_simplex(rng.normal(size=len(y)))
            assert np.linalg.norm(p - y) <= np.linalg.norm(z - y) + 1e-12


def test_acceptance_examples():
    assert acceptance_test(1.0, 0.5, 0.0, 0.1) == ("serious", 0.5)
    d, rho = acceptance_test(1.0, 1.1, 0.0, 0.1)
    assert d == "null" and rho == pytest.approx(-0.1)
    assert acceptance_test(2.0, 1.5, 1.5, 0.9) == ("serious", 1.0)
    assert acceptance_test(1.0, 0.99, 0.9999, 0.1, eps_stop=1e-3)[0] == "stationary"
    with pytest.raises(ModelInconsistency):
        acceptance_test(1.0, 0.5, 1.5, 0.1)


def test_config_validation():
    for bad in ({"gamma": 0.2, "gamma_tilde": 0.15}, {"Gamma": 1.0}, {"tau_init": 0.0}, {"max_planes": 2}):
        with pytest.raises(ValueError):
            BundleConfig(**bad)


def test_downshift_keeps_planes_below_center():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = 3
        center = rng.normal(size=n)
        h = float(rng.normal())
        pl = CuttingPlane(rng.normal(size=n), float(rng.normal()) * 3, rng.normal(size=n))
        pl.shift = downshift(pl, center, h, 1e-6)
        assert pl.at(center) <= h + 1e-12
        assert pl.shift >= 0.0


def toy_oracle(v):
    us = np.array([0.9, 1.0, 1.1])
    vals = (us * v[0] - 1.0) ** 2
    i = int(np.argmax(vals))
    return OracleAnswer(float(vals[i]), np.array([2 * us[i] * (us[i] * v[0] - 1.0)]), i)


@pytest.mark.parametrize("v0", [0.0, 0.5, 1.5, 2.0])
def test_scalar_toy(v0):
    box = AdmissibleSet(0.0, 2.0, np.ones(1))
    # the default stopping threshold (1e-3) is coarser than the 1e-4 check
    res = proximal_bundle(toy_oracle, box, [v0], VALIDATION)
    assert res.status == "stationary"
    assert res.v[0] == pytest.approx(1.0, abs=1e-4)
    assert res.value == pytest.approx(0.01, abs=1e-6)
    assert all(b < a for a, b in zip(res.history, res.history[1:]))


def affine_oracle(A, G):
    def oracle(x):
        i = int(np.argmax(A + G @ x))
        return OracleAnswer(float(A[i] + G[i] @ x), G[i].copy(), i)
    return oracle


def lp_optimum(A, G, lo, hi):
    m, n = G.shape
    # variables (x, t): min t s.t. A + G x <= t
    res = linprog(np.r_[np.zeros(n), 1.0], A_ub=np.c_[G, -np.ones(m)], b_ub=-A,
                  bounds=[(lo, hi)] * n + [(None, None)], method="highs")
    return res.fun


@pytest.mark.parametrize("seed", [0, 1, 2, 79, 81, 188])
def test_affine_benchmark_grid(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=5)
    G = rng.normal(size=(5, 2))
    box = AdmissibleSet(-1.0, 1.0, np.ones(2))
    _, ref = grid_minimize(lambda X: np.max(A + X @ G.T, axis=1), -1.0, 1.0, 2, 201)
    res = proximal_bundle(affine_oracle(A, G), box, np.zeros(2), VALIDATION)
    assert abs(res.value - ref) <= 1e-4
    assert res.inner_iterations <= 200
    assert lp_optimum(A, G, -1.0, 1.0) == pytest.approx(ref, abs=1e-6)


def test_shallow_boundary_does_not_stop_early():
    """A long face with slope 0.0118: the small-decrease test alone would stop 1e-2 short."""
    rng = np.random.default_rng(79)
    A = rng.normal(size=5)
    G = rng.normal(size=(5, 2))
    res = proximal_bundle(affine_oracle(A, G), AdmissibleSet(-1.0, 1.0, np.ones(2)), np.zeros(2))
    assert res.value <= lp_optimum(A, G, -1.0, 1.0) + 1e-3


@pytest.mark.parametrize("dim", [5, 10])
def test_affine_benchmark_lp(dim):
    rng = np.random.default_rng(dim)
    A = rng.normal(size=5)
    G = rng.normal(size=(5, dim))
    box = AdmissibleSet(-1.0, 1.0, np.ones(dim))
    res = proximal_bundle(affine_oracle(A, G), box, np.zeros(dim), VALIDATION)
    assert abs(res.value - lp_optimum(A, G, -1.0, 1.0)) <= 1e-4
    assert res.inner_iterations <= 200


def test_nonconvex_descent_and_feasibility():
    """Max of shifted nonconvex quadratics: serious values decrease, trials stay feasible."""
    rng = np.random.default_rng(5)
    n = 6
    Q = [np.diag(rng.uniform(-0.5, 2.0, n)) for _ in range(4)]
    b = [rng.normal(size=n) for _ in range(4)]
    s = AdmissibleSet(-1.0, 1.0, np.ones(n), 0.5)
    seen = []

    def oracle(x):
        seen.append(x.copy())
        vals = [0.5 * x @ q @ x + bb @ x for q, bb in zip(Q, b)]
        i = int(np.argmax(vals))
        return OracleAnswer(float(vals[i]), Q[i] @ x + b[i], i)

    res = proximal_bundle(oracle, s, np.zeros(n), BundleConfig(max_planes=5))
    assert all(y < x for x, y in zip(res.history, res.history[1:]))
    assert all(s.contains(x, tol=1e-9) for x in seen)
    assert res.planes <= 5


def test_degenerate_set_matches_nominal(model, aset):
    uset = UncertaintySet.symmetric(0.0, aset.n)
    rob, nom = optimize_robust(model, aset, uset)
    ref = optimize_nominal(model.value_and_grad, aset)
    assert abs(rob.value - ref.value) <= 1e-6
    assert nom.value == ref.value
