"""Proximal bundle method with downshifted cutting planes for min-max problems.

The objective ``hhat(v) = max_u h(v, u)`` is only available through an oracle
returning its value and one subgradient. Trial points minimize the cutting-plane
model plus a proximity term over the admissible set; serious steps move the
center, null steps enrich the model or tighten the proximity parameter.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelInconsistency
from .grid import AdmissibleSet
from .nominal import NominalConfig, OptTrace, optimize_nominal

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BundleConfig:
    gamma: float = 0.1
    gamma_tilde: float = 0.15
    Gamma: float = 0.2
    tau_init: float = 1.0
    tau_max: float = 1e100
    downshift: float = 1e-6
    eps_stop: float = 1e-3
    k_max: int = 50
    j_max: int = 100
    eps_sub: float = 1e-8
    max_planes: int = 100
    sub_max_iter: int = 20000

    def __post_init__(self):
        if not 0 < self.gamma < self.gamma_tilde < 1:
            raise ValueError("need 0 < gamma < gamma_tilde < 1")
        if not 0 < self.Gamma < 1:
            raise ValueError("need 0 < Gamma < 1")
        if not self.tau_init > 0:
            raise ValueError("tau_init must be positive")
        if self.tau_max < self.tau_init:
            raise ValueError("tau_max must be at least tau_init")
        if self.max_planes < 3:
            raise ValueError("need room for at least three planes")

    @property
    def tau_min(self) -> float:
        return self.tau_init * 1e-6


@dataclass(eq=False)
class CuttingPlane:
    """Linearization ``value + grad . (v - anchor)``; ``shift`` is the current downshift."""

    anchor: np.ndarray
    value: float
    grad: np.ndarray
    kind: str = "null"
    shift: float = 0.0

    def offset(self) -> float:
        """``a_i`` in the effective form ``a_i + grad . v``."""
        return self.value - float(self.grad @ self.anchor) - self.shift

    def at(self, v) -> float:
        return self.offset() + float(self.grad @ v)


def downshift(plane: CuttingPlane, center, h_center: float, c: float) -> float:
    """Shift that keeps the plane below ``h_center`` at the center, plus ``c |anchor - center|^2``."""
    raw = plane.value + float(plane.grad @ (center - plane.anchor))
    dist2 = float(np.sum((plane.anchor - center) ** 2))
    return max(0.0, raw - h_center) + c * dist2


@dataclass
class WorkingModel:
    planes: list
    center: np.ndarray

    def arrays(self):
        A = np.array([p.offset() for p in self.planes])
        G = np.array([p.grad for p in self.planes])
        return A, G

    def __call__(self, v) -> float:
        A, G = self.arrays()
        return float(np.max(A + G @ v))


def project_simplex(y) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-and-threshold)."""
    m = len(y)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, m + 1)
    pos = np.nonzero(u - css / ind > 0)[0]
    if len(pos) == 0:
        out = np.zeros(m)
        out[int(np.argmax(y))] = 1.0
        return out
    rho = pos[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


@dataclass
class SubproblemResult:
    v: np.ndarray
    model_value: float
    objective: float
    weights: np.ndarray
    gap: float
    iterations: int


def _prox_qp_interior(A, G, vj, tau, aset, tol, certify, max_iter=80):
    """Primal-dual interior-point solve of the epigraph form of the subproblem.

    Variables ``(v, r)``: minimize ``r + tau/2 |v - vj|^2`` subject to
    ``A + G v <= r``, the box and the budget. Mehrotra predictor-corrector on
    the dense reduced system. Once the complementarity gap is below ``tol``
    each iterate is scored by ``certify(v, weights)`` and the run stops as
    soon as that certified gap is within ``tol``.
    """
    m, n = G.shape
    lo, hi, d = aset.lower, aset.upper, aset.deltas
    # inequalities C x <= b for x = (v, r)
    C = np.zeros((m + 2 * n, n + 1))
    C[:m, :n] = G
    C[:m, n] = -1.0
    C[m:m + n, :n] = np.eye(n)
    C[m + n:, :n] = -np.eye(n)
    b = np.concatenate((-A, np.full(n, hi), np.full(n, -lo)))
    hdiag = np.concatenate((np.full(n, tau), [0.0]))
    f = np.concatenate((-tau * vj, [1.0]))
    E = None
    if aset.budget is not None:
        E = np.concatenate((d, [0.0]))[None, :]
        e = np.array([aset.budget])
    v0 = aset.project(vj)
    x = np.concatenate((v0, [float(np.max(A + G @ v0)) + 1.0]))
    s = np.maximum(b - C @ x, 1.0)
    z = np.ones_like(s)
    y = np.zeros(1 if E is not None else 0)
    ncon = len(s)

    def solve(D, rd, rp, rc):
        # eliminate ds, dz; solve for dx (and dy)
        K = C.T @ (D[:, None] * C)
        K[np.diag_indices(n + 1)] += hdiag
        rhs = -rd - C.T @ ((-rc + z * rp) / s)
        if E is not None:
            K = np.block([[K, E.T], [E, np.zeros((1, 1))]])
            rhs = np.concatenate((rhs, -re))
        sol = np.linalg.solve(K, rhs)
        dx = sol[: n + 1]
        dy = sol[n + 1:]
        ds = -rp - C @ dx
        dz = (-rc - z * ds) / s
        return dx, dy, ds, dz

    def max_step(u, du):
        neg = du < 0
        return min(1.0, float(np.min(-u[neg] / du[neg]))) if np.any(neg) else 1.0

    for _ in range(max_iter):
        rd = hdiag * x + f + C.T @ z + (E.T @ y if E is not None else 0.0)
        rp = C @ x + s - b
        re = (E @ x - e) if E is not None else None
        mu = float(s @ z) / ncon
        if mu * ncon <= tol:
            if certify(x[:n], z[:m]) <= tol:
                break
            if mu * ncon <= 1e-6 * tol:
                # complementarity exhausted; further steps only lose accuracy
                break
        D = z / s
        try:
            dx, dy, ds, dz = solve(D, rd, rp, s * z)
            a_aff = min(max_step(s, ds), max_step(z, dz))
            mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz)) / ncon
            sigma = (mu_aff / mu) ** 3
            dx, dy, ds, dz = solve(D, rd, rp, s * z + ds * dz - sigma * mu)
        except np.linalg.LinAlgError:
            break
        alpha = 0.995 * min(max_step(s, ds), max_step(z, dz))
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz
    certify(x[:n], z[:m])


def _dual_fista(A, G, vj, tau, inner, lam, tol, max_iter, state):
    """Accelerated projected ascent on the plane-weight dual with restarts."""
    L = float(np.linalg.norm(G, 2)) ** 2 / tau
    if L <= 0.0:
        return lam, 0
    step = 1.0 / L
    y = lam.copy()
    t = 1.0
    dual = state["dual"]
    it = 0
    while state["primal"] - dual > tol and it < max_iter:
        it += 1
        vy, liny, _, _, py = inner(y)
        state.offer(vy, py)
        new = project_simplex(y + step * liny)
        vn, _, _, dnew, pn = inner(new)
        state.offer(vn, pn)
        if dnew < dual:
            # restart momentum from the last iterate
            t = 1.0
            y = lam.copy()
            continue
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = new + ((t - 1.0) / t_next) * (new - lam)
        lam, dual, t = new, dnew, t_next
    state["dual"], state["lam"] = dual, lam
    return lam, it


class _Best(dict):
    def offer(self, v, p):
        if p < self["primal"]:
            self["v"], self["primal"] = v, p


def solve_prox_subproblem(model: WorkingModel, tau: float, aset: AdmissibleSet,
                          tol: float = 1e-8, weights0=None, max_iter: int = 20000,
                          method: str = "interior") -> SubproblemResult:
    """Minimize ``model(v) + tau/2 |v - center|^2`` over ``aset``.

    The result is certified through the dual over plane weights ``lam`` in the
    simplex, whose inner minimizer is ``project(center - G^T lam / tau)``: the
    reported gap is the primal value at the returned point minus the dual
    value at the returned weights. ``method="interior"`` solves the epigraph
    QP by a primal-dual interior-point method and then refines on the dual if
    the certificate is not yet within ``tol``; ``method="dual"`` runs only the
    accelerated projected ascent from ``weights0``.
    """
    if not model.planes:
        raise ValueError("working model has no planes")
    if not tau > 0:
        raise ValueError("proximity parameter must be positive")
    if method not in ("interior", "dual"):
        raise ValueError(f"unknown subproblem method {method!r}")
    A, G = model.arrays()
    vj = model.center
    m = len(A)

    def inner(lam):
        v = aset.project(vj - (G.T @ lam) / tau)
        lin = A + G @ v
        prox = 0.5 * tau * float(np.sum((v - vj) ** 2))
        return v, lin, prox, float(lam @ lin) + prox, float(np.max(lin)) + prox

    def primal(v):
        return float(np.max(A + G @ v)) + 0.5 * tau * float(np.sum((v - vj) ** 2))

    if weights0 is None or len(weights0) != m:
        lam = np.full(m, 1.0 / m)
    else:
        lam = project_simplex(np.asarray(weights0, dtype=float))
    v, _, _, dual, p = inner(lam)
    best = _Best(v=v, primal=p, dual=dual, lam=lam)

    def certify(v_raw, z):
        if np.all(np.isfinite(v_raw)):
            vc = aset.project(v_raw)
            best.offer(vc, primal(vc))
        if np.all(np.isfinite(z)):
            lz = project_simplex(z)
            dz = inner(lz)[3]
            if dz > best["dual"]:
                best["dual"], best["lam"] = dz, lz
        return best["primal"] - best["dual"]

    if method == "interior":
        _prox_qp_interior(A, G, vj, tau, aset, tol, certify)
    lam, it = _dual_fista(A, G, vj, tau, inner, best["lam"], tol, max_iter if method == "dual" else 200, best)
    v = best["v"]
    return SubproblemResult(v, model(v), best["primal"], lam, max(0.0, best["primal"] - best["dual"]), it)


def acceptance_test(h_center: float, h_trial: float, model_value: float, gamma: float,
                    eps_stop: float = 0.0, slack: float = 1e-10):
    """Classify a trial point as ``"serious"``, ``"null"`` or ``"stationary"``.

    Returns ``(decision, rho)`` with ``rho = actual / predicted`` decrease.
    """
    predicted = h_center - model_value
    if predicted < -slack * (1.0 + abs(h_center)):
        raise ModelInconsistency(f"model predicts an increase of {-predicted:.3g}")
    if predicted <= eps_stop * (1.0 + abs(h_center)):
        return "stationary", math.nan
    rho = (h_center - h_trial) / predicted
    return ("serious" if rho >= gamma else "null"), rho


@dataclass
class OracleAnswer:
    value: float
    subgradient: np.ndarray
    tag: object = None


@dataclass
class BundleResult:
    v: np.ndarray
    value: float
    status: str
    serious_steps: int
    inner_iterations: int
    trace: OptTrace
    tag: object = None
    planes: int = 0
    history: list = field(default_factory=list)


def proximal_bundle(oracle, aset: AdmissibleSet, v0, cfg: BundleConfig | None = None) -> BundleResult:
    """Minimize ``hhat`` over ``aset`` starting from ``v0``.

    ``oracle(v)`` returns an :class:`OracleAnswer` (or a ``(value, subgradient,
    tag)`` tuple). The run is deterministic for a deterministic oracle.
    """
    cfg = cfg or BundleConfig()

    def ask(v):
        ans = oracle(v)
        if not isinstance(ans, OracleAnswer):
            ans = OracleAnswer(*ans)
        return ans

    v = aset.project(np.asarray(v0, dtype=float))
    center = ask(v)
    h = center.value
    planes = [CuttingPlane(v.copy(), h, np.asarray(center.subgradient, dtype=float), "center")]
    tau = cfg.tau_init
    trace = OptTrace()
    history = [h]
    inner_total = 0
    serious_steps = 0
    weights = None
    status = "outer_cap"

    def reanchor():
        for pl in planes:
            pl.shift = downshift(pl, v, h, cfg.downshift)

    reanchor()
    for j in range(1, cfg.j_max + 1):
        moved = False
        for k in range(1, cfg.k_max + 1):
            wm = WorkingModel(planes, v)
            sub = solve_prox_subproblem(wm, tau, aset, cfg.eps_sub, weights, cfg.sub_max_iter)
            weights = sub.weights
            predicted = h - sub.model_value
            slack = max(10.0 * sub.gap, 1e-10 * (1.0 + abs(h)))
            if predicted < -slack:
                raise ModelInconsistency(f"model predicts an increase of {-predicted:.3g} at j={j}, k={k}")
            # aggregate subgradient tau (v_j - v) lies in the model's subdifferential plus normal cone
            agg = tau * float(np.linalg.norm(v - sub.v))
            thresh = cfg.eps_stop * (1.0 + abs(h))
            if predicted <= thresh and agg <= thresh:
                status = "stationary"
                trace.add(outer=j, inner=k, h_center=h, trial_value=math.nan, rho=math.nan, tau=tau,
                          planes=len(planes), serious=False, scenario=center.tag)
                return BundleResult(v, h, status, serious_steps, inner_total, trace, center.tag,
                                    len(planes), history)
            trial = ask(sub.v)
            inner_total += 1
            decision, rho = acceptance_test(h, trial.value, sub.model_value, cfg.gamma, 0.0, slack=math.inf)
            if decision == "serious":
                if rho >= cfg.Gamma:
                    tau = max(0.5 * tau, cfg.tau_min)
                trace.add(outer=j, inner=k, h_center=h, trial_value=trial.value, rho=rho, tau=tau,
                          planes=len(planes), serious=True, scenario=trial.tag)
                for pl in planes:
                    if pl.kind == "center":
                        pl.kind = "null"
                v, h, center = sub.v.copy(), trial.value, trial
                planes.append(CuttingPlane(v.copy(), h, np.asarray(trial.subgradient, dtype=float), "center"))
                _trim(planes, weights, cfg.max_planes, v, h, cfg.downshift)
                weights = None
                reanchor()
                history.append(h)
                serious_steps += 1
                moved = True
                break
            plane = CuttingPlane(sub.v.copy(), trial.value, np.asarray(trial.subgradient, dtype=float))
            plane.shift = downshift(plane, v, h, cfg.downshift)
            rho_tilde = (h - plane.at(sub.v)) / predicted
            if rho_tilde >= cfg.gamma_tilde:
                tau = min(2.0 * tau, cfg.tau_max)
            trace.add(outer=j, inner=k, h_center=h, trial_value=trial.value, rho=rho, tau=tau,
                      planes=len(planes) + 1, serious=False, scenario=trial.tag)
            planes.append(plane)
            if _trim(planes, weights, cfg.max_planes, v, h, cfg.downshift):
                weights = None
            else:
                weights = np.append(weights, 0.0)
        if not moved:
            status = "inner_cap"
            break
    log.info("bundle: %s, %d serious steps, %d oracle calls, hhat=%.6g", status, serious_steps, inner_total, h)
    return BundleResult(v, h, status, serious_steps, inner_total, trace, center.tag, len(planes), history)


def _trim(planes, weights, cap, center, h, c_ds) -> bool:
    """Evict the oldest null planes beyond ``cap``, keeping one aggregate of the last model.

    ``weights`` are the subproblem weights of ``planes[:-1]``. Returns whether
    anything was removed.
    """
    if len(planes) <= cap:
        return False
    base = planes[:-1]
    agg = None
    if weights is not None and len(weights) == len(base):
        A = np.array([p.offset() for p in base])
        G = np.array([p.grad for p in base])
        g_agg = weights @ G
        agg = CuttingPlane(center.copy(), float(weights @ A) + float(g_agg @ center), g_agg, "aggregate")
    planes[:] = [pl for pl in planes if pl.kind != "aggregate"]
    room = cap - (1 if agg is not None else 0)
    while len(planes) > room:
        victim = next((i for i, pl in enumerate(planes) if pl.kind == "null"), None)
        if victim is None:
            break
        del planes[victim]
    if agg is not None:
        agg.shift = downshift(agg, center, h, c_ds)
        planes.insert(0, agg)
    return True


def optimize_robust(model, aset: AdmissibleSet, uset, cfg: BundleConfig | None = None,
                    nominal_cfg: NominalConfig | None = None, v0=None, workers=None):
    """Warm-start from the nominal optimum, then run the bundle method on the worst case.

    Returns ``(bundle_result, nominal_result)``.
    """
    from .uncertainty import enumerate_scenarios, worst_case

    nom = optimize_nominal(model.value_and_grad, aset, nominal_cfg, v0)
    scenarios = enumerate_scenarios(uset)

    def oracle(v):
        wc = worst_case(v, uset, model, workers=workers, scenarios=scenarios)
        return OracleAnswer(wc.value, wc.subgradient, wc.index)

    res = proximal_bundle(oracle, aset, nom.v, cfg)
    return res, nom
