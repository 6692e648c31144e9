"""Time grid, control vectors and the admissible control set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InfeasibleSet, InvalidGrid


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Grid points ``t_0 = 0 < ... < t_N = T`` (minutes) and interval lengths."""

    points: np.ndarray
    deltas: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        dts = np.asarray(self.deltas, dtype=float)
        if pts.ndim != 1 or len(pts) < 3:
            raise InvalidGrid("grid needs at least two intervals")
        if pts[0] != 0.0:
            raise InvalidGrid("grid must start at t = 0")
        if len(dts) != len(pts) - 1 or np.any(dts <= 0):
            raise InvalidGrid("deltas must be positive, one per interval")
        if np.max(np.abs(np.diff(pts) - dts)) > 1e-12 * max(1.0, pts[-1]):
            raise InvalidGrid("deltas inconsistent with points")
        pts.setflags(write=False)
        dts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "deltas", dts)

    @classmethod
    def from_points(cls, points) -> "TimeGrid":
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.diff(pts))

    @property
    def n(self) -> int:
        """Number of control intervals ``N_t``."""
        return len(self.deltas)

    @property
    def T(self) -> float:
        return float(self.points[-1])

    def refine(self, factor: int) -> "TimeGrid":
        """Split every interval into ``factor`` equal pieces."""
        sub = [
            np.linspace(a, b, factor, endpoint=False)
            for a, b in zip(self.points[:-1], self.points[1:])
        ]
        return TimeGrid.from_points(np.concatenate(sub + [self.points[-1:]]))


def make_uniform_grid(T: float, n_t: int) -> TimeGrid:
    """Uniform grid with ``n_t`` intervals of length ``T / n_t``."""
    if not (np.isfinite(T) and T > 0):
        raise InvalidGrid(f"final time must be positive, got {T}")
    if int(n_t) != n_t or n_t < 2:
        raise InvalidGrid(f"need at least 2 control points, got {n_t}")
    n_t = int(n_t)
    pts = np.linspace(0.0, float(T), n_t + 1)
    return TimeGrid(pts, np.full(n_t, float(T) / n_t))


def as_control(values, grid: TimeGrid | None = None) -> np.ndarray:
    """Validate a control vector (finite, one entry per interval) and return a float copy."""
    v = np.array(values, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch("control must be one-dimensional")
    if grid is not None and len(v) != grid.n:
        raise DimensionMismatch(f"control has {len(v)} entries, grid has {grid.n} intervals")
    if not np.all(np.isfinite(v)):
        raise ValueError("control entries must be finite")
    return v


@dataclass(frozen=True, eq=False)
class AdmissibleSet:
    """Box ``[lower, upper]^N`` intersected with ``sum(deltas * v) = budget``.

    ``budget=None`` drops the equality and leaves a pure box.
    """

    lower: float
    upper: float
    deltas: np.ndarray
    budget: float | None = None

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "deltas", d)
        if not self.lower < self.upper:
            raise InfeasibleSet(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if np.any(d <= 0):
            raise InfeasibleSet("interval weights must be positive")
        if self.budget is not None:
            total = float(d.sum())
            lo, hi = self.lower * total, self.upper * total
            slack = 1e-12 * max(1.0, abs(lo), abs(hi))
            if not (lo - slack <= self.budget <= hi + slack):
                raise InfeasibleSet(
                    f"budget {self.budget} outside [{lo}, {hi}] reachable by the box"
                )

    @classmethod
    def for_grid(cls, grid: TimeGrid, lower, upper, budget=None) -> "AdmissibleSet":
        return cls(float(lower), float(upper), grid.deltas, None if budget is None else float(budget))

    @property
    def n(self) -> int:
        return len(self.deltas)

    def uniform(self) -> np.ndarray:
        """The constant admissible control (the default initial guess)."""
        if self.budget is None:
            return np.full(self.n, 0.5 * (self.lower + self.upper))
        return np.full(self.n, self.budget / float(self.deltas.sum()))

    def project(self, w) -> np.ndarray:
        return project_to_admissible(w, self)

    def contains(self, v, tol=1e-9) -> bool:
        return is_admissible(v, self, tol)


def project_to_admissible(w, aset: AdmissibleSet) -> np.ndarray:
    """Euclidean projection onto the admissible set.

    The minimizer is ``clip(w - mu * deltas, lower, upper)`` for the scalar
    multiplier ``mu`` that zeroes the budget residual. That residual is
    nonincreasing and piecewise linear with kinks where an entry leaves the
    upper bound or reaches the lower one; sweeping the sorted kinks while
    accumulating the intercept and slope locates the root segment, on which
    the root is solved in closed form.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (aset.n,):
        raise DimensionMismatch(f"expected {aset.n} entries, got {w.shape}")
    lo, hi, d = aset.lower, aset.upper, aset.deltas
    if aset.budget is None:
        return np.clip(w, lo, hi)
    budget = aset.budget
    scale = 1e-14 * max(1.0, abs(budget))
    if np.all(w >= lo) and np.all(w <= hi) and abs(float(d @ w) - budget) <= scale:
        return w.copy()

    n = len(w)
    kinks = np.concatenate(((w - hi) / d, (w - lo) / d))
    d_icpt = np.concatenate((d * (w - hi), d * (lo - w)))
    d_slope = np.concatenate((d * d, -d * d))
    order = np.argsort(kinks, kind="stable")
    kinks = kinks[order]
    # residual(mu) = icpt - slope * mu - budget on the segment after each kink
    icpt = float(d.sum()) * hi + np.cumsum(d_icpt[order])
    slope = np.cumsum(d_slope[order])
    res = icpt - slope * kinks - budget
    k = int(np.searchsorted(-res, 0.0, side="left"))
    if k == 0:
        mu = kinks[0]
    elif k >= 2 * n:
        mu = kinks[-1]
    else:
        sl = slope[k - 1]
        mu = kinks[k] if sl <= 0.0 else (icpt[k - 1] - budget) / sl
        mu = min(max(mu, kinks[k - 1]), kinks[k])
    v = np.clip(w - mu * d, lo, hi)
    # one Newton correction on the free entries removes rounding in mu
    free = (v > lo) & (v < hi)
    if np.any(free):
        err = float(d @ v) - budget
        v[free] -= err * d[free] / float(d[free] @ d[free])
        np.clip(v, lo, hi, out=v)
    return v


def is_admissible(v, aset: AdmissibleSet, tol: float = 1e-9) -> bool:
    v = np.asarray(v, dtype=float)
    if v.shape != (aset.n,):
        raise DimensionMismatch(f"expected {aset.n} entries, got {v.shape}")
    if np.any(v < aset.lower - tol) or np.any(v > aset.upper + tol):
        return False
    if aset.budget is not None and abs(float(aset.deltas @ v) - aset.budget) > tol:
        return False
    return True
