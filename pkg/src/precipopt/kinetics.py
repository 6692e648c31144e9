"""Nucleation and growth rate laws.

The concentration-dependent parts of the kinetics are pluggable: anything with a
``rates(c)`` method returning ``(N, dN/dc, G0, dG0/dc)`` can drive the solvers.
The default :class:`ClassicalKinetics` uses a classical-nucleation-theory burst
law and a softplus-smoothed linear growth law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol

from .errors import InvalidSize

# chosen by precipopt.calibration (scripts/calibrate_kinetics.py) with V_tot = 4
DEFAULT_K_N = 3.0
DEFAULT_B = 2.0
DEFAULT_K_G = 2.5


@dataclass(frozen=True)
class KineticsParams:
    """Physical constants plus the constants of the default rate laws.

    ``gamma1`` and ``gamma2`` couple total concentration and third moment to the
    liquid-phase concentration; ``gamma2`` defaults to ``rho * pi / (6 V)``.
    ``eps_s`` is the absolute softplus scale of the growth law (``None`` means
    ``1e-3 * c_sat``; ``0`` gives the exact ramp).
    """

    k_r: float = 1.0
    beta: float = -1.0
    x_n: float = 1.0
    rho: float = 1.0
    volume: float = 1.0
    k_N: float = DEFAULT_K_N
    B: float = DEFAULT_B
    k_G: float = DEFAULT_K_G
    c_sat: float = 1.0
    eps_s: float | None = None
    gamma1: float = 1.0
    gamma2: float | None = field(default=None)

    def __post_init__(self):
        checks = [
            (self.k_r > 0, "k_r must be positive"),
            (self.x_n > 0, "x_n must be positive"),
            (self.beta != 1.0, "beta must differ from 1"),
            (self.rho > 0, "rho must be positive"),
            (self.volume > 0, "volume must be positive"),
            (self.c_sat > 0, "c_sat must be positive"),
            (self.k_N >= 0, "k_N must be nonnegative"),
            (self.B >= 0, "B must be nonnegative"),
            (self.k_G >= 0, "k_G must be nonnegative"),
            (self.eps_s is None or self.eps_s >= 0, "eps_s must be nonnegative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        for name in ("k_r", "beta", "x_n", "rho", "volume", "k_N", "B", "k_G", "c_sat", "gamma1"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def g2(self) -> float:
        if self.gamma2 is not None:
            return self.gamma2
        return self.rho * math.pi / (6.0 * self.volume)

    @property
    def smoothing(self) -> float:
        return 1e-3 * self.c_sat if self.eps_s is None else self.eps_s

    def with_(self, **changes) -> "KineticsParams":
        return replace(self, **changes)


class KineticsModel(Protocol):
    """Concentration-dependent rate laws with derivatives."""

    def rates(self, c: float) -> tuple[float, float, float, float]:
        """Return ``(N(c), N'(c), G0(c), G0'(c))``."""
        ...


class ClassicalKinetics:
    """``N(c) = k_N exp(-B / ln^2(c / c_sat))`` and ``G0(c) = k_G softplus(c - c_sat)``."""

    def __init__(self, params: KineticsParams):
        self.params = params
        self.k_N = params.k_N
        self.B = params.B
        self.k_G = params.k_G
        self.c_sat = params.c_sat
        self.eps = params.smoothing

    def nucleation_rate(self, c):
        if not c > self.c_sat:
            return 0.0, 0.0
        lnS = math.log(c / self.c_sat)
        expo = self.B / (lnS * lnS)
        if expo > 700.0:
            return 0.0, 0.0
        rate = self.k_N * math.exp(-expo)
        return rate, rate * 2.0 * expo / (lnS * c)

    def growth_rate_g0(self, c):
        x = c - self.c_sat
        if self.eps == 0.0:
            return (self.k_G * x, self.k_G) if x > 0 else (0.0, 0.0)
        z = x / self.eps
        if z > 35.0:
            return self.k_G * (x + self.eps * math.log1p(math.exp(-z))), self.k_G / (1.0 + math.exp(-z))
        if z < -700.0:
            return 0.0, 0.0
        ez = math.exp(z)
        return self.k_G * self.eps * math.log1p(ez), self.k_G * ez / (1.0 + ez)

    def rates(self, c):
        nr, dnr = self.nucleation_rate(c)
        gr, dgr = self.growth_rate_g0(c)
        return nr, dnr, gr, dgr


def size_factor_g1(x, beta):
    """Size-dependent growth factor ``x**beta``."""
    if not x > 0:
        raise InvalidSize(f"size must be positive, got {x}")
    return x ** beta


def default_kinetics(params: KineticsParams | None = None) -> ClassicalKinetics:
    return ClassicalKinetics(params or KineticsParams())
