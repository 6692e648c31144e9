import math

import numpy as np
import pytest

from precipopt.errors import InvalidSize
from precipopt.kinetics import ClassicalKinetics, KineticsParams, size_factor_g1


def test_nucleation_examples():
    k = ClassicalKinetics(KineticsParams(k_N=1.0, B=1.0, c_sat=1.0))
    assert k.nucleation_rate(1.0) == (0.0, 0.0)
    assert k.nucleation_rate(0.0) == (0.0, 0.0)
    assert k.nucleation_rate(math.e)[0] == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_growth_examples():
    k = ClassicalKinetics(KineticsParams(k_G=1.0, eps_s=0.0))
    rate, slope = k.growth_rate_g0(1.5)
    assert rate == pytest.approx(0.5)
    assert slope == pytest.approx(1.0)
    smooth = ClassicalKinetics(KineticsParams(k_G=1.0))
    c = 0.9
    eps = smooth.eps
    assert 0.0 <= smooth.growth_rate_g0(c)[0] <= eps * math.exp((c - 1.0) / eps)


def test_rates_nonnegative_and_vanish_below_saturation():
    k = ClassicalKinetics(KineticsParams())
    for c in np.linspace(-1.0, 4.0, 201):
        n, _, g, _ = k.rates(c)
        assert n >= 0.0 and g >= 0.0
        if c <= 1.0:
            assert n == 0.0
            assert g <= k.k_G * k.eps * math.log(2.0) + 1e-15


@pytest.mark.parametrize("params", [KineticsParams(), KineticsParams(k_N=1.0, B=1.0, k_G=1.0)])
def test_derivatives_match_fd(params):
    k = ClassicalKinetics(params)
    pts = np.linspace(0.0, 3.0 * params.c_sat, 50)
    pts = pts[np.abs(pts - params.c_sat) > 0.5e-3]
    for c in pts:
        h = 1e-6 * max(1.0, abs(c))
        _, dn, _, dg = k.rates(c)
        n_p, _, g_p, _ = k.rates(c + h)
        n_m, _, g_m, _ = k.rates(c - h)
        fd_n = (n_p - n_m) / (2 * h)
        fd_g = (g_p - g_m) / (2 * h)
        assert dn == pytest.approx(fd_n, rel=1e-5, abs=1e-10)
        assert dg == pytest.approx(fd_g, rel=1e-5, abs=1e-10)


def test_size_factor():
    assert size_factor_g1(1.0, 0.7) == 1.0
    assert size_factor_g1(2.0, -1.0) == 0.5
    assert size_factor_g1(4.0, 0.5) == pytest.approx(2.0)
    for x in (0.0, -1.0):
        with pytest.raises(InvalidSize):
            size_factor_g1(x, -1.0)


def test_gamma2_default_and_override():
    p = KineticsParams(rho=2.0, volume=3.0)
    assert p.g2 == pytest.approx(2.0 * math.pi / 18.0)
    assert KineticsParams(gamma2=0.25).g2 == 0.25


@pytest.mark.parametrize("bad", [{"k_r": 0.0}, {"x_n": -1.0}, {"beta": 1.0}, {"eps_s": -1.0}, {"k_N": float("nan")}])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        KineticsParams(**bad)
