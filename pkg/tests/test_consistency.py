import numpy as np
import pytest
from scipy import special

from supercoherence import (FrequencyDistribution, Phase, analytic_all_to_all, critical_sigma,
                            fit_critical_exponent, solve_selfconsistent, table1_closed_forms)
from supercoherence.consistency import (critical_sigma_limit, erfi_inv, integrals, uniform_closed_form)
from supercoherence.errors import InsufficientData, ValidationError


def _faddeeva_g(sigma, delta, r):
    # independent oracle: Gaussian Stieltjes transform via the Faddeeva function
    w = -delta + 1j * r
    g = 1j * np.sqrt(np.pi / 2) / sigma * special.wofz(w / (sigma * np.sqrt(2)))
    return g.imag, g.real


@pytest.mark.parametrize("delta,r", [(0.0, 0.5), (0.3, 0.1), (-1.2, 0.02), (2.0, 1.5)])
def test_gaussian_integrals_match_faddeeva(delta, r):
    first, second = integrals(FrequencyDistribution("gaussian", 0.8), delta, r)
    im, re = _faddeeva_g(0.8, delta, r)
    assert first == pytest.approx(im, rel=1e-9)
    assert second == pytest.approx(re, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("delta,r", [(0.0, 0.5), (0.4, 0.05), (-2.0, 0.3)])
def test_uniform_integrals_closed_form(delta, r):
    # log form of the uniform Stieltjes transform
    a = np.sqrt(3) * 0.6
    w = -delta + 1j * r
    g = np.log((a - w) / (-a - w)) / (2 * a)
    first, second = integrals(FrequencyDistribution("uniform", 0.6), delta, r)
    assert first == pytest.approx(g.imag, rel=1e-9)
    assert second == pytest.approx(g.real, rel=1e-9, abs=1e-12)


def test_lorentzian_example():
    sol = solve_selfconsistent(FrequencyDistribution("lorentz", 0.4))
    assert sol.phase is Phase.SUPERCOHERENT
    assert sol.r == pytest.approx(0.6, abs=1e-8)
    assert abs(sol.delta) < 1e-8
    assert max(abs(v) for v in sol.residual) < 1e-8


def test_lorentzian_decoherent():
    sol = solve_selfconsistent(FrequencyDistribution("lorentz", 1.2))
    assert sol.phase is Phase.DECOHERENT and sol.r == 0.0


def test_uniform_example():
    sol = solve_selfconsistent(FrequencyDistribution("uniform", 0.5))
    assert sol.eta_bar == pytest.approx(0.5425, abs=1e-4)
    assert abs(sol.delta) < 1e-8


@pytest.mark.parametrize("theta0", [0.4, np.pi / 3, 2.0])
@pytest.mark.parametrize("sigma", [0.2, 0.6])
def test_uniform_off_equator_matches_closed_form(theta0, sigma):
    sol = solve_selfconsistent(FrequencyDistribution("uniform", sigma), theta0, 0.9)
    r, d = uniform_closed_form(sigma, theta0, 0.9)
    assert sol.r == pytest.approx(r, abs=1e-7)
    assert sol.delta == pytest.approx(d, abs=1e-7)


def test_uniform_closed_form_reduces_on_equator():
    for s in (0.1, 0.5, 0.85):
        r, d = uniform_closed_form(s)
        assert r**2 == pytest.approx(3 * s * s / np.tan(np.sqrt(3) * s) ** 2, rel=1e-12)
        assert abs(d) < 1e-15


def test_validation():
    with pytest.raises(ValidationError):
        solve_selfconsistent(FrequencyDistribution("uniform", 0.5), 0.0)
    with pytest.raises(ValidationError):
        solve_selfconsistent(FrequencyDistribution("uniform", 0.5), 1.0, 0.0)


def test_critical_uniform_equator():
    assert critical_sigma("uniform") == pytest.approx(np.pi / (2 * np.sqrt(3)), abs=2e-6)


def test_critical_lorentz_off_equator():
    assert critical_sigma("lorentzian", np.pi / 3, 0.8) == pytest.approx(0.8 * np.sin(np.pi / 3), abs=2e-6)


def test_critical_uniform_quarter():
    assert critical_sigma("uniform", np.pi / 4, 1.0) == pytest.approx(1.2826, abs=1e-4)


def test_gaussian_critical_equator():
    assert critical_sigma("gaussian") == pytest.approx(np.sqrt(np.pi / 2), abs=2e-6)


def test_gaussian_critical_off_equator_uses_decaying_exponential():
    # the r -> 0 limit gives sqrt(pi/2) (r0/sin) exp(-q^2), q = erfi^-1(cot theta0)
    theta0 = np.pi / 3
    q = erfi_inv(1 / np.tan(theta0))
    expected = np.sqrt(np.pi / 2) / np.sin(theta0) * np.exp(-q * q)
    assert critical_sigma("gaussian", theta0) == pytest.approx(expected, abs=5e-6)
    assert table1_closed_forms("gaussian", 0.1, theta0)[0] == pytest.approx(expected, rel=1e-12)


def test_limit_matches_closed_forms():
    for theta0 in (0.3, 1.0, np.pi / 2, 2.5):
        for r0 in (0.5, 1.0):
            assert critical_sigma_limit("uniform", theta0, r0) == pytest.approx(
                np.pi * r0 / (2 * np.sqrt(3) * np.sin(theta0)), rel=1e-10)
            assert critical_sigma_limit("lorentz", theta0, r0) == pytest.approx(r0 * np.sin(theta0), rel=1e-10)


@pytest.mark.parametrize("y", [-30.0, -1.0, 0.0, 0.3, 2.0, 500.0])
def test_erfi_inverse(y):
    assert special.erfi(erfi_inv(y)) == pytest.approx(y, rel=1e-12, abs=1e-15)


def test_table1_values():
    assert table1_closed_forms("lorentz", 0.4)[1] == pytest.approx(0.36)
    assert table1_closed_forms("gaussian", 0.1)[0] == pytest.approx(1.2533141373155, rel=1e-12)
    assert table1_closed_forms("uniform", 1e-6)[1] == pytest.approx(1.0, abs=1e-9)
    assert table1_closed_forms("uniform", 1.0)[1] == 0.0


def test_analytic_all_to_all():
    assert analytic_all_to_all(0.0) == (1.0, 1.0)
    g, c = analytic_all_to_all(0.1)
    assert g == pytest.approx(0.8368, abs=1e-3) and c == pytest.approx(0.9802, abs=1e-3)
    x = np.sqrt(3) * 0.37
    assert analytic_all_to_all(0.37)[0] == pytest.approx(x * (1 / np.tanh(x) - 1), rel=1e-12)


def test_exponent_fit():
    s = np.linspace(0.8, 0.99, 12)
    assert fit_critical_exponent(np.column_stack([s, (1 - s) ** 2]), 1.0) == pytest.approx(2.0, abs=1e-3)
    with pytest.raises(InsufficientData):
        fit_critical_exponent(np.column_stack([s, np.full_like(s, 0.3)]), 1.0)
    with pytest.raises(InsufficientData):
        fit_critical_exponent([(0.9, 0.01), (0.95, 0.002)], 1.0)


def test_gaussian_low_sigma_matches_weak_disorder():
    sol = solve_selfconsistent(FrequencyDistribution("gaussian", 1e-3))
    assert sol.r == pytest.approx(1.0, abs=1e-5)


def test_boundary_continuity():
    for fam, sc in (("uniform", np.pi / (2 * np.sqrt(3))), ("lorentz", 1.0), ("gaussian", np.sqrt(np.pi / 2))):
        sol = solve_selfconsistent(FrequencyDistribution(fam, 0.995 * sc))
        assert 0 < sol.r < 0.1
