import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from plateau_hxr import catenoid as cat
from plateau_hxr.errors import DomainError
from plateau_hxr.quadrature import cumulative, integrate


def test_integrate_polynomials_and_exponentials():
    assert integrate(lambda x: x ** 7, 0.0, 2.0).value == pytest.approx(2 ** 8 / 8, rel=1e-13)
    assert integrate(np.exp, -1.0, 3.0).value == pytest.approx(math.e ** 3 - math.e ** -1, rel=1e-13)


def test_cumulative_matches_antiderivative():
    knots = np.linspace(0.0, 3.0, 7)
    assert np.allclose(cumulative(np.cos, knots), np.sin(knots), atol=1e-13)


def _lam_x_form(d, rho):
    # lambda in the original variable, with the inverse square root endpoint handled by scipy
    a = math.asinh(d)
    at_neck = d / math.sqrt(2.0 * d * math.sqrt(1.0 + d * d))

    def f(x):
        gap = math.sinh(x) ** 2 - d * d
        return d * math.sqrt(x - a) / math.sqrt(gap) if gap > 0 else at_neck
    val, _ = sp_integrate.quad(f, a, rho, weight="alg", wvar=(-0.5, 0.0), epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


@pytest.mark.parametrize("d,rho", [(0.5, 1.0), (1.0, 2.0), (10.0, 4.0), (100.0, 7.0)])
def test_profile_matches_x_form_oracle(d, rho):
    assert cat.lam(d, rho).value == pytest.approx(_lam_x_form(d, rho), abs=1e-10)


def test_profile_vanishes_at_neck():
    for d in (0.1, 1.0, 50.0):
        assert cat.lam(d, math.asinh(d)).value == 0.0


def test_inside_neck_rejected():
    with pytest.raises(DomainError):
        cat.lam(1.0, 0.5)
    with pytest.raises(DomainError):
        cat.lam(-1.0, 2.0)


def test_lam_grid_matches_pointwise():
    rhos = np.array([1.0, 1.5, 3.0, 6.0])
    assert np.allclose(cat.lam_grid(1.0, rhos), [cat.lam(1.0, r).value for r in rhos], atol=1e-11)


def test_height_limit_below_half_pi_and_increasing():
    hs = [cat.height_limit(d).value for d in (0.1, 1.0, 10.0, 100.0)]
    assert all(b > a for a, b in zip(hs, hs[1:]))
    assert all(h < math.pi / 2 for h in hs)


def test_area_margin_closed_form_vs_difference():
    for d, rho in [(2.0, 2.0), (10.0, 3.5), (100.0, 6.0)]:
        assert cat.area_margin(d, rho) == pytest.approx(cat.area_margin_direct(d, rho), rel=1e-8, abs=1e-8)


def test_rho_hat_domain():
    assert cat.rho_hat(math.e) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        cat.rho_hat(1.0)


def test_intersection_of_neighbouring_profiles():
    r = cat.intersection_rho(10.0, 11.0)
    assert cat.profile_gap(10.0, 11.0, r) == pytest.approx(0.0, abs=1e-9)
    assert cat.sign_changes(10.0, 11.0, 2000) == 1


def test_iota_two_routes_agree():
    res = cat.iota(10.0)
    assert not res.flagged
    assert res.value == pytest.approx(cat.iota_derivative_root(10.0), abs=1e-3)


def test_i1_bound():
    assert cat.i1_bound_check(50.0).holds


def test_table_row_nan_below_one():
    row = cat.table_row(1.0, with_iota=False)
    assert math.isnan(row.rho_hat) and row.h == pytest.approx(cat.height_limit(1.0).value)
