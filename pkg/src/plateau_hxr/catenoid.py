"""Rotational minimal catenoids in H^2 x R.

The catenoid with neck parameter d > 0 is generated by the profile

    lambda_d(rho) = int_{asinh d}^{rho} d / sqrt(sinh(x)^2 - d^2) dx,

rotated about the vertical axis; its neck circle has radius asinh d.  All
integrals here carry an inverse square-root singularity at x = asinh d.  The
primary route removes it with x = asinh(d cosh v), which gives smooth
integrands in v on [0, V] with V = acosh(sinh(rho)/d).  An independent route
in u = cosh x keeps the singularity and hands it to an algebraic-weight rule.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from .errors import DomainError, NumericalFailure
from .hyperbolic import disk_area
from .quadrature import QuadratureResult, cumulative, integrate

_EPSREL = 1e-13


def _check_d(d: float) -> float:
    d = float(d)
    if not (d > 0 and math.isfinite(d)):
        raise DomainError("neck parameter d must be a positive finite number")
    return d


def neck_radius(d: float) -> float:
    return math.asinh(_check_d(d))


def v_limit(d: float, rho: float) -> float:
    """V with sinh(rho) = d cosh(V), computed without cancellation near the neck."""
    d = _check_d(d)
    a = math.asinh(d)
    if rho < a:
        if a - rho <= 1e-15 * max(1.0, a):
            return 0.0
        raise DomainError(f"rho={rho} is inside the neck radius asinh(d)={a}")
    # y - 1 with y = sinh(rho)/d
    ym1 = 2.0 * math.cosh(0.5 * (rho + a)) * math.sinh(0.5 * (rho - a)) / d
    return math.log1p(ym1 + math.sqrt(ym1 * (ym1 + 2.0)))


def _lam_integrand(d):
    return lambda v: d / np.sqrt(1.0 + (d * np.cosh(v)) ** 2)


def _area_integrand(d):
    def f(v):
        c = d * np.cosh(v)
        return c * c / np.sqrt(1.0 + c * c)
    return f


def lam(d: float, rho: float) -> QuadratureResult:
    """Profile height lambda_d(rho)."""
    V = v_limit(d, rho)
    return integrate(_lam_integrand(d), 0.0, V, epsabs=1e-15, epsrel=_EPSREL)


# ``lambda`` is reserved; keep a readable alias for callers
profile = lam


def lam_grid(d: float, rhos) -> np.ndarray:
    """lambda_d on a sorted grid of radii (fast, for scans and plots)."""
    d = _check_d(d)
    rhos = np.asarray(rhos, float)
    order = np.argsort(rhos)
    V = np.array([v_limit(d, r) for r in rhos[order]])
    knots = np.concatenate([[0.0], V])
    gaps = np.diff(knots)
    per = max(2, int(np.ceil(np.max(gaps) / 0.25))) if gaps.size else 2
    per = min(per, 64)
    vals = cumulative(_lam_integrand(d), knots, panels_per_gap=per)[1:]
    out = np.empty_like(vals)
    out[order] = vals
    return out


def area_integral(d: float, rho: float) -> QuadratureResult:
    """I(d, rho) = int sinh^2 x / sqrt(sinh^2 x - d^2) dx over [asinh d, rho]."""
    V = v_limit(d, rho)
    return integrate(_area_integrand(d), 0.0, V, epsabs=1e-15, epsrel=_EPSREL)


def slice_area(d: float, rho: float) -> QuadratureResult:
    """Area 4*pi*I of the compact slice of the catenoid out to radius rho."""
    r = area_integral(d, rho)
    return QuadratureResult(4.0 * math.pi * r.value, 4.0 * math.pi * r.err_est, r.evaluations)


def truncation_radius(d: float) -> float:
    return max(50.0, math.asinh(_check_d(d)) + 40.0)


def height_limit(d: float) -> QuadratureResult:
    """Asymptotic half-height h(d) of the catenoid (always below pi/2)."""
    d = _check_d(d)
    X = truncation_radius(d)
    core = lam(d, X)
    # tail: d / sqrt(sinh^2 x - d^2) ~ d / sinh x for x > X
    lead = d * math.log(1.0 / math.tanh(0.5 * X))
    bound = 2.0 * d * math.exp(-X) / (1.0 - math.exp(-2.0 * X)) / math.sqrt(1.0 - (d / math.sinh(X)) ** 2)
    return QuadratureResult(core.value + lead, core.err_est + bound, core.evaluations)


def area_margin(d: float, rho: float) -> float:
    """2 * disk_area(rho) - slice_area(d, rho).

    Evaluated as 4*pi*(sqrt(1+d^2) - 1 - J) with a positive, rapidly decaying
    integrand J, which avoids subtracting two numbers of size e^rho.
    """
    d = _check_d(d)
    V = v_limit(d, rho)

    def g(v):
        c = d * np.cosh(v)
        return d * c * np.exp(-v) / np.sqrt(1.0 + c * c)

    J = integrate(g, 0.0, V, epsabs=1e-15, epsrel=_EPSREL).value
    return 4.0 * math.pi * (math.sqrt(1.0 + d * d) - 1.0 - J)


def area_margin_direct(d: float, rho: float) -> float:
    """Margin as the plain difference of the two areas (for cross-checks)."""
    return 2.0 * disk_area(rho) - slice_area(d, rho).value


def rho_hat(d: float) -> float:
    """Radius 1.5 ln d below which the compact slice is area minimising."""
    d = _check_d(d)
    if d <= 1.0:
        raise DomainError("rho_hat needs d > 1")
    return 1.5 * math.log(d)


def rho_star(d: float, tol: float = 1e-6) -> float:
    """Largest radius with non-negative margin, searched on [asinh d, 4 ln d]."""
    d = _check_d(d)
    if d <= 1.0:
        raise DomainError("rho_star needs d > 1")
    lo, hi = math.asinh(d), 4.0 * math.log(d)
    if hi <= lo or area_margin(d, hi) >= 0.0:
        return math.inf
    return optimize.brentq(lambda r: area_margin(d, r), lo, hi, xtol=tol * 1e-3, rtol=1e-14)


def h_hat(d: float) -> QuadratureResult:
    return lam(d, rho_hat(d))


# -- intersections of profiles ----------------------------------------------

def profile_gap(d1: float, d2: float, rho: float) -> float:
    return lam(d1, rho).value - lam(d2, rho).value


def intersection_rho(d1: float, d2: float, span: float = 100.0, xtol: float = 1e-12) -> float:
    """Radius past asinh(d2) where the profiles of d1 < d2 cross."""
    d1, d2 = _check_d(d1), _check_d(d2)
    if not d1 < d2:
        raise DomainError("intersection_rho needs d1 < d2")
    a = math.asinh(d2)
    f = lambda r: profile_gap(d1, d2, r)
    lo, r, step = a, a, 0.25
    while True:
        nxt = min(r + step, a + span)
        if f(nxt) < 0.0:
            break
        if nxt >= a + span:
            raise NumericalFailure(
                f"no sign change of lambda_{d1} - lambda_{d2} within [{a}, {a + span}]")
        lo = r = nxt
        step *= 1.5
    r = nxt
    return optimize.brentq(f, lo, r, xtol=xtol, rtol=4 * np.finfo(float).eps)


def sign_changes(d1: float, d2: float, n: int = 10_000, span: float | None = None) -> int:
    """Number of sign changes of lambda_{d1} - lambda_{d2} on a uniform grid."""
    a = math.asinh(d2)
    if span is None:
        span = max(20.0, 3.0 * intersection_rho(d1, d2) - 2.0 * a)
    grid = a + span * (np.arange(1, n + 1) / n)
    diff = lam_grid(d1, grid) - lam_grid(d2, grid)
    s = np.sign(diff)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class IotaResult:
    value: float
    upper: float            # limit from t > d
    lower: float            # limit from t < d
    gap: float
    flagged: bool
    deltas: tuple
    rho_plus: tuple         # crossing radii for t = d(1 + delta)
    rho_minus: tuple        # crossing radii for t = d(1 - delta)


def _extrapolate(deltas, values):
    """Linear-in-delta extrapolation to delta = 0 from the two smallest deltas."""
    (d1, v1), (d2, v2) = sorted(zip(deltas, values))[:2]
    return v1 - d1 * (v2 - v1) / (d2 - d1)


def iota(d: float, deltas=(1e-1, 1e-2, 1e-3, 1e-4), threshold: float = 1e-3) -> IotaResult:
    """Limit of crossing radii of neighbouring profiles, from both sides."""
    d = _check_d(d)
    deltas = tuple(float(x) for x in deltas)
    if any(x <= 0 or x >= 1 for x in deltas) or len(deltas) < 2:
        raise DomainError("deltas must be at least two values in (0, 1)")
    plus = tuple(intersection_rho(d, d * (1.0 + x)) for x in deltas)
    minus = tuple(intersection_rho(d * (1.0 - x), d) for x in deltas)
    up = _extrapolate(deltas, plus)
    low = _extrapolate(deltas, minus)
    gap = abs(up - low)
    return IotaResult(0.5 * (up + low), up, low, gap, gap > threshold, deltas, plus, minus)


def iota_derivative_root(d: float) -> float:
    """Independent estimate of iota: zero in rho of d/dd lambda_d(rho).

    Differentiating the v-form under the integral sign gives
    d lambda/dd = int_0^V (1 + d^2 cosh^2 v)^(-3/2) dv
                  - cosh V / (sinh V sqrt(1 + d^2 cosh^2 V)).
    """
    d = _check_d(d)

    def dlam(rho):
        V = v_limit(d, rho)
        body = integrate(lambda v: (1.0 + (d * np.cosh(v)) ** 2) ** -1.5, 0.0, V,
                         epsabs=1e-15, epsrel=_EPSREL).value
        return body - math.cosh(V) / (math.sinh(V) * math.sqrt(1.0 + (d * math.cosh(V)) ** 2))

    a = math.asinh(d)
    lo = a + 1e-6
    hi = lo + 0.5
    while dlam(hi) < 0.0:
        lo, hi = hi, hi + 0.5
        if hi > a + 100:
            raise NumericalFailure("derivative of the profile never turns positive")
    return optimize.brentq(dlam, lo, hi, xtol=1e-12)


@dataclass(frozen=True)
class I1Report:
    d: float
    value: float
    bound: float
    holds: bool
    bound_over_sqrt_2d: float


def i1_bound_check(d: float) -> I1Report:
    """Compare I over [asinh d, asinh(d+1)] with its closed-form upper bound."""
    d = _check_d(d)
    val = area_integral(d, math.asinh(d + 1.0)).value
    bound = (d + 1.0) * math.log((math.sqrt(1.0 + (d + 1.0) ** 2) + math.sqrt(2.0 * d + 1.0))
                                 / math.sqrt(1.0 + d * d))
    return I1Report(d, val, bound, val < bound, bound / math.sqrt(2.0 * d))


# -- independent route: u = cosh x with algebraic endpoint weight -----------

def _qaws(f, lo, hi, u0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
        val, err = sp_integrate.quad(f, lo, hi, weight="alg", wvar=(-0.5, 0.0),
                                     epsabs=1e-15, epsrel=1e-13, limit=400)
    return val, err


def _tail(f, lo, hi):
    # smooth part on [lo, hi] with u = e^w to tame the long range
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
        val, err = sp_integrate.quad(lambda w: f(math.exp(w)) * math.exp(w), math.log(lo), math.log(hi),
                                     epsabs=1e-15, epsrel=1e-13, limit=400)
    return val, err


def _u_route(weighted, plain, d, rho):
    u0 = math.sqrt(1.0 + d * d)
    U = math.cosh(rho)
    if U <= u0:
        return QuadratureResult(0.0, 0.0, 0)
    split = min(U, 2.0 * u0)
    v1, e1 = _qaws(weighted, u0, split, u0)
    v2, e2 = (0.0, 0.0) if split >= U else _tail(plain, split, U)
    return QuadratureResult(v1 + v2, e1 + e2, 0)


def lam_u_route(d: float, rho: float) -> QuadratureResult:
    d = _check_d(d)
    u0 = math.sqrt(1.0 + d * d)
    weighted = lambda u: d / (math.sqrt(u + u0) * math.sqrt(u * u - 1.0))
    plain = lambda u: d / (math.sqrt(u * u - u0 * u0) * math.sqrt(u * u - 1.0))
    return _u_route(weighted, plain, d, rho)


def area_integral_u_route(d: float, rho: float) -> QuadratureResult:
    d = _check_d(d)
    u0 = math.sqrt(1.0 + d * d)
    weighted = lambda u: math.sqrt(u * u - 1.0) / math.sqrt(u + u0)
    plain = lambda u: math.sqrt(u * u - 1.0) / math.sqrt(u * u - u0 * u0)
    return _u_route(weighted, plain, d, rho)


# -- tables ---------------------------------------------------------------

@dataclass(frozen=True)
class TableRow:
    d: float
    neck: float
    rho_hat: float
    h: float
    h_hat: float
    margin_at_rho_hat: float
    rho_star: float
    iota: float

    HEADER = ("d", "asinh_d", "rho_hat", "h", "h_hat", "margin_at_rho_hat", "rho_star", "iota")

    def as_tuple(self):
        return (self.d, self.neck, self.rho_hat, self.h, self.h_hat, self.margin_at_rho_hat,
                self.rho_star, self.iota)


def table_row(d: float, with_iota: bool = True) -> TableRow:
    """One table row; the rho_hat columns are NaN for d <= 1 where they are undefined."""
    d = _check_d(d)
    nan = math.nan
    if d > 1.0:
        rh = rho_hat(d)
        extra = (rh, h_hat(d).value, area_margin(d, rh), rho_star(d))
    else:
        extra = (nan, nan, nan, nan)
    return TableRow(d, math.asinh(d), extra[0], height_limit(d).value, extra[1], extra[2], extra[3],
                    iota(d).value if with_iota else nan)
