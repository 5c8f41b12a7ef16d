"""The tilted measure: indicator laws, exact moments, shape functions.

Under the exponential tilt at theta the indicators stay independent; the
one at jump size c_i fires by time t <= u with probability

    (1 - e^{-c_i t}) / (e^{-(1+theta) c_i u} + 1 - e^{-c_i u}),

and everything in this module is a sum or integral of small polynomial
kernels of such probabilities.  The k-kernels give exact moments of the
tilted process at finite u; the shape functions I_E, I_V, J_V, G_V are
their u -> infinity continuum limits on the fractional-horizon scale
a = t/u, and the joint MGF of (S_t, S_u - S_t) closes the loop between
the two descriptions.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, TruncationError
from .model import TruncationPolicy, coeff, index_tail_sum
from .numerics import (
    QuadratureSpec,
    integrate_decaying,
    integrate_semiline,
    integrate_tail,
)

__all__ = [
    "TiltedIndicatorLaw",
    "ShapeTable",
    "indicator_law",
    "tilted_cdf",
    "tilted_mean_exact",
    "tilted_var_exact",
    "tilted_var_increment_exact",
    "tilted_cov_exact",
    "shape_ie",
    "shape_iv",
    "shape_jv",
    "shape_gv",
    "shape_iv_origin_coeff",
    "build_shape_table",
    "joint_mgf_tilted",
]

#: marching tail quadrature is replaced by the infinite-range transform
#: below this exponential rate (same rule as the rate module)
_MIN_MARCH_RATE = 0.25


def _den(y, theta):
    """e^-(1+theta)y + (1 - e^-y): positive parts, no cancellation."""
    return np.exp(-(1.0 + theta) * y) - np.expm1(-y)


def _exp_gap(y, a):
    """e^{-a y} - e^{-y} for a in [0,1], stable at both ends of y.

    Small y: the difference is (1-a) y + O(y^2) and must come out of expm1,
    not out of subtracting two values near one.  Large y: expm1 would
    overflow, but there the two exponentials are far apart and plain
    subtraction is exact enough.
    """
    arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    out = np.empty_like(arr)
    near = (1.0 - a) * arr < 1.0
    out[near] = np.exp(-arr[near]) * np.expm1((1.0 - a) * arr[near])
    far = ~near
    out[far] = np.exp(-a * arr[far]) - np.exp(-arr[far])
    return out if np.ndim(y) else float(out[0])


def tilted_p(y, a, theta):
    """Tilted probability that the indicator at size y fires by time a*u."""
    return -np.expm1(-a * y) / _den(y, theta)


def tilted_q(y, a, theta):
    """Tilted probability of firing inside (a*u, u]."""
    return _exp_gap(y, a) / _den(y, theta)


# --- kernels ------------------------------------------------------------
#
# k1 drives the mean, k3 the variance at t, k4 the increment variance,
# k5 the (negated) covariance.  Every one is O(y^3) at the origin, which
# is what makes the index sums converge with the same certificate
# machinery as the log-MGF.  The complementary probabilities are computed
# from their own positive closed forms, never as 1 - p.


def kernel_k1(y, a, theta):
    return y * (tilted_p(y, a, theta) - a * y)


def kernel_k3(y, a, theta):
    d = _den(y, theta)
    fired = -np.expm1(-a * y) / d
    unfired = (_exp_gap(y, a) + np.exp(-(1.0 + theta) * y)) / d
    return y * y * fired * unfired


def kernel_k4(y, a, theta):
    d = _den(y, theta)
    q = _exp_gap(y, a) / d
    notq = (np.exp(-(1.0 + theta) * y) - np.expm1(-a * y)) / d
    return y * y * q * notq


def kernel_k5(y, a, theta):
    d = _den(y, theta)
    return y * y * (-np.expm1(-a * y) / d) * (_exp_gap(y, a) / d)


# --- per-indicator law --------------------------------------------------


@dataclass(frozen=True)
class TiltedIndicatorLaw:
    i: int
    u: float
    theta: float
    p_hit: float


def tilted_cdf(i, t, u, theta, params):
    """P(T_i <= t) under the tilt at horizon u; two branches around t=u."""
    if t < 0.0:
        raise DomainError("t must be nonnegative", where="tilt.tilted_cdf")
    if not u > 0.0:
        raise DomainError("u must be positive", where="tilt.tilted_cdf")
    c = coeff(int(i), params)
    d = _den(c * u, theta)
    if t <= u:
        return float(-np.expm1(-c * t) / d)
    return float(1.0 - math.exp(-c * t - theta * c * u) / d)


def indicator_law(i, u, theta, params):
    return TiltedIndicatorLaw(i=int(i), u=float(u), theta=float(theta),
                              p_hit=tilted_cdf(i, u, u, theta, params))


# --- exact tilted moments -----------------------------------------------


def _resolve_theta(tilt):
    # accepts the refined-tilt bundle or a bare theta, for the callers
    # that want moments at the plain saddle point
    return getattr(tilt, "theta_star_u", tilt)


def _kernel_sum(kernel, t, u, tilt, params, trunc, quad, tail_bound_limit,
                where):
    """sum_i kernel(c_i u, t/u) over i >= 2, head exact + certified tail."""
    if not u > 0.0:
        raise DomainError("u must be positive", where=where)
    if not 0.0 <= t <= u:
        raise DomainError(f"need 0 <= t <= u, got t={t}, u={u}", where=where)
    theta = float(_resolve_theta(tilt))
    a = t / u
    trunc = trunc if trunc is not None else TruncationPolicy()
    quad = quad if quad is not None else QuadratureSpec()

    n_cut = trunc.n_terms(u, params)
    idx = np.arange(2, n_cut + 1, dtype=np.float64)
    head = math.fsum(kernel(u * idx ** (-params.alpha), a, theta).tolist())

    tail, resolution = index_tail_sum(
        lambda y: float(kernel(y, a, theta)), u, n_cut, params, quad,
        g_zero_power=3.0)
    if trunc.compensate_tail:
        uncertainty = resolution
        total = head + tail
    else:
        uncertainty = abs(tail) + resolution
        total = head
    if tail_bound_limit is not None and uncertainty > tail_bound_limit:
        raise TruncationError(
            f"truncation uncertainty {uncertainty:.3e} exceeds the budget "
            f"{tail_bound_limit:.3e} at N={n_cut}", where=where)
    return total


def tilted_mean_exact(t, u, tilt, params, trunc=None, quad=None, *,
                      tail_bound_limit=None):
    """E[S_t] under the tilt: 1 + beta~ t + (1/u) sum_i k1(c_i u, t/u)."""
    s = _kernel_sum(kernel_k1, t, u, tilt, params, trunc, quad,
                    tail_bound_limit, "tilt.tilted_mean_exact")
    return 1.0 + params.beta_tilde * t + s / u


def tilted_var_exact(t, u, tilt, params, trunc=None, quad=None, *,
                     tail_bound_limit=None):
    """Var[S_t] under the tilt: u^-2 sum_i k3(c_i u, t/u)."""
    s = _kernel_sum(kernel_k3, t, u, tilt, params, trunc, quad,
                    tail_bound_limit, "tilt.tilted_var_exact")
    return s / (u * u)


def tilted_var_increment_exact(t, u, tilt, params, trunc=None, quad=None, *,
                               tail_bound_limit=None):
    """Var[S_u - S_t] under the tilt: u^-2 sum_i k4(c_i u, t/u)."""
    s = _kernel_sum(kernel_k4, t, u, tilt, params, trunc, quad,
                    tail_bound_limit, "tilt.tilted_var_increment_exact")
    return s / (u * u)


def tilted_cov_exact(t, u, tilt, params, trunc=None, quad=None, *,
                     tail_bound_limit=None):
    """Cov[S_t, S_u - S_t] under the tilt; always <= 0."""
    s = _kernel_sum(kernel_k5, t, u, tilt, params, trunc, quad,
                    tail_bound_limit, "tilt.tilted_cov_exact")
    return -s / (u * u)


# --- shape functions ----------------------------------------------------


def _check_shape_args(a, theta, where):
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0,1], got {a}", where=where)
    if not theta > 0.0:
        raise DomainError(f"shape functions need theta > 0, got {theta}",
                          where=where)


def _shape_tail(fn, rate, quad):
    if rate >= _MIN_MARCH_RATE:
        return integrate_decaying(fn, 1.0, rate, quad)
    return integrate_tail(fn, 1.0, quad)


def shape_ie(a, theta, params, quad=None):
    """I_E(a) = (tau-1) integral_0^inf (p(y,a) - a y) y^(1-tau) dy.

    The kernel tends to 1 - a y at infinity, so as in the rate module the
    polynomial piece of the tail is integrated in closed form and only
    (p - 1) y^(1-tau), which decays exponentially, is quadratured.
    At a = 1 this is Lambda'(theta), hence zero at the saddle point.
    """
    _check_shape_args(a, theta, "tilt.shape_ie")
    if a == 0.0:
        return 0.0
    tau = params.tau
    quad = quad if quad is not None else QuadratureSpec()
    left = integrate_semiline(
        lambda y: kernel_k1(y, a, theta) * y ** -tau, quad,
        upper=1.0, sing_exp_zero=3.0 - tau)

    def decaying(y):
        # p - 1 = -(gap + e^-(1+theta)y)/den
        return (-(_exp_gap(y, a) + math.exp(-(1.0 + theta) * y))
                / _den(y, theta) * y ** (1.0 - tau))

    tail = _shape_tail(decaying, min(a, 1.0 + theta), quad)
    poly = 1.0 / (tau - 2.0) - a / (tau - 3.0)
    return (tau - 1.0) * (left + tail + poly)


def _shape_no_poly(kernel, a, theta, params, quad, rate):
    tau = params.tau
    left = integrate_semiline(
        lambda y: float(kernel(y, a, theta)) * y ** -tau, quad,
        upper=1.0, sing_exp_zero=3.0 - tau)
    tail = _shape_tail(
        lambda y: float(kernel(y, a, theta)) * y ** -tau, rate, quad)
    return (tau - 1.0) * (left + tail)


def shape_iv(a, theta, params, quad=None):
    """I_V(a): continuum variance shape; vanishes at a = 0."""
    _check_shape_args(a, theta, "tilt.shape_iv")
    if a == 0.0:
        return 0.0
    quad = quad if quad is not None else QuadratureSpec()
    return _shape_no_poly(kernel_k3, a, theta, params, quad,
                          min(a, 1.0, 1.0 + theta))


def shape_jv(a, theta, params, quad=None):
    """J_V(a): increment-variance shape; J_V(0) = I_V(1), J_V(1) = 0."""
    _check_shape_args(a, theta, "tilt.shape_jv")
    if a == 1.0:
        return 0.0
    quad = quad if quad is not None else QuadratureSpec()
    rate = min(a if a > 0.0 else 1.0, 1.0, 1.0 + theta)
    return _shape_no_poly(kernel_k4, a, theta, params, quad, rate)


def shape_gv(a, theta, params, quad=None):
    """G_V(a): cross shape for (S_t, S_u - S_t); zero at both endpoints."""
    _check_shape_args(a, theta, "tilt.shape_gv")
    if a == 0.0 or a == 1.0:
        return 0.0
    quad = quad if quad is not None else QuadratureSpec()
    return _shape_no_poly(kernel_k5, a, theta, params, quad,
                          min(a, 1.0 + theta))


def shape_iv_origin_coeff(params, quad=None):
    """The constant in I_V(a) = a^(tau-3) * coeff * (1 + o(1)) as a -> 0.

    (tau-1) integral_0^inf (1-e^-y) e^-y y^(2-tau) dy; theta drops out
    because the small-a window lives at y ~ 1/a where the tilt factor in
    the denominator has already died.
    """
    quad = quad if quad is not None else QuadratureSpec()
    tau = params.tau
    left = integrate_semiline(
        lambda y: -np.expm1(-y) * math.exp(-y) * y ** (2.0 - tau), quad,
        upper=1.0, sing_exp_zero=3.0 - tau)
    tail = integrate_decaying(
        lambda y: -np.expm1(-y) * math.exp(-y) * y ** (2.0 - tau), 1.0, 1.0,
        quad)
    return (tau - 1.0) * (left + tail)


# --- cached shape table -------------------------------------------------


@dataclass(frozen=True)
class ShapeTable:
    """The four shapes sampled on a fixed grid, with monotone-cubic lookup.

    Built once (the builder runs ~800 quadratures) and immutable after;
    the interpolators are pure functions of the stored arrays.
    """

    grid: np.ndarray
    ie_vals: np.ndarray
    iv_vals: np.ndarray
    jv_vals: np.ndarray
    gv_vals: np.ndarray
    theta: float

    def __post_init__(self):
        if len(self.grid) < 201:
            raise DomainError("shape table needs at least 201 grid points",
                              where="tilt.ShapeTable")
        if not (np.all(np.diff(self.grid) > 0.0)
                and self.grid[0] == 0.0 and self.grid[-1] == 1.0):
            raise DomainError("grid must increase from 0 to 1",
                              where="tilt.ShapeTable")

    @cached_property
    def _interp(self):
        return {name: PchipInterpolator(self.grid, vals, extrapolate=False)
                for name, vals in (("ie", self.ie_vals), ("iv", self.iv_vals),
                                   ("jv", self.jv_vals), ("gv", self.gv_vals))}

    def _eval(self, name, a):
        if not 0.0 <= a <= 1.0:
            raise DomainError(f"a must lie in [0,1], got {a}",
                              where="tilt.ShapeTable")
        return float(self._interp[name](a))

    def ie(self, a):
        return self._eval("ie", a)

    def iv(self, a):
        return self._eval("iv", a)

    def jv(self, a):
        return self._eval("jv", a)

    def gv(self, a):
        return self._eval("gv", a)


def build_shape_table(theta, params, quad=None, n=201):
    if n < 201:
        raise DomainError("shape table needs at least 201 grid points",
                          where="tilt.build_shape_table")
    quad = quad if quad is not None else QuadratureSpec()
    grid = np.linspace(0.0, 1.0, n)
    ie = np.array([shape_ie(a, theta, params, quad) for a in grid])
    iv = np.array([shape_iv(a, theta, params, quad) for a in grid])
    jv = np.array([shape_jv(a, theta, params, quad) for a in grid])
    gv = np.array([shape_gv(a, theta, params, quad) for a in grid])
    return ShapeTable(grid=grid, ie_vals=ie, iv_vals=iv, jv_vals=jv,
                      gv_vals=gv, theta=float(theta))


# --- joint MGF of the standardized pair ---------------------------------


def joint_mgf_tilted(lambda1, lambda2, t, u, tilt, params, trunc=None,
                     quad=None, *, tail_bound_limit=None):
    """log E[exp(l1 Z_t + l2 Z_inc)] under the tilt, standardized pair.

    Z_t and Z_inc are S_t and S_u - S_t, centered at their tilted means
    and scaled by the asymptotic standard deviations
    u^((tau-3)/2) I_V(t/u)^(1/2) and u^((tau-3)/2) J_V(t/u)^(1/2).  The
    computation is the exact per-indicator product on the raw pair, with
    the scalings applied to the arguments up front, so nothing is lost to
    the asymptotic regime except the normalization itself.
    """
    where = "tilt.joint_mgf_tilted"
    if not u > 0.0:
        raise DomainError("u must be positive", where=where)
    if not 0.0 <= t <= u:
        raise DomainError(f"need 0 <= t <= u, got t={t}, u={u}", where=where)
    if lambda1 == 0.0 and lambda2 == 0.0:
        return 0.0
    theta = float(_resolve_theta(tilt))
    a = t / u
    quad = quad if quad is not None else QuadratureSpec()
    scale = u ** (-(params.tau - 3.0) / 2.0)

    l1 = 0.0
    if lambda1 != 0.0:
        iv = shape_iv(a, theta, params, quad)
        if not iv > 0.0:
            raise DomainError(
                f"variance shape I_V({a}) = {iv} cannot standardize lambda1",
                where=where)
        l1 = lambda1 * scale / math.sqrt(iv)
    l2 = 0.0
    if lambda2 != 0.0:
        jv = shape_jv(a, theta, params, quad)
        if not jv > 0.0:
            raise DomainError(
                f"increment shape J_V({a}) = {jv} cannot standardize lambda2",
                where=where)
        l2 = lambda2 * scale / math.sqrt(jv)

    trunc = trunc if trunc is not None else TruncationPolicy()
    n_cut = trunc.n_terms(u, params)
    idx = np.arange(2, n_cut + 1, dtype=np.float64)
    y = u * idx ** (-params.alpha)
    c = y / u
    p = tilted_p(y, a, theta)
    q = tilted_q(y, a, theta)
    b = np.expm1(l1 * c) * p + np.expm1(l2 * c) * q
    if np.any(b <= -1.0):
        raise DomainError(
            "per-indicator bracket 1+b <= 0; the requested (lambda, t) pair "
            "is outside the regime where the product form is finite",
            where=where)
    head = math.fsum((np.log1p(b) - c * (l1 * p + l2 * q)).tolist())

    def g(yv):
        cv = yv / u
        pv = tilted_p(yv, a, theta)
        qv = tilted_q(yv, a, theta)
        bv = math.expm1(l1 * cv) * pv + math.expm1(l2 * cv) * qv
        return math.log1p(bv) - cv * (l1 * pv + l2 * qv)

    tail, resolution = index_tail_sum(g, u, n_cut, params, quad,
                                      g_zero_power=3.0)
    if trunc.compensate_tail:
        uncertainty = resolution
        total = head + tail
    else:
        uncertainty = abs(tail) + resolution
        total = head
    if tail_bound_limit is not None and uncertainty > tail_bound_limit:
        raise TruncationError(
            f"truncation uncertainty {uncertainty:.3e} exceeds the budget "
            f"{tail_bound_limit:.3e} at N={n_cut}", where=where)
    return total
