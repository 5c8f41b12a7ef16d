"""Tilted measure: indicator laws, exact moments, shapes, joint MGF."""

import math
from dataclasses import FrozenInstanceError

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from thinlevy.errors import DomainError, TruncationError
from thinlevy.model import ModelParams, TruncationPolicy
from thinlevy.rate import RateFunction
from thinlevy.tilt import (
    ShapeTable,
    build_shape_table,
    indicator_law,
    joint_mgf_tilted,
    kernel_k1,
    kernel_k3,
    kernel_k4,
    kernel_k5,
    shape_gv,
    shape_ie,
    shape_iv,
    shape_iv_origin_coeff,
    shape_jv,
    tilted_cdf,
    tilted_cov_exact,
    tilted_mean_exact,
    tilted_q,
    tilted_var_exact,
    tilted_var_increment_exact,
)

# refined tilt at u=20, tau=3.5 (the rate tests pin the solver itself);
# frozen here so the moment oracles below do not depend on that solver
THETA_U20 = 1.3041899846805123
THETA_STAR = {3.5: 1.6422685120392322, 3.2: 6.738557265349388,
              3.8: 0.7474839983782783}

# frozen against brute_kernel_sum below: longdouble summation of the
# first 4e5 indicator terms plus an Euler-Maclaurin remainder whose
# integral is done by QUADPACK's algebraic-weight rule
KERNEL_SUM_ORACLE = {
    # (kernel, a) at u=20, theta=THETA_U20
    ("k1", 1.0): -20.000000000546287,
    ("k1", 0.5): 1804.9832758925895,
    ("k3", 1.0): 6378.29956210444,
    ("k3", 0.5): 5033.510763110428,
    ("k4", 0.5): 4668.945542900597,
    ("k5", 0.5): 1662.0783719532787,
}

# frozen against quad_shape below (QUADPACK with the y^(3-tau) endpoint
# weight on [0,1], plain adaptive rule on [1,inf)), at a=0.5, theta*
SHAPE_ORACLE = {
    3.5: {"ie": 1.0597562662624034, "iv": 2.8677544468149825,
          "jv": 2.67806905146751, "gv": 0.996543018010311},
    3.2: {"ie": 1.047258260666785, "iv": 2.120546869826299,
          "jv": 2.0622446338574827, "gv": 1.369930103155623},
    3.8: {"ie": 2.037255814066708, "iv": 7.081553965158554,
          "jv": 6.743664503926981, "gv": 0.9227114746257998},
}

IV_ORIGIN_ORACLE = {3.5: 3.6708721186272495, 3.2: 1.9043094759658288,
                    3.8: 11.907978064394722}

# joint MGF at (0.7, -0.4, t=10, u=20), theta=THETA_U20, same oracle
# machinery applied to the per-indicator log bracket
JOINT_MGF_ORACLE = 0.42032830003623883


# --- oracle machinery (kept in-file for regeneration) -------------------
#
# The singular-weight integrals feed QUADPACK's QAWS rule the smooth
# factor kernel/y^3 only; below Y0 that factor is evaluated from its
# Taylor series, because the subtractions inside the kernels lose enough
# precision near the origin to bias the extrapolation (the y^(3-tau)
# weight concentrates a sizable share of its mass there).

Y0 = 1e-4


def o_den(y, th):
    return np.exp(-(1.0 + th) * y) - np.expm1(-y)


def o_h(y, a, th):
    return -np.expm1(-a * y) / o_den(y, th)


def o_q(y, a, th):
    return (np.exp(-a * y) - np.exp(-y)) / o_den(y, th)


def o_k1(y, a, th):
    return y * (o_h(y, a, th) - a * y)


def o_k3(y, a, th):
    h = o_h(y, a, th)
    return y * y * h * (1.0 - h)


def o_k4(y, a, th):
    q = o_q(y, a, th)
    return y * y * q * (1.0 - q)


def o_k5(y, a, th):
    return y * y * o_h(y, a, th) * o_q(y, a, th)


def series_hq(a, th):
    """Taylor coefficients of h and q through y^4, by series division."""
    d = [((-(1.0 + th)) ** k - (-1.0) ** k) / math.factorial(k)
         for k in range(1, 5)]
    e1 = -d[0]
    e2 = d[0] * d[0] - d[1]
    e3 = -d[0] ** 3 + 2.0 * d[0] * d[1] - d[2]

    def divide(n):
        return (n[0], n[1] + n[0] * e1, n[2] + n[1] * e1 + n[0] * e2,
                n[3] + n[2] * e1 + n[1] * e2 + n[0] * e3)

    nh = [-(-a) ** k / math.factorial(k) for k in range(1, 5)]
    nq = [((-a) ** k - (-1.0) ** k) / math.factorial(k) for k in range(1, 5)]
    return divide(nh), divide(nq)


def g_k1(y, a, th):
    if y < Y0:
        h, _ = series_hq(a, th)
        return h[1] + h[2] * y + h[3] * y * y
    return (o_h(y, a, th) - a * y) / (y * y)


def g_k3(y, a, th):
    if y < Y0:
        h, _ = series_hq(a, th)
        return (h[0] + (h[1] - h[0] ** 2) * y
                + (h[2] - 2.0 * h[0] * h[1]) * y * y)
    hh = o_h(y, a, th)
    return hh * (1.0 - hh) / y


def g_k4(y, a, th):
    if y < Y0:
        _, q = series_hq(a, th)
        return (q[0] + (q[1] - q[0] ** 2) * y
                + (q[2] - 2.0 * q[0] * q[1]) * y * y)
    qq = o_q(y, a, th)
    return qq * (1.0 - qq) / y


def g_k5(y, a, th):
    # the product h*q is O(y^2), one order higher than the others
    if y < Y0:
        h, q = series_hq(a, th)
        return (h[0] * q[0] * y + (h[0] * q[1] + h[1] * q[0]) * y * y
                + (h[0] * q[2] + h[1] * q[1] + h[2] * q[0]) * y ** 3)
    return o_h(y, a, th) * o_q(y, a, th) / y


ORACLE_KERNELS = {"k1": (g_k1, o_k1), "k3": (g_k3, o_k3),
                  "k4": (g_k4, o_k4), "k5": (g_k5, o_k5)}


def brute_kernel_sum(gfun, kern, a, u, th, p, m=400_000):
    idx = np.arange(2, m + 1, dtype=np.longdouble)
    y = np.longdouble(u) * idx ** np.longdouble(-p.alpha)
    head = float(np.sum(kern(y, a, np.longdouble(th))))
    y_m = u * float(m) ** (-p.alpha)
    integ, _ = quad(lambda yy: gfun(yy, a, th), 0.0, y_m, weight="alg",
                    wvar=(3.0 - p.tau, 0.0), epsabs=1e-14, epsrel=1e-13,
                    limit=250)
    phi = lambda i: kern(u * float(i) ** (-p.alpha), a, th)
    d1 = (phi(m + 1) - phi(m - 1)) / 2.0
    return (head + (p.tau - 1.0) * u ** (p.tau - 1.0) * integ
            - 0.5 * phi(m) - d1 / 12.0)


def quad_shape(gfun, kern, a, th, p):
    left, _ = quad(lambda y: gfun(y, a, th), 0.0, 1.0, weight="alg",
                   wvar=(3.0 - p.tau, 0.0), epsabs=1e-14, epsrel=1e-13,
                   limit=250)
    right, _ = quad(lambda y: kern(y, a, th) * y ** (-p.tau), 1.0, np.inf,
                    epsabs=1e-14, epsrel=1e-12, limit=300)
    return (p.tau - 1.0) * (left + right)


@pytest.fixture(scope="module")
def p35():
    return ModelParams(3.5)


# --- tilted cdf and indicator law ---------------------------------------


def test_cdf_against_direct_exponentials(p35):
    # small enough y that naive float arithmetic is itself trustworthy
    i, u, th = 40, 5.0, 1.2
    c = 40.0 ** (-0.4)
    den = math.exp(-(1.0 + th) * c * u) + 1.0 - math.exp(-c * u)
    assert tilted_cdf(i, 3.0, u, th, p35) == pytest.approx(
        (1.0 - math.exp(-3.0 * c)) / den, rel=1e-13)
    assert tilted_cdf(i, 8.0, u, th, p35) == pytest.approx(
        1.0 - math.exp(-8.0 * c) * math.exp(-th * c * u) / den, rel=1e-13)


def test_cdf_zero_tilt_is_exponential(p35):
    c = 7.0 ** (-0.4)
    assert tilted_cdf(7, 2.5, 6.0, 0.0, p35) == pytest.approx(
        -math.expm1(-2.5 * c), rel=1e-14)


def test_cdf_continuous_at_horizon(p35):
    u = 9.0
    for i in (2, 11, 300):
        lo = tilted_cdf(i, u * (1.0 - 1e-11), u, 1.5, p35)
        hi = tilted_cdf(i, u * (1.0 + 1e-11), u, 1.5, p35)
        assert hi - lo == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(i=st.integers(2, 2000), u=st.floats(0.5, 60.0),
       th=st.floats(-0.9, 6.0),
       t2=st.floats(0.0, 200.0), frac=st.floats(0.0, 1.0))
def test_cdf_monotone_in_unit_interval(i, u, th, t2, frac):
    p = ModelParams(3.5)
    t1 = frac * t2
    c1 = tilted_cdf(i, t1, u, th, p)
    c2 = tilted_cdf(i, t2, u, th, p)
    assert 0.0 <= c1 <= c2 + 1e-12
    assert c2 <= 1.0


def test_cdf_domain(p35):
    with pytest.raises(DomainError):
        tilted_cdf(5, -1.0, 10.0, 1.0, p35)
    with pytest.raises(DomainError):
        tilted_cdf(5, 1.0, 0.0, 1.0, p35)


def test_indicator_law_matches_cdf_at_horizon(p35):
    law = indicator_law(17, 12.0, 1.3, p35)
    assert law.p_hit == pytest.approx(tilted_cdf(17, 12.0, 12.0, 1.3, p35),
                                      abs=0.0)
    assert law.i == 17 and law.u == 12.0 and law.theta == 1.3


# --- kernels ------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(y=st.floats(1e-6, 80.0), a=st.floats(0.0, 1.0),
       th=st.floats(-0.9, 6.0))
def test_kernel_variance_pieces_nonnegative(y, a, th):
    assert kernel_k3(y, a, th) >= 0.0
    assert kernel_k4(y, a, th) >= 0.0
    assert kernel_k5(y, a, th) >= 0.0


@settings(max_examples=80, deadline=None)
@given(y=st.floats(1e-6, 60.0), a=st.floats(0.0, 1.0),
       th=st.floats(-0.9, 6.0))
def test_kernel_additivity_pointwise(y, a, th):
    # var(t) + var_inc(t) + 2 cov(t) = var(u), indicator by indicator:
    # h_a(1-h_a) + q(1-q) - 2 h_a q = h_u(1-h_u)
    lhs = kernel_k3(y, a, th) + kernel_k4(y, a, th) - 2.0 * kernel_k5(y, a, th)
    rhs = kernel_k3(y, 1.0, th)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-13)


def test_gap_kernel_series_window():
    # q through expm1 vs naive subtraction where both are exact enough
    for y in (0.5, 1.0, 3.0):
        naive = (math.exp(-0.3 * y) - math.exp(-y)) / (
            math.exp(-2.2 * y) + 1.0 - math.exp(-y))
        assert tilted_q(y, 0.3, 1.2) == pytest.approx(naive, rel=1e-13)


def test_gap_kernel_no_overflow_far_out():
    # the expm1 route would overflow at (1-a) y ~ 1e4; the far branch
    # must take over silently
    v = tilted_q(2.0e4, 1e-4, 1.0)
    assert v == pytest.approx(math.exp(-2.0), rel=1e-10)


# --- exact moments vs the independent oracle ----------------------------


def test_moment_oracles_frozen(p35):
    u = 20.0
    assert tilted_var_exact(u, u, THETA_U20, p35) == pytest.approx(
        KERNEL_SUM_ORACLE[("k3", 1.0)] / u ** 2, abs=5e-10)
    assert tilted_var_exact(10.0, u, THETA_U20, p35) == pytest.approx(
        KERNEL_SUM_ORACLE[("k3", 0.5)] / u ** 2, abs=5e-10)
    assert tilted_var_increment_exact(10.0, u, THETA_U20, p35) == pytest.approx(
        KERNEL_SUM_ORACLE[("k4", 0.5)] / u ** 2, abs=5e-10)
    assert tilted_cov_exact(10.0, u, THETA_U20, p35) == pytest.approx(
        -KERNEL_SUM_ORACLE[("k5", 0.5)] / u ** 2, abs=5e-10)
    assert tilted_mean_exact(10.0, u, THETA_U20, p35) == pytest.approx(
        1.0 + KERNEL_SUM_ORACLE[("k1", 0.5)] / u, abs=5e-9)


def test_mean_calibrated_at_horizon(p35):
    # at theta*_u the tilted process ends at zero on average; the k1 sum
    # at a=1 collapses to -u up to terms beyond double precision
    u = 20.0
    assert KERNEL_SUM_ORACLE[("k1", 1.0)] == pytest.approx(-u, abs=1e-8)
    assert tilted_mean_exact(u, u, THETA_U20, p35) == pytest.approx(
        0.0, abs=1e-8)


def test_mean_calibration_sharpens_with_u(p35):
    # the centering error dies off much faster than any power of u; only
    # the first few u are above the noise floor of the tail quadrature,
    # so the measurable claim stops at u=15
    rf = RateFunction(p35)
    resid = []
    for u in (6.0, 10.0, 15.0):
        tl = rf.solve_theta_star_u(u)
        resid.append(abs(u * tilted_mean_exact(u, u, tl, p35)))
    assert resid[0] > 1e-6
    assert resid[0] > resid[1] > resid[2]
    assert resid[2] < 1e-8


def test_variance_additivity_exact(p35):
    u = 20.0
    vu = tilted_var_exact(u, u, THETA_U20, p35)
    for t in (0.0, 5.0, 10.0, 15.0, 20.0):
        s = (tilted_var_exact(t, u, THETA_U20, p35)
             + tilted_var_increment_exact(t, u, THETA_U20, p35)
             + 2.0 * tilted_cov_exact(t, u, THETA_U20, p35))
        assert s == pytest.approx(vu, rel=1e-11)


def test_moment_endpoints(p35):
    u = 20.0
    assert tilted_var_exact(0.0, u, THETA_U20, p35) == 0.0
    assert tilted_var_increment_exact(u, u, THETA_U20, p35) == 0.0
    assert tilted_cov_exact(0.0, u, THETA_U20, p35) == pytest.approx(0.0, abs=0.0)
    assert tilted_mean_exact(0.0, u, THETA_U20, p35) == pytest.approx(1.0, abs=0.0)
    assert tilted_cov_exact(10.0, u, THETA_U20, p35) < 0.0


def test_variance_tracks_asymptotic_shape(p35):
    # every Euler-Maclaurin correction to the k3 sum is exponentially
    # small, so the exact variance pins the continuum shape already at
    # moderate u
    rf = RateFunction(p35)
    for u in (25.0, 50.0):
        tl = rf.solve_theta_star_u(u)
        v = tilted_var_exact(u, u, tl, p35)
        asym = u ** (p35.tau - 3.0) * shape_iv(1.0, tl.theta_star_u, p35)
        assert v == pytest.approx(asym, rel=1e-9)


def test_moment_truncation_budget(p35):
    tight = TruncationPolicy(k_factor=1.0, compensate_tail=False)
    with pytest.raises(TruncationError):
        tilted_var_exact(10.0, 20.0, THETA_U20, p35, trunc=tight,
                         tail_bound_limit=1e-6)


def test_moment_domain(p35):
    with pytest.raises(DomainError):
        tilted_mean_exact(21.0, 20.0, THETA_U20, p35)
    with pytest.raises(DomainError):
        tilted_var_exact(-1.0, 20.0, THETA_U20, p35)
    with pytest.raises(DomainError):
        tilted_var_exact(1.0, 0.0, THETA_U20, p35)


def test_moments_accept_refined_tilt_bundle(p35):
    rf = RateFunction(p35)
    tl = rf.solve_theta_star_u(20.0)
    direct = tilted_var_exact(10.0, 20.0, tl.theta_star_u, p35)
    assert tilted_var_exact(10.0, 20.0, tl, p35) == direct


# --- shape functions ----------------------------------------------------


@pytest.mark.parametrize("tau", [3.5, 3.2, 3.8])
def test_shape_oracles_frozen(tau):
    p = ModelParams(tau)
    th = THETA_STAR[tau]
    ora = SHAPE_ORACLE[tau]
    assert shape_ie(0.5, th, p) == pytest.approx(ora["ie"], abs=2e-10)
    assert shape_iv(0.5, th, p) == pytest.approx(ora["iv"], abs=2e-10)
    assert shape_jv(0.5, th, p) == pytest.approx(ora["jv"], abs=2e-10)
    assert shape_gv(0.5, th, p) == pytest.approx(ora["gv"], abs=2e-10)


@pytest.mark.parametrize("tau", [3.5, 3.2, 3.8])
def test_shape_endpoint_identities(tau):
    p = ModelParams(tau)
    th = THETA_STAR[tau]
    rf = RateFunction(p)
    # I_E(1) is the rate-function slope, zero at the saddle point
    assert shape_ie(1.0, th, p) == pytest.approx(rf.lam_deriv(th, 1),
                                                 abs=1e-12)
    assert abs(shape_ie(1.0, th, p)) < 1e-8
    assert shape_iv(1.0, th, p) == pytest.approx(shape_jv(0.0, th, p),
                                                 rel=1e-12)
    assert shape_iv(1.0, th, p) == pytest.approx(rf.lam_deriv(th, 2),
                                                 rel=1e-9)
    assert shape_ie(0.0, th, p) == 0.0
    assert shape_iv(0.0, th, p) == 0.0
    assert shape_jv(1.0, th, p) == 0.0
    assert shape_gv(0.0, th, p) == 0.0
    assert shape_gv(1.0, th, p) == 0.0


def test_shape_ie_concave_with_interior_max(p35):
    th = THETA_STAR[3.5]
    grid = np.linspace(0.0, 1.0, 41)
    vals = np.array([shape_ie(a, th, p35) for a in grid])
    assert np.all(vals[1:-1] > 0.0)
    assert np.all(np.diff(vals, 2) < 1e-10)
    # rising at the left end, falling at the right
    assert vals[1] > vals[0] and vals[-1] < vals[-2]


def test_shape_iv_monotone(p35):
    th = THETA_STAR[3.5]
    vals = [shape_iv(a, th, p35) for a in np.linspace(0.0, 1.0, 21)]
    assert np.all(np.diff(vals) > 0.0)


def test_shape_jv_hump_then_decay(p35):
    # J_V is not monotone: moving a off zero pushes the q probabilities
    # at y ~ 1/a toward 1/2 before the shrinking window wins, so the
    # curve rises to a hump near a ~ 0.1 and only then falls to zero
    th = THETA_STAR[3.5]
    grid = np.linspace(0.0, 1.0, 21)
    vals = [shape_jv(a, th, p35) for a in grid]
    assert max(vals) > vals[0] > 0.0
    late = [v for a, v in zip(grid, vals) if a >= 0.25]
    assert np.all(np.diff(late) < 0.0)


@pytest.mark.parametrize("tau", [3.5, 3.2, 3.8])
def test_shape_iv_origin_scaling(tau):
    p = ModelParams(tau)
    th = THETA_STAR[tau]
    coeffv = shape_iv_origin_coeff(p)
    assert coeffv == pytest.approx(IV_ORIGIN_ORACLE[tau], rel=1e-10)
    ratios = [shape_iv(a, th, p) / a ** (tau - 3.0) / coeffv
              for a in (0.02, 0.01, 0.005)]
    # the approach is monotone from above at rate a^(4-tau)
    assert ratios[0] > ratios[1] > ratios[2] > 1.0
    assert ratios[2] - 1.0 < 0.05


def test_shape_theta_sensitivity_is_lipschitz(p35):
    # shapes at theta* and theta*_u may differ only in proportion to the
    # tilt gap; the constant is a crude bound on d(shape)/d(theta)
    rf = RateFunction(p35)
    th_s = rf.solve_theta_star().theta_star
    th_u = rf.solve_theta_star_u(25.0).theta_star_u
    gap = abs(th_s - th_u)
    for a in (0.25, 0.5, 0.75, 1.0):
        d = abs(shape_ie(a, th_s, p35) - shape_ie(a, th_u, p35))
        assert d <= 10.0 * gap * a


def test_shape_domain(p35):
    with pytest.raises(DomainError):
        shape_ie(1.5, 1.0, p35)
    with pytest.raises(DomainError):
        shape_iv(0.5, 0.0, p35)
    with pytest.raises(DomainError):
        shape_gv(-0.1, 1.0, p35)


# --- shape table --------------------------------------------------------


@pytest.fixture(scope="module")
def table35(p35):
    return build_shape_table(THETA_STAR[3.5], p35)


def test_table_matches_direct_at_nodes(table35, p35):
    th = THETA_STAR[3.5]
    for a in (0.25, 0.5, 0.75):
        assert table35.ie(a) == pytest.approx(shape_ie(a, th, p35), rel=1e-12)
        assert table35.gv(a) == pytest.approx(shape_gv(a, th, p35), rel=1e-12)


def test_table_interpolates_between_nodes(table35, p35):
    # looser near a=0.12 where the J_V hump keeps the curvature high
    th = THETA_STAR[3.5]
    for a in (0.1234, 0.5017, 0.9926):
        assert table35.iv(a) == pytest.approx(shape_iv(a, th, p35), rel=1e-5)
        assert table35.jv(a) == pytest.approx(shape_jv(a, th, p35), rel=1e-5)
    assert table35.jv(0.5017) == pytest.approx(shape_jv(0.5017, th, p35),
                                               rel=1e-8)


def test_table_rejects_small_grid(p35):
    with pytest.raises(DomainError):
        build_shape_table(THETA_STAR[3.5], p35, n=50)
    with pytest.raises(DomainError):
        ShapeTable(grid=np.linspace(0, 1, 5), ie_vals=np.zeros(5),
                   iv_vals=np.zeros(5), jv_vals=np.zeros(5),
                   gv_vals=np.zeros(5), theta=1.0)


def test_table_is_immutable(table35):
    with pytest.raises(FrozenInstanceError):
        table35.theta = 2.0


def test_table_rejects_out_of_range(table35):
    with pytest.raises(DomainError):
        table35.ie(1.2)


# --- joint MGF ----------------------------------------------------------


def test_joint_mgf_oracle_frozen(p35):
    v = joint_mgf_tilted(0.7, -0.4, 10.0, 20.0, THETA_U20, p35)
    assert v == pytest.approx(JOINT_MGF_ORACLE, abs=5e-9)


def test_joint_mgf_zero_at_origin(p35):
    assert joint_mgf_tilted(0.0, 0.0, 10.0, 20.0, THETA_U20, p35) == 0.0


def test_joint_mgf_time_zero_increment_is_full_marginal(p35):
    # at t=0 the increment is all of S_u, and J_V(0)=I_V(1) makes the
    # two standardizations coincide
    u = 30.0
    rf = RateFunction(p35)
    tl = rf.solve_theta_star_u(u)
    a = joint_mgf_tilted(0.0, 0.8, 0.0, u, tl, p35)
    b = joint_mgf_tilted(0.8, 0.0, u, u, tl, p35)
    assert a == pytest.approx(b, rel=1e-10)


def test_joint_mgf_convex_along_lines(p35):
    u = 20.0
    for lams in ((-0.6, 0.2), (0.5, 0.5)):
        g = [joint_mgf_tilted(s * lams[0], s * lams[1], 10.0, u, THETA_U20,
                              p35) for s in (0.5, 1.0, 1.5)]
        assert g[0] + g[2] > 2.0 * g[1] - 1e-12


def test_joint_mgf_gaussian_limit(p35):
    # standardized log-MGF approaches the bivariate normal form with
    # correlation -G_V/sqrt(I_V J_V)
    u = 100.0
    rf = RateFunction(p35)
    tl = rf.solve_theta_star_u(u)
    th = tl.theta_star_u
    iv = shape_iv(0.5, th, p35)
    jv = shape_jv(0.5, th, p35)
    rho = shape_gv(0.5, th, p35) / math.sqrt(iv * jv)
    for l1, l2 in ((1.0, 1.0), (1.0, -1.0), (-0.7, 0.3)):
        got = joint_mgf_tilted(l1, l2, 50.0, u, tl, p35)
        want = 0.5 * l1 * l1 + 0.5 * l2 * l2 - l1 * l2 * rho
        assert got == pytest.approx(want, abs=5e-3)


def test_joint_mgf_degenerate_shape_raises(p35):
    # at t=0 the first component has no variance to standardize by
    with pytest.raises(DomainError):
        joint_mgf_tilted(1.0, 0.0, 0.0, 20.0, THETA_U20, p35)


def test_joint_mgf_domain(p35):
    with pytest.raises(DomainError):
        joint_mgf_tilted(0.5, 0.5, 25.0, 20.0, THETA_U20, p35)
    with pytest.raises(DomainError):
        joint_mgf_tilted(0.5, 0.5, 5.0, -1.0, THETA_U20, p35)


def test_joint_mgf_truncation_budget(p35):
    tight = TruncationPolicy(k_factor=1.0, compensate_tail=False)
    with pytest.raises(TruncationError):
        joint_mgf_tilted(0.7, -0.4, 10.0, 20.0, THETA_U20, p35,
                         trunc=tight, tail_bound_limit=1e-9)


# --- oracle self-checks -------------------------------------------------


def test_brute_oracle_reproduces_frozen_values(p35):
    # regeneration guard at reduced m; the frozen numbers came from m=4e5
    v = brute_kernel_sum(*ORACLE_KERNELS["k3"], 0.5, 20.0, THETA_U20, p35,
                         m=60_000)
    assert v == pytest.approx(KERNEL_SUM_ORACLE[("k3", 0.5)], abs=1e-7)
    s = quad_shape(*ORACLE_KERNELS["k4"], 0.5, THETA_STAR[3.5], p35)
    assert s == pytest.approx(SHAPE_ORACLE[3.5]["jv"], abs=1e-9)
    s5 = quad_shape(*ORACLE_KERNELS["k5"], 0.5, THETA_STAR[3.5], p35)
    assert s5 == pytest.approx(SHAPE_ORACLE[3.5]["gv"], abs=1e-9)
