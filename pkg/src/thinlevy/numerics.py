"""Shared numeric substrate.

Four services used everywhere else in the package: the analytic continuation
of the Riemann zeta function to (-1, 1) by truncation-with-correction,
improper-integral quadrature on the half line with declared endpoint
behavior, bracketed root finding for strictly increasing functions, and
certified tail sums of power-times-exponential sequences.

Everything here is deliberately boring. The interesting formulas live in
the model, rate and tilt modules; this file is plumbing with the error
handling those modules rely on.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .errors import BracketError, ConvergenceError, DomainError

__all__ = [
    "QuadratureSpec",
    "ZetaEval",
    "zeta_continued",
    "integrate_semiline",
    "integrate_decaying",
    "integrate_tail",
    "gauss_panel",
    "find_root_increasing",
    "tail_power_exp_sum",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance budget for the adaptive quadrature calls."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise DomainError("quadrature tolerances must be positive",
                              where="numerics.QuadratureSpec")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1",
                              where="numerics.QuadratureSpec")


@dataclass(frozen=True)
class ZetaEval:
    """One evaluation of the continued zeta function.

    ``est_error`` is the magnitude of the extrapolation correction that was
    applied; it tracks the truncation error of the un-extrapolated bracket
    and is an engineering estimate, not a hard bound.
    """

    s: float
    value: float
    truncation_N: int
    est_error: float


def _pow_sum(lo, hi, s):
    """sum_{n=lo}^{hi} n^{-s}, chunked so huge N stays in memory budget.

    Accumulates in extended precision: the partial sums grow like N^(1-s)
    and downstream consumers multiply zeta values by u^2, so plain double
    pairwise summation would leave a visible floor.
    """
    chunk = 1 << 22
    parts = []
    for start in range(lo, hi + 1, chunk):
        stop = min(start + chunk - 1, hi)
        n = np.arange(start, stop + 1, dtype=np.longdouble)
        parts.append(np.sum(n ** np.longdouble(-s)))
    return np.sum(np.array(parts, dtype=np.longdouble))


def zeta_continued(s, N=100_000):
    """Continued zeta value zeta(s) for s in (-1, inf), s != 1.

    Evaluates the bracket  sum_{n<=N} n^-s - N^(1-s)/(1-s) - N^-s/2,
    whose limit in N is zeta(s) on this strip, at N and 2N, and removes the
    leading O(N^-(s+1)) truncation error by one Richardson step.  At s = 0
    the bracket telescopes to -1/2 for every N, so the result is exact.
    """
    s = float(s)
    if not s > -1.0:
        raise DomainError(f"zeta continuation needs s > -1, got s={s}",
                          where="numerics.zeta_continued")
    if s == 1.0:
        raise DomainError("zeta has a pole at s = 1",
                          where="numerics.zeta_continued")
    N = int(N)
    if N < 2:
        raise DomainError("truncation N must be >= 2",
                          where="numerics.zeta_continued")

    head = _pow_sum(1, N, s)
    full = head + _pow_sum(N + 1, 2 * N, s)

    # the bracket cancels numbers of size N^(1-s) down to an O(1) value, so
    # it stays in extended precision until the very end
    ls = np.longdouble(s)

    def bracket(partial, M):
        M = np.longdouble(M)
        return partial - M ** (1.0 - ls) / (1.0 - ls) - 0.5 * M ** (-ls)

    v1 = bracket(head, N)
    v2 = bracket(full, 2 * N)
    corr = (v2 - v1) / (np.longdouble(2.0) ** (ls + 1.0) - 1.0)
    return ZetaEval(s=s, value=float(v2 + corr), truncation_N=N,
                    est_error=float(abs(corr)))


def _quad_panel(g, lo, hi, spec):
    out = integrate.quad(g, lo, hi,
                         epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                         limit=spec.max_subdivisions, full_output=1)
    if len(out) > 3:
        # quad appends its complaint when the panel budget ran out or the
        # integrand misbehaved; surface it instead of silently trusting val
        raise ConvergenceError(
            f"quadrature on [{lo}, {hi}] did not converge: {out[3]}",
            where="numerics.integrate_semiline")
    val, abserr, _info = out
    return val, abserr


@lru_cache(maxsize=256)
def _jacobi_rule(n, beta):
    x, w = special.roots_jacobi(n, 0.0, beta)
    return x, w


def _left_panel(f, length, q, spec):
    """integral_0^length f(y) dy for f(y) = y^q * h(y) with smooth h.

    Gauss-Jacobi with weight y^q absorbs the declared endpoint power
    exactly, so only the smooth factor h is approximated and no node ever
    approaches the origin, where these integrands lose precision to
    cancellation.  The order is doubled until two consecutive rules agree
    within tolerance (plus a floor for the rule's own rounding noise).
    """
    prev_val = None
    prev_delta = None
    tight = spec.abs_tol
    for n in (24, 48, 96, 192, 384):
        x, w = _jacobi_rule(n, q)
        y = 0.5 * length * (1.0 + x)
        h = np.array([f(v) for v in y]) * y ** (-q)
        scale = (0.5 * length) ** (q + 1.0)
        val = scale * float(np.dot(w, h))
        rounding = scale * float(np.dot(w, np.abs(h))) * 1e-14
        if prev_val is not None:
            delta = abs(val - prev_val)
            tight = max(spec.abs_tol, spec.rel_tol * abs(val), rounding)
            if delta <= tight:
                return val
            if prev_delta is not None and delta >= prev_delta:
                # higher order stopped helping: the rule has hit the noise
                # floor of the integrand itself (these kernels cancel near
                # the origin), so the previous pair is as good as it gets
                if prev_delta <= 1000.0 * tight:
                    return prev_val
                raise ConvergenceError(
                    f"singular-endpoint panel on (0, {length}] stalled at "
                    f"difference {prev_delta:.3e}",
                    where="numerics.integrate_semiline")
            prev_delta = delta
        prev_val = val
    if prev_delta is not None and prev_delta <= 1000.0 * tight:
        return prev_val
    raise ConvergenceError(
        f"singular-endpoint panel on (0, {length}] did not stabilize "
        f"(last difference {prev_delta})",
        where="numerics.integrate_semiline")


@lru_cache(maxsize=8)
def _legendre_rule(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_panel(f, lo, hi, spec=None):
    """integral_lo^hi f for smooth f, by order-doubled Gauss-Legendre.

    Converges geometrically for analytic integrands; two consecutive
    orders agreeing within tolerance is the acceptance test.
    """
    spec = spec if spec is not None else QuadratureSpec()
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    prev = None
    for n in (32, 64, 128, 256):
        x, w = _legendre_rule(n)
        vals = np.array([f(mid + half * t) for t in x])
        val = half * float(np.dot(w, vals))
        if prev is not None and abs(val - prev) <= max(
                spec.abs_tol, spec.rel_tol * abs(val),
                1e-14 * half * float(np.dot(w, np.abs(vals)))):
            return val
        prev = val
    raise ConvergenceError(
        f"smooth panel [{lo}, {hi}] did not converge (last {prev}, {val})",
        where="numerics.gauss_panel")


def integrate_decaying(f, lo, decay_rate, spec=None):
    """integral_lo^inf f for f decaying like exp(-decay_rate * y).

    Splits into spans sized by the decay scale and stops once the next
    span can only contribute below tolerance; each span is a smooth
    Gauss-Legendre panel.
    """
    spec = spec if spec is not None else QuadratureSpec()
    if not decay_rate > 0.0:
        raise DomainError("decay_rate must be positive",
                          where="numerics.integrate_decaying")
    span = 6.0 / decay_rate
    total = 0.0
    a = float(lo)
    for _ in range(12):
        total += gauss_panel(f, a, a + span, spec)
        a += span
        if abs(f(a)) * span < max(spec.abs_tol, spec.rel_tol * abs(total)):
            break
    return total


def integrate_tail(f, lo, spec=None):
    """integral_lo^inf f by the adaptive infinite-range transform.

    Safety net for tails that decay only polynomially, or exponentially at
    a rate too feeble for span-by-span marching to be sensible.
    """
    spec = spec if spec is not None else QuadratureSpec()
    val, _abserr = _quad_panel(f, float(lo), np.inf, spec)
    return val


def integrate_semiline(f, spec=None, *, upper=None, sing_exp_zero=0.0):
    """Integral of f over (0, upper), upper = infinity by default.

    ``sing_exp_zero`` is the caller's declared power behavior at the
    origin: f(x) ~ C x^q with q > -1.  The (0, min(1, upper)] panel is
    integrated by a quadrature rule carrying the weight x^q, the remainder
    by adaptive panels (which also handle the decay at infinity).
    """
    spec = spec if spec is not None else QuadratureSpec()
    q = float(sing_exp_zero)
    if not q > -1.0:
        raise DomainError(
            f"endpoint exponent must be > -1 for integrability, got {q}",
            where="numerics.integrate_semiline")
    if upper is not None and not upper > 0.0:
        raise DomainError("upper limit must be positive",
                          where="numerics.integrate_semiline")

    split = 1.0 if upper is None else min(1.0, float(upper))
    left = _left_panel(f, split, q, spec)

    right = 0.0
    if upper is None:
        right, _ = _quad_panel(f, split, np.inf, spec)
    elif upper > split:
        right, _ = _quad_panel(f, split, float(upper), spec)
    return left + right


def find_root_increasing(g, bracket_lo, bracket_hi, tol=1e-10):
    """Root of a strictly increasing g with g(lo) < 0, expanding upward.

    The initial bracket may fail on the high side; the bracket is then
    doubled upward a bounded number of times.  Termination inside the final
    bracket is guaranteed by the bisection fallback built into the
    Brent-style solver, and |g(root)| <= tol is re-checked afterwards.
    """
    lo = float(bracket_lo)
    hi = float(bracket_hi)
    if not hi > lo:
        raise DomainError("bracket_hi must exceed bracket_lo",
                          where="numerics.find_root_increasing")
    glo = g(lo)
    if not math.isfinite(glo):
        raise BracketError(f"g(bracket_lo={lo}) is not finite",
                           where="numerics.find_root_increasing")
    if glo == 0.0:
        return lo
    if glo > 0.0:
        raise BracketError(
            f"g(bracket_lo={lo}) = {glo} > 0; root lies below the bracket "
            "and only upward expansion is supported",
            where="numerics.find_root_increasing")

    ghi = g(hi)
    width = hi - lo
    for _ in range(60):
        if math.isfinite(ghi) and ghi >= 0.0:
            break
        lo, glo = hi, ghi
        width *= 2.0
        hi = hi + width
        ghi = g(hi)
    else:
        raise BracketError(
            f"no sign change found up to {hi} after bounded expansion",
            where="numerics.find_root_increasing")
    if ghi == 0.0:
        return hi

    root = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=4e-15, maxiter=200)
    resid = g(root)
    if abs(resid) > tol:
        raise ConvergenceError(
            f"root residual |g({root})| = {abs(resid)} exceeds tol {tol}",
            where="numerics.find_root_increasing")
    return float(root)


def tail_power_exp_sum(a, b, u, N, alpha):
    """Certified value of  sum_{i>N} i^(-a*alpha) * exp(-b*u*i^(-alpha)).

    The sum is replaced by its integral surrogate plus endpoint corrections
    (the summand is smooth in the index, so the correction series is the
    standard one: half the boundary value and a twelfth of the boundary
    slope).  The first omitted correction involves the third derivative of
    the summand at N; its magnitude, with a safety factor, is returned as a
    certified bound alongside the value.

    Returns ``(value, bound)``.  Requires a*alpha > 1 so the sum converges.
    """
    a = float(a)
    b = float(b)
    u = float(u)
    N = int(N)
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0,1), got {alpha}",
                          where="numerics.tail_power_exp_sum")
    if not a * alpha > 1.0:
        raise DomainError(
            f"need a > 1/alpha = {1.0/alpha} for the tail to converge, got a={a}",
            where="numerics.tail_power_exp_sum")
    if b < 0.0:
        raise DomainError("exponential coefficient b must be >= 0",
                          where="numerics.tail_power_exp_sum")
    if not u > 0.0:
        raise DomainError("u must be positive",
                          where="numerics.tail_power_exp_sum")
    if N < 2:
        raise DomainError("N must be >= 2", where="numerics.tail_power_exp_sum")

    tm1 = 1.0 / alpha            # the summability threshold for a
    s_gam = a - tm1              # > 0 by the domain check
    y_n = u * N ** (-alpha)

    # integral_N^inf x^(-a*alpha) exp(-b*u*x^(-alpha)) dx, exactly, via the
    # substitution y = u x^(-alpha) and the lower incomplete gamma function;
    # written as y_n^s * [gamma_lower(s, x)/x^s] with x = b*y_n so nothing
    # overflows when b is tiny (the bracket tends to 1/s there)
    x_arg = b * y_n
    if x_arg < 0.5:
        # gamma_lower(s, x)/x^s = sum_k (-x)^k / (k! (s+k)), fast here
        gser = 0.0
        term = 1.0
        for k in range(0, 60):
            gser += term / (s_gam + k)
            term *= -x_arg / (k + 1.0)
            if abs(term) < 1e-20:
                break
        tail_integral = tm1 * u ** (tm1 - a) * y_n ** s_gam * gser
    else:
        tail_integral = (tm1 * u ** (tm1 - a) * b ** (-s_gam)
                         * special.gamma(s_gam) * special.gammainc(s_gam, x_arg))

    # summand and its log-derivative machinery at x = N
    phi_n = N ** (-a * alpha) * math.exp(-b * y_n)
    x = float(N)
    lp1 = alpha * (b * y_n - a) / x
    lp2 = (alpha * a - alpha * (1.0 + alpha) * b * y_n) / (x * x)
    lp3 = (alpha * (1.0 + alpha) * (2.0 + alpha) * b * y_n - 2.0 * alpha * a) / x ** 3
    dphi_n = phi_n * lp1
    d3phi_n = phi_n * (lp3 + 3.0 * lp2 * lp1 + lp1 ** 3)

    value = tail_integral - 0.5 * phi_n - dphi_n / 12.0
    bound = 4.0 * abs(d3phi_n) / 720.0
    return float(value), float(bound)
