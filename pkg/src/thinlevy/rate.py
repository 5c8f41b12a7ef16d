"""Rate function, tilt calibration, and the leading tail asymptotics.

In the jump-size variable y the rate integrand is the same scalar F as in
the exact log-MGF, and

    Lambda(theta) = (tau - 1) * integral_0^inf F(y; theta) y^(-tau) dy.

The strict convexity of Lambda makes the saddle point theta* (the root of
Lambda') well defined; -Lambda(theta*) is the decay rate I of the upper
tail on the u^(tau-1) scale.  The refined tilt shifts theta* by the
finite-size drift mismatch eps_u, which is how the two polynomial
correction orders of the tail exponent are captured in one stroke.

Every integral here is assembled from three pieces: a weighted rule on
(0, 1] that absorbs the known power at the origin, an exponential-decay
panel chain on [1, inf) for the part of the integrand that actually
decays, and a closed form for the polynomial part that does not.  That
split is what keeps the root residuals near machine precision; a single
adaptive pass over the whole half line loses five digits to the
cancellation between the growing and decaying parts of F.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import ConvergenceError, DomainError
from .model import _check_theta, _f_y, _z_y
from .numerics import (
    QuadratureSpec,
    find_root_increasing,
    integrate_decaying,
    integrate_semiline,
    integrate_tail,
    zeta_continued,
)

__all__ = [
    "RateSolution",
    "RefinedTilt",
    "RateFunction",
    "deriv_weights",
]

#: derivative orders supported by the closed-form integrand family
MAX_DERIV_ORDER = 6

#: below this decay rate the span-marching tail quadrature is pointless
_MIN_MARCH_RATE = 0.25


@dataclass(frozen=True)
class RateSolution:
    """Saddle point of the rate variational problem.

    ``big_I = -Lambda(theta_star)`` is the tail decay rate on the
    u^(tau-1) scale; ``lambda_pp_at_star`` is the curvature that controls
    the refined-tilt response to the drift mismatch.
    """

    theta_star: float
    big_I: float
    lambda_pp_at_star: float
    quad: QuadratureSpec


@dataclass(frozen=True)
class RefinedTilt:
    """Finite-size tilt theta*_u solving Lambda'(theta) = -eps_u.

    ``exponent`` is the full refined tail exponent
    u^(tau-1) * (Lambda(theta*_u) + theta*_u * eps_u), evaluated in one
    shot rather than as -I u^(tau-1) plus correction terms, so the three
    polynomial orders never meet in a cancelling subtraction.
    """

    u: float
    eps_u: float
    theta_star_u: float
    exponent: float


@lru_cache(maxsize=None)
def deriv_weights(r):
    """Integer weights (a_1..a_r) with d^r F/dtheta^r = y^r sum_i a_i B^i.

    B is the tilted jump probability; differentiating once more uses
    dB/dtheta = y B(1-B), which maps B^j to y(j B^j - j B^(j+1)) and gives
    the recursion a_{r+1,j} = j a_{r,j} - (j-1) a_{r,j-1} from the base
    (1, -1) at r = 2.  The weights sum to zero for every r, which is why
    the integrand decays at infinity despite B -> 1 there.
    """
    r = int(r)
    if not 2 <= r <= MAX_DERIV_ORDER:
        raise DomainError(
            f"closed-form theta-derivatives cover orders 2..{MAX_DERIV_ORDER}, "
            f"got {r}", where="rate.deriv_weights")
    if r == 2:
        return (1, -1)
    prev = deriv_weights(r - 1)

    def at(j):
        return prev[j - 1] if 1 <= j <= r - 1 else 0

    out = tuple(j * at(j) - (j - 1) * at(j - 1) for j in range(1, r + 1))
    assert sum(out) == 0
    return out


@lru_cache(maxsize=None)
def _deriv_weights_flipped(r):
    """The same polynomial written in powers of C = 1 - B.

    b_k = (-1)^k sum_i a_i binom(i, k); the constant term vanishes because
    the a's sum to zero, so the large-y evaluation is a polynomial in the
    exponentially small C with no cancellation against O(1) terms.
    """
    a = deriv_weights(r)
    out = []
    for k in range(1, r + 1):
        out.append((-1) ** k * sum(a[i - 1] * math.comb(i, k)
                                   for i in range(k, r + 1)))
    return tuple(out)


def _den(y, theta):
    # e^-(1+theta)y + (1 - e^-y): both addends positive, no cancellation
    return math.exp(-(1.0 + theta) * y) - math.expm1(-y)


def _B(y, theta):
    """Tilted probability that the jump at size y has fired by the horizon."""
    return -math.expm1(-y) / _den(y, theta)


def _C(y, theta):
    """1 - B, computed directly; exponentially small at large y."""
    return math.exp(-(1.0 + theta) * y) / _den(y, theta)


def _poly_in(x, weights):
    acc = 0.0
    for w in reversed(weights):
        acc = acc * x + w
    return acc * x


class RateFunction:
    """Lambda, its theta-derivatives, and the calibrated tilts for one model."""

    def __init__(self, params, quad=None):
        self.params = params
        self.quad = quad if quad is not None else QuadratureSpec()
        self._solution = None
        self._zeta_pair = None

    # -- zeta values entering the drift mismatch -------------------------

    def zetas(self):
        """(zeta(alpha), zeta(2 alpha)), computed once per instance."""
        if self._zeta_pair is None:
            a = self.params.alpha
            self._zeta_pair = (zeta_continued(a).value,
                               zeta_continued(2.0 * a).value)
        return self._zeta_pair

    # -- Lambda and derivatives ------------------------------------------

    def _tail_piece(self, fn, theta):
        rate = min(1.0, 1.0 + theta)
        if rate >= _MIN_MARCH_RATE:
            return integrate_decaying(fn, 1.0, rate, self.quad)
        return integrate_tail(fn, 1.0, self.quad)

    def lam(self, theta):
        """Lambda(theta); exactly zero at theta = 0."""
        _check_theta(theta, "rate.RateFunction.lam")
        if theta == 0.0:
            return 0.0
        tau = self.params.tau
        left = integrate_semiline(
            lambda y: _f_y(y, theta) * y ** (-tau), self.quad,
            upper=1.0, sing_exp_zero=3.0 - tau)
        decay = self._tail_piece(
            lambda y: math.log1p(_z_y(y, theta)) * y ** (-tau), theta)
        poly = theta / (tau - 2.0) - theta / (tau - 3.0)
        return (tau - 1.0) * (left + decay + poly)

    def lam_deriv(self, theta, r=1):
        """d^r Lambda / d theta^r for 1 <= r <= MAX_DERIV_ORDER."""
        _check_theta(theta, "rate.RateFunction.lam_deriv")
        r = int(r)
        if not 1 <= r <= MAX_DERIV_ORDER:
            raise DomainError(
                f"derivative order must lie in 1..{MAX_DERIV_ORDER}, got {r}",
                where="rate.RateFunction.lam_deriv")
        tau = self.params.tau

        if r == 1:
            # integrand (B - y) y^(1-tau): the -y removes the order-one part
            # of B at zero (leaving y^(3-tau)) and its integral over [1,inf)
            # is restored in closed form
            left = integrate_semiline(
                lambda y: (_B(y, theta) - y) * y ** (1.0 - tau), self.quad,
                upper=1.0, sing_exp_zero=3.0 - tau)
            decay = self._tail_piece(
                lambda y: -_C(y, theta) * y ** (1.0 - tau), theta)
            poly = 1.0 / (tau - 2.0) - 1.0 / (tau - 3.0)
            return (tau - 1.0) * (left + decay + poly)

        a = deriv_weights(r)
        b = _deriv_weights_flipped(r)

        def body(y):
            # the two polynomial forms are identical; pick whichever argument
            # is small so the leading term dominates instead of cancelling
            c = _C(y, theta)
            if c < 0.5:
                return _poly_in(c, b) * y ** (r - tau)
            return _poly_in(1.0 - c, a) * y ** (r - tau)

        left = integrate_semiline(body, self.quad, upper=1.0,
                                  sing_exp_zero=r + 1.0 - tau)
        decay = self._tail_piece(
            lambda y: _poly_in(_C(y, theta), b) * y ** (r - tau), theta)
        return (tau - 1.0) * (left + decay)

    # -- saddle point and refined tilt -----------------------------------

    def solve_theta_star(self, tol=1e-11):
        """Root of Lambda' and the derived (I, Lambda'') bundle, cached."""
        if self._solution is None:
            root = find_root_increasing(
                lambda th: self.lam_deriv(th, 1), 0.0, 1.0, tol=tol)
            big_i = -self.lam(root)
            curvature = self.lam_deriv(root, 2)
            if not (big_i > 0.0 and curvature > 0.0):
                raise ConvergenceError(
                    f"saddle point failed its sanity checks: I={big_i}, "
                    f"Lambda''={curvature}",
                    where="rate.RateFunction.solve_theta_star")
            self._solution = RateSolution(
                theta_star=root, big_I=big_i,
                lambda_pp_at_star=curvature, quad=self.quad)
        return self._solution

    def epsilon_u(self, u):
        """Drift mismatch eps_u = u^(2-tau) (zeta(a) + (beta~ + 1 - zeta(2a)) u)."""
        if not u > 0.0:
            raise DomainError("u must be positive",
                              where="rate.RateFunction.epsilon_u")
        za, z2a = self.zetas()
        p = self.params
        return u ** (2.0 - p.tau) * (za + (p.beta_tilde + 1.0 - z2a) * u)

    def solve_theta_star_u(self, u, tol=1e-11):
        """Refined tilt at horizon u: Lambda'(theta*_u) = -eps_u.

        Raises BracketError (from the root finder) when eps_u falls outside
        the range of -Lambda', i.e. when no tilt can match the mismatch.
        """
        eps = self.epsilon_u(u)
        sol = self.solve_theta_star(tol=tol)
        root = find_root_increasing(
            lambda th: self.lam_deriv(th, 1) + eps,
            -1.0 + 1e-8, sol.theta_star + 1.0, tol=tol)
        exponent = u ** (self.params.tau - 1.0) * (self.lam(root) + root * eps)
        return RefinedTilt(u=u, eps_u=eps, theta_star_u=root,
                           exponent=exponent)

    def kappa_leading(self):
        """Leading tail-exponent corrections (kappa_10, kappa_01).

        These multiply u and u^2 in the expansion of the refined exponent;
        they come from the linear response of the Legendre value to eps and
        carry one zeta factor each.
        """
        sol = self.solve_theta_star()
        za, z2a = self.zetas()
        th = sol.theta_star
        return th * za, th * (self.params.beta_tilde + 1.0 - z2a)

    def tail_probability_asymptotic(self, u, prefactor_d):
        """P(S_u > 0) ~ D u^(-(tau-1)/2) exp(refined exponent).

        The constant D is owned by the density layer (it carries the
        inverse square root of the shape variance at full overlap); it is
        passed in rather than imported to keep this module self-contained.
        """
        if not prefactor_d > 0.0:
            raise DomainError("prefactor D must be positive",
                              where="rate.RateFunction.tail_probability_asymptotic")
        tilt = self.solve_theta_star_u(u)
        p = self.params
        return prefactor_d * u ** (-(p.tau - 1.0) / 2.0) * math.exp(tilt.exponent)
