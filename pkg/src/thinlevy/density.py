"""Characteristic function under the tilt and Fourier inversion.

The tilted process at time t is a sum of independent two-point variables
(each indicator fires or not) plus a deterministic part, so its
characteristic function is an explicit product.  On the u^(-(tau-3)/2)
scale that product decays in frequency like exp(-c k^(tau-2)), fast
enough that Gauss-Legendre panels on a short symmetric window invert it
to a density.  The same machinery yields the tail-prefactor constants:
B = (2 pi I_V(1))^(-1/2) for the density at zero and D = B/theta* for
the original tail probability.
"""

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .model import TruncationPolicy, index_tail_sum
from .numerics import QuadratureSpec, _legendre_rule
from .rate import RateFunction
from .tilt import _resolve_theta, shape_iv, tilted_p

__all__ = [
    "InversionSpec",
    "char_fn_tilted",
    "char_fn_modulus",
    "calibrate_inversion",
    "density_tilted",
    "density_grid",
    "constants_B_D",
]


@dataclass(frozen=True)
class InversionSpec:
    """Frequency truncation and node budget for the inversion window."""

    k_max: float
    n_nodes: int
    decay_c: float

    def __post_init__(self):
        if not self.k_max > 0.0:
            raise DomainError("k_max must be positive",
                              where="density.InversionSpec")
        if self.n_nodes < 16:
            raise DomainError("n_nodes must be at least 16",
                              where="density.InversionSpec")
        if not self.decay_c > 0.0:
            raise DomainError("decay_c must be positive",
                              where="density.InversionSpec")

    def tail_bound(self, tau):
        """The certified bound on the discarded |k| > k_max mass."""
        return math.exp(-self.decay_c * self.k_max ** (tau - 2.0))

    def certify(self, tau, tol):
        b = self.tail_bound(tau)
        if b > tol:
            raise ConvergenceError(
                f"frequency window k_max={self.k_max} leaves tail bound "
                f"{b:.3e} above the requested {tol:.3e}",
                where="density.InversionSpec")


def _check_window(t, u, where):
    if not u > 0.0:
        raise DomainError("u must be positive", where=where)
    if not 0.0 <= t <= u:
        raise DomainError(f"need 0 <= t <= u, got t={t}, u={u}", where=where)
    if t < 0.5 * u:
        warnings.warn(
            f"t={t} lies below u/2={0.5 * u}: outside the proven window, "
            "results are extrapolation", RuntimeWarning, stacklevel=3)


def char_fn_tilted(k, t, u, tilt, params, trunc=None, quad=None):
    """E[exp(2 pi i k u^(-(tau-3)/2) S_t)] under the tilt at horizon u.

    Per indicator the factor (1 + p_j (e^{i w c_j} - 1)) e^{-i w c_j^2 t}
    is kept as one unit; split apart, neither the phases nor the
    centering sum converges.  The head is summed as complex logs, the
    index tail is certified separately for the real and imaginary parts.
    """
    _check_window(t, u, "density.char_fn_tilted")
    theta = float(_resolve_theta(tilt))
    a = t / u
    gamma = 0.5 * (params.tau - 3.0)
    omega = 2.0 * math.pi * k * u ** (-gamma)
    if omega == 0.0:
        return complex(1.0, 0.0)
    trunc = trunc if trunc is not None else TruncationPolicy()
    quad = quad if quad is not None else QuadratureSpec()

    n_cut = trunc.n_terms(u, params)
    idx = np.arange(2, n_cut + 1, dtype=np.float64)
    y = u * idx ** (-params.alpha)
    c = y / u
    p = tilted_p(y, a, theta)
    factor = (1.0 + p * (np.exp(1j * omega * c) - 1.0)) * np.exp(
        -1j * omega * c * c * t)
    logs = np.log(factor)
    head_re = math.fsum(logs.real.tolist())
    head_im = math.fsum(logs.imag.tolist())

    def log_factor(yv):
        cv = yv / u
        pv = tilted_p(yv, a, theta)
        return cmath.log((1.0 + pv * (cmath.exp(1j * omega * cv) - 1.0))
                         * cmath.exp(-1j * omega * cv * cv * t))

    tail_re, _ = index_tail_sum(lambda yv: log_factor(yv).real, u, n_cut,
                                params, quad, g_zero_power=3.0)
    tail_im, _ = index_tail_sum(lambda yv: log_factor(yv).imag, u, n_cut,
                                params, quad, g_zero_power=3.0)
    total = complex(head_re + tail_re, head_im + tail_im)
    total += 1j * omega * (1.0 + params.beta_tilde * t)
    return cmath.exp(total)


def char_fn_modulus(k, t, u, tilt, params, trunc=None, quad=None):
    """|char_fn_tilted| through the real closed form of each factor.

    |1 + p(e^{i w c} - 1)|^2 = 1 - 2 p (1-p)(1 - cos(w c)); the phases
    drop out, so this is cheaper and exact for calibrating the frequency
    decay.
    """
    _check_window(t, u, "density.char_fn_modulus")
    theta = float(_resolve_theta(tilt))
    a = t / u
    gamma = 0.5 * (params.tau - 3.0)
    omega = 2.0 * math.pi * k * u ** (-gamma)
    if omega == 0.0:
        return 1.0
    trunc = trunc if trunc is not None else TruncationPolicy()
    quad = quad if quad is not None else QuadratureSpec()

    n_cut = trunc.n_terms(u, params)
    idx = np.arange(2, n_cut + 1, dtype=np.float64)
    y = u * idx ** (-params.alpha)
    p = tilted_p(y, a, theta)
    head = 0.5 * math.fsum(
        np.log1p(-2.0 * p * (1.0 - p) * (1.0 - np.cos(omega * y / u)))
        .tolist())

    def g(yv):
        pv = tilted_p(yv, a, theta)
        return 0.5 * math.log1p(-2.0 * pv * (1.0 - pv)
                                * (1.0 - math.cos(omega * yv / u)))

    tail, _ = index_tail_sum(g, u, n_cut, params, quad, g_zero_power=3.0)
    return math.exp(head + tail)


def calibrate_inversion(t, u, tilt, params, trunc=None, tail_tol=1e-10,
                        nodes_per_unit=48):
    """Measure the frequency decay at k=1 and size the window from it.

    The decay exponent c in exp(-c k^(tau-2)) is read off one modulus
    evaluation; k_max then solves the tail bound against tail_tol.
    """
    if not 0.0 < tail_tol < 1.0:
        raise DomainError("tail_tol must lie in (0,1)",
                          where="density.calibrate_inversion")
    r1 = char_fn_modulus(1.0, t, u, tilt, params, trunc)
    if not 0.0 < r1 < 1.0:
        raise ConvergenceError(
            f"modulus at k=1 is {r1}; cannot calibrate a decay rate",
            where="density.calibrate_inversion")
    decay_c = -math.log(r1)
    k_max = (-math.log(tail_tol) / decay_c) ** (1.0 / (params.tau - 2.0))
    n_nodes = max(64, int(math.ceil(2.0 * k_max * nodes_per_unit)))
    return InversionSpec(k_max=k_max, n_nodes=n_nodes, decay_c=decay_c)


def density_grid(s_values, t, u, tilt, params, trunc=None, inv=None,
                 quad=None, tail_tol=1e-10):
    """Tilted density of S_t on a grid of points, one node sweep.

    The characteristic function is evaluated once per frequency node and
    reused for every requested s; for a single point this degenerates to
    plain inversion.  Returns (densities, imaginary_residue).
    """
    _check_window(t, u, "density.density_tilted")
    s_arr = np.asarray(s_values, dtype=np.float64)
    if inv is None:
        inv = calibrate_inversion(t, u, tilt, params, trunc,
                                  tail_tol=tail_tol)
    inv.certify(params.tau, tail_tol)
    gamma = 0.5 * (params.tau - 3.0)
    z = s_arr * u ** (-gamma)

    # panels sized so Gauss-Legendre comfortably resolves theس
    # oscillation 2 pi k z of the farthest requested point
    z_max = float(np.max(np.abs(z))) if z.size else 0.0
    width = min(1.0, 8.0 / max(1.0, z_max))
    n_panels = int(math.ceil(2.0 * inv.k_max / width))
    order = max(16, int(math.ceil(inv.n_nodes / n_panels)))
    nodes, weights = _legendre_rule(order)

    edges = np.linspace(-inv.k_max, inv.k_max, n_panels + 1)
    total = np.zeros(z.shape, dtype=np.complex128)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        ks = mid + half * nodes
        phis = np.array([char_fn_tilted(kv, t, u, tilt, params, trunc, quad)
                         for kv in ks])
        # e^{-2 pi i k z} against each requested point
        osc = np.exp(-2j * math.pi * np.outer(z, ks))
        total += half * (osc * (weights * phis)) @ np.ones(order)
    total *= u ** (-gamma)
    residue = float(np.max(np.abs(total.imag))) if total.size else 0.0
    return total.real, residue


def density_tilted(s, t, u, tilt, params, trunc=None, inv=None, quad=None,
                   tail_tol=1e-10):
    """Tilted density of S_t at the point s, by Fourier inversion."""
    vals, residue = density_grid([s], t, u, tilt, params, trunc, inv, quad,
                                 tail_tol)
    if residue > 1e-8:
        raise ConvergenceError(
            f"imaginary residue {residue:.3e} after symmetric inversion",
            where="density.density_tilted")
    return float(vals[0])


def constants_B_D(params, quad=None):
    """(B, D): density-at-zero and tail-probability prefactor constants.

    B = (2 pi I_V(1))^(-1/2) evaluated at the saddle point; D = B/theta*.
    """
    rf = RateFunction(params, quad)
    sol = rf.solve_theta_star()
    iv1 = shape_iv(1.0, sol.theta_star, params, quad)
    if not iv1 > 0.0:
        raise ConvergenceError(f"variance shape I_V(1) = {iv1}",
                               where="density.constants_B_D")
    b = 1.0 / math.sqrt(2.0 * math.pi * iv1)
    return b, b / sol.theta_star
