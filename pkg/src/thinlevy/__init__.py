"""Large-deviation toolkit for the power-law thinned Lévy process.

The package computes the tail asymptotics of the process
S_t = 1 + beta~*t + sum_i c_i(1{T_i <= t} - c_i t), c_i = i^(-alpha),
through five coordinated layers: exact truncated summation of the
log-moment-generating function, the limiting rate function and its tilt,
moments and shape functions under the exponentially tilted measure,
Fourier inversion of the tilted density near zero, and importance-sampled
Monte Carlo that validates all of the above.
"""

__version__ = "0.1.0"
