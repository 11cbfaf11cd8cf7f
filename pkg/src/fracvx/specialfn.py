"""Gamma, log-Gamma, Beta and digamma on the positive axis.

Gamma and log-Gamma delegate to :mod:`scipy.special`; digamma is computed
here by upward recurrence followed by the Stirling-type asymptotic series.
All functions accept scalars or numpy arrays.
"""

import numpy as np
from scipy import special as _sp

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061

# B_{2k} / (2k) for k = 1..8
_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)
_SHIFT = 10.0


def _positive(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} requires positive arguments")
    return arr


def _out(arr, like=None):
    return float(arr) if np.ndim(arr) == 0 else arr


def gamma_fn(x):
    """Gamma function for ``x > 0``."""
    arr = _positive(x, "gamma_fn")
    return _out(_sp.gamma(arr), x)


def lgamma_fn(x):
    """Natural log of the Gamma function for ``x > 0``."""
    arr = _positive(x, "lgamma_fn")
    return _out(_sp.gammaln(arr), x)


def rgamma(x):
    """Reciprocal Gamma ``1/Gamma(x)``; entire, so any real argument is accepted."""
    return _out(_sp.rgamma(np.asarray(x, dtype=float)), x)


def beta_fn(a, b):
    """Beta function ``B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)``.

    Evaluated through log-Gamma so large arguments do not overflow.
    """
    aa = _positive(a, "beta_fn")
    bb = _positive(b, "beta_fn")
    val = np.exp(_sp.gammaln(aa) + _sp.gammaln(bb) - _sp.gammaln(aa + bb))
    return _out(val)


def digamma(x):
    """Digamma ``psi(x) = d/dx ln Gamma(x)`` for ``x > 0``.

    Shifts the argument above 10 with ``psi(x) = psi(x + 1) - 1/x`` and then
    sums the asymptotic expansion in ``1/x**2``.
    """
    arr = _positive(x, "digamma")
    z = np.array(arr, dtype=float, copy=True)
    acc = np.zeros_like(z)
    small = z < _SHIFT
    while np.any(small):
        acc[small] -= 1.0 / z[small]
        z[small] += 1.0
        small = z < _SHIFT
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    for c in reversed(_ASYMPTOTIC):
        series = (series + c) * inv2
    val = acc + np.log(z) - 0.5 / z - series
    return _out(val, x)
