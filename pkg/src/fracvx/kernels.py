"""Approximate-inversion weight and second-kind kernels.

Every kernel used by the solver is split as ``reg(s, t) + log(s, t) ln(t - s)``
with both parts continuous up to the diagonal; :meth:`parts` returns the two
pieces (diagonal limits included) so product integration can absorb the
logarithm exactly.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, QuadratureFailure, RegimeError
from .exponent import divided_difference, power_term
from .quadrature import singular_rule
from .specialfn import beta_fn, digamma, rgamma


class Method(enum.Enum):
    ANALYTIC = "Analytic"
    Z_QUADRATURE = "ZQuadrature"
    FINITE_DIFFERENCE = "FiniteDifference"


@dataclass(frozen=True)
class KernelEval:
    value: object
    log_singular_part: object
    method: Method


def _arr(x):
    return np.asarray(x, dtype=float)


def _pack(x, like):
    return float(np.ravel(x)[0]) if np.ndim(like) == 0 else x


def _check_open_triangle(s, t):
    s = _arr(s)
    if np.any(s < 0) or np.any(s >= t):
        raise DomainError("kernel requires 0 <= s < t (the diagonal is handled by product weights)")


def gamma_weight(e, t):
    """``Gamma(alpha(t)) Gamma(1 - alpha(t)) = pi / sin(pi alpha(t))``."""
    a = _arr(e(t))
    if np.any(a >= 1.0) or np.any(a <= 0.0):
        raise RegimeError("gamma weight diverges where alpha reaches 0 or 1")
    return _pack(np.pi / np.sin(np.pi * a), t)


# --------------------------------------------------------------------------
# Split kernels


class KernelK:
    """``K(s,t) = d/dt [B(alpha(t), 1-alpha(s)) (t-s)**(alpha(t)-alpha(s))]``."""

    name = "K"

    def __init__(self, e):
        self.e = e

    def parts(self, s, t):
        e = self.e
        s = _arr(s)
        jt = e.jet(t)
        a_t = jt.v
        a_s = _arr(e(s))
        diff = a_t - a_s
        bv = beta_fn(a_t + 0.0 * s, 1.0 - a_s)
        p = power_term(e, s, t)
        slope = divided_difference(e, s, t)
        db = jt.d1 * bv * (digamma(a_t + 0.0 * s) - digamma(1.0 + diff))
        reg = db * p + bv * p * slope
        lg = jt.d1 * bv * p
        return reg, lg


class KernelRL:
    """``d/dt [(t-y)**(alpha(t)-alpha(y)) / Gamma(1 + alpha(t) - alpha(y))]``."""

    name = "RL"

    def __init__(self, e):
        self.e = e

    def parts(self, s, t):
        e = self.e
        s = _arr(s)
        jt = e.jet(t)
        diff = jt.v - _arr(e(s))
        g = rgamma(1.0 + diff)
        p = power_term(e, s, t)
        slope = divided_difference(e, s, t)
        reg = p * g * (slope - jt.d1 * digamma(1.0 + diff))
        lg = jt.d1 * p * g
        return reg, lg


class KernelL:
    """``L(s,t) = d/dt int_0^1 (1-z)**(alpha(u)-1) z**(-alpha(u)) dz``, ``u = (t-s)z + s``.

    Evaluated by differentiating under the integral; the chain-rule factor
    ``z`` from ``d/dt alpha(u)`` is included.  Bounded, so the log part is 0.
    """

    name = "L"

    def __init__(self, e, n_z=16, tol=1e-10):
        self.e = e
        self.n_z = n_z
        self.tol = tol

    def values(self, s, t, n_z=None, levels=40):
        n = self.n_z if n_z is None else n_z
        e = self.e
        s = np.atleast_1d(_arr(s))
        a_s = _arr(e(s))
        a_t = e(t)
        wa = a_s - 1.0
        wb = 1.0 - a_t + 0.0 * s
        x = (t - s)[:, None]
        total = np.zeros(s.shape)
        for log_a, log_b, sign in ((False, True, 1.0), (True, False, -1.0)):
            da, db, w = singular_rule(np.ones_like(s), wa, wb, log_a, log_b, n, levels)
            u = np.where(da < db, s[:, None] + x * da, t - x * db)
            ju = e.jet(u)
            phi = ju.d1 * np.exp((a_s[:, None] - ju.v) * np.log(da)
                                 + (ju.v - a_t) * np.log(db))
            total += sign * np.sum(w * phi, axis=1)
        return total

    def checked_values(self, s, t):
        v1 = self.values(s, t)
        v2 = self.values(s, t, n_z=self.n_z + 8, levels=55)
        if np.max(np.abs(v1 - v2)) > self.tol:
            raise QuadratureFailure("z-quadrature for kernel L did not converge")
        return v2

    def parts(self, s, t):
        v = self.values(s, t)
        return v, np.zeros_like(v)


class ZeroKernel:
    name = "zero"

    def parts(self, s, t):
        z = np.zeros(np.shape(s))
        return z, z


class SplitKernel:
    """User kernel given as two callables ``reg(s, t)`` and ``log(s, t)``."""

    name = "custom"

    def __init__(self, reg, log=None):
        self.reg = reg
        self.log = log

    def parts(self, s, t):
        s = _arr(s)
        reg = _arr(self.reg(s, t)) + 0.0 * s
        lg = _arr(self.log(s, t)) + 0.0 * s if self.log is not None else np.zeros_like(s)
        return reg, lg


def _combine(kernel, s, t, method):
    reg, lg = kernel.parts(s, t)
    x = t - _arr(s)
    val = reg + lg * np.log(x)
    return KernelEval(_pack(val, s), _pack(lg, s), method)


# --------------------------------------------------------------------------
# Public evaluators


def _k_primitive(e, s, t):
    return beta_fn(e(t) + 0.0 * _arr(s), 1.0 - _arr(e(s))) * power_term(e, s, t)


def _rl_primitive(e, s, t):
    return power_term(e, s, t) * rgamma(1.0 + e(t) - _arr(e(s)))


def _fd_in_t(prim, e, s, t, step=1e-5):
    """Richardson-extrapolated central difference in ``t`` (order 4)."""
    h = min(step, 0.25 * float(np.min(t - _arr(s))))

    def d(hh):
        return (prim(e, s, t + hh) - prim(e, s, t - hh)) / (2 * hh)

    return (4 * d(h / 2) - d(h)) / 3


def kernel_K(e, s, t, method="analytic"):
    """Kernel of ``D-hat applied to I`` (analytic digamma form, or ``method="fd"``)."""
    _check_open_triangle(s, t)
    if method == "fd":
        val = _fd_in_t(_k_primitive, e, s, t)
        return KernelEval(_pack(val, s), _pack(0.0 * val, s), Method.FINITE_DIFFERENCE)
    return _combine(KernelK(e), s, t, Method.ANALYTIC)


def kernel_RL(e, y, t, method="analytic"):
    """Kernel of the variable-exponent R-L second-kind equation."""
    _check_open_triangle(y, t)
    if method == "fd":
        val = _fd_in_t(_rl_primitive, e, y, t)
        return KernelEval(_pack(val, y), _pack(0.0 * val, y), Method.FINITE_DIFFERENCE)
    return _combine(KernelRL(e), y, t, Method.ANALYTIC)


def kernel_L(e, s, t, n_z=16, tol=1e-10):
    """Kernel of ``D applied to I-hat`` by graded z-quadrature.

    Raises :class:`QuadratureFailure` when refining the z-rule changes the
    value by more than ``tol``.
    """
    if n_z < 4:
        raise DomainError("n_z must be at least 4")
    _check_open_triangle(s, t)
    vals = KernelL(e, n_z, tol).checked_values(s, t)
    return KernelEval(_pack(vals, s), _pack(0.0 * vals, s),
                      Method.Z_QUADRATURE)


def l_primitive(e, s, t, n=16, levels=40):
    """``int_0^1 (1-z)**(alpha(u)-1) z**(-alpha(u)) dz``; its t-derivative is ``L``."""
    s = np.atleast_1d(_arr(s))
    a_s = _arr(e(s))
    a_t = e(t)
    da, db, w = singular_rule(np.ones_like(s), a_s, 1.0 - a_t + 0.0 * s, n=n, levels=levels)
    x = (t - s)[:, None]
    u = np.where(da < db, s[:, None] + x * da, t - x * db)
    au = _arr(e(u))
    phi = np.exp((a_s[:, None] - au) * np.log(da) + (au - a_t) * np.log(db))
    return np.sum(w * phi, axis=1)


def _m_integrand(alpha2, y, t, da, db):
    """Pieces of the integrand defining ``M(y, t)`` on the z-rule nodes."""
    x = t - y
    u = np.where(da < db, y + x * da, t - x * db)
    a_ut = alpha2(u, t)
    a_uy = alpha2(u, y)
    wa = 1.0 - alpha2(y, y)
    wb = alpha2(t, t)
    log_phi = ((a_uy - 1.0 + wa) * np.log(da) + (wb - a_ut) * np.log(db)
               + (a_uy - a_ut) * np.log(x))
    phi = np.exp(log_phi) * rgamma(1.0 - a_ut) * rgamma(a_uy)
    return u, a_ut, a_uy, phi


def kernel_M(alpha2, y, t, n=16, levels=40):
    """``M(y, t)`` of the general two-variable R-L composition."""
    wa = 1.0 - float(alpha2(y, y))
    wb = float(alpha2(t, t))
    da, db, w = singular_rule(1.0, wa, wb, n=n, levels=levels)
    _, _, _, phi = _m_integrand(alpha2, y, t, da, db)
    return float(np.dot(w, phi))


def _m_dt(alpha2, y, t, n, levels):
    wa = 1.0 - float(alpha2(y, y))
    wb = float(alpha2(t, t))
    x = t - y
    value = 0.0
    log_part = 0.0
    for log_b in (False, True):
        da, db, w = singular_rule(1.0, wa, wb, log_b=log_b, n=n, levels=levels)
        u, a_ut, a_uy, phi = _m_integrand(alpha2, y, t, da, db)
        dt_ut = alpha2.partial_first(u, t) * da + alpha2.partial_second(u, t)
        dt_uy = alpha2.partial_first(u, y) * da
        if log_b:
            value += np.dot(w, phi * (-dt_ut))
            continue
        coef_log = dt_uy - dt_ut
        rest = ((a_uy - a_ut) / x + dt_uy * np.log(da)
                + digamma(1.0 - a_ut) * dt_ut - digamma(a_uy) * dt_uy)
        lp = float(np.dot(w, phi * coef_log))
        log_part += lp
        value += np.dot(w, phi * rest) + lp * np.log(x)
    return float(value), float(log_part)


def kernel_M_dt(alpha2, y, t, n_z=16, tol=1e-9):
    """``d/dt M(y, t)`` by differentiation under the z-integral."""
    if n_z < 4:
        raise DomainError("n_z must be at least 4")
    if not 0 <= y < t:
        raise DomainError("kernel requires 0 <= y < t")
    v1, l1 = _m_dt(alpha2, y, t, n_z, 30)
    v2, l2 = _m_dt(alpha2, y, t, n_z + 8, 45)
    if abs(v1 - v2) > tol * max(1.0, abs(v2)):
        raise QuadratureFailure("z-quadrature for kernel M did not converge")
    return KernelEval(v2, l2, Method.Z_QUADRATURE)


def make_kernel(name, e, **kwargs):
    """Kernel selector used by the solvers: ``"K"``, ``"L"``, ``"RL"`` or ``"zero"``."""
    if not isinstance(name, str):
        return name
    table = {"K": KernelK, "L": KernelL, "RL": KernelRL}
    if name == "zero":
        return ZeroKernel()
    try:
        return table[name](e, **kwargs)
    except KeyError:
        raise DomainError(f"unknown kernel {name!r}") from None
