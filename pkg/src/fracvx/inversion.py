"""Right-hand-side transforms and numerical checks of the composition identities."""

import enum

import numpy as np

from .errors import DomainError, QuadratureFailure, RegimeError
from .exponent import Regime
from .kernels import KernelK, KernelL, gamma_weight
from .operators import Family, OperatorSpec, eval_forward_batch
from .quadrature import product_weights, singular_rule
from .specialfn import digamma, rgamma

SMALL_T = 1e-14
_SETTINGS = [(10, 16, 0), (16, 24, 1), (24, 34, 3), (32, 48, 7)]


class Antiderivative:
    """``H(x) = int_0^x h`` by a fixed graded rule; ``deriv`` returns ``h``."""

    def __init__(self, h, n=12, levels=25):
        self.h = h
        self._z, _, self._w = singular_rule(1.0, n=n, levels=levels)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vals = self.h(x[..., None] * self._z)
        out = x * np.sum(vals * self._w, axis=-1)
        return float(out) if out.ndim == 0 else out

    def deriv(self, x):
        return self.h(x)


def _weighted_sums(t, wa, plain, logged, tol, wb=0.0):
    """``int_0^t F(t - s) s**(-wa) (t-s)**(-wb) [ln s] ds`` for each ``F``.

    ``plain`` functions get no logarithm, ``logged`` ones get ``ln s``.  All
    functions share the quadrature nodes.  The rules converge geometrically,
    so the finer of two successive rules is accepted once their difference
    is below ``sqrt(tol) * max(1, |value|)``; its own error is then of order
    the squared difference.
    """
    prev = None
    for n, levels, n_mid in _SETTINGS:
        da, db, w0 = singular_rule(t, wa, wb, n=n, levels=levels, n_mid=n_mid)
        _, _, wl = singular_rule(t, wa, wb, log_a=True, n=n, levels=levels, n_mid=n_mid)
        cache = {}

        def at(F):
            if id(F) not in cache:
                cache[id(F)] = np.asarray(F(db), dtype=float)
            return cache[id(F)]

        cur = np.array([np.dot(w0, at(F)) for F in plain] + [np.dot(wl, at(F)) for F in logged])
        if not np.all(np.isfinite(cur)):
            raise QuadratureFailure("non-finite integrand value")
        if prev is not None and np.all(np.abs(cur - prev) <= np.sqrt(tol) * np.maximum(1.0, np.abs(cur))):
            return cur
        prev = cur
    raise QuadratureFailure(f"right-hand-side integrals did not reach tolerance {tol:g}")


def _check_range(e, t):
    if t < 0 or t > e.horizon_T * (1 + 1e-12):
        raise DomainError(f"t = {t} outside [0, T]")


def rhs_abel(e, f, t, tol=1e-11):
    """``D-hat^{alpha(t)} f`` at ``t``, differentiated under the integral sign.

    ``f`` must provide ``f(x)`` and ``f.deriv(x)``; an optional attribute
    ``deriv_endpoint_exponent`` (``beta`` with ``f'(y) ~ y**(-beta)`` as
    ``y -> 0``) lets the quadrature absorb that singularity.  Raises
    :class:`DomainError` at ``t = 0`` when ``f(0) != 0`` (the value is
    infinite there).
    """
    if e.regime is not Regime.INTERIOR_RANGE:
        raise RegimeError("the Abel transform needs 0 < alpha < 1 on [0, T]")
    _check_range(e, t)
    f0 = float(f(0.0))
    if t == 0:
        if f0 != 0:
            raise DomainError("D-hat f is infinite at t = 0 when f(0) != 0")
        return 0.0
    jt = e.jet(t)
    a = float(jt.v)
    a1 = float(jt.d1)
    # data may declare f'(y) ~ y**(-beta) at 0 so that the rule weights it exactly
    beta = float(getattr(f, "deriv_endpoint_exponent", 0.0))
    if beta:
        def dpart(y):
            return f.deriv(y) * np.exp(beta * np.log(y))
    else:
        dpart = f.deriv
    val = f0 * np.exp((a - 1.0) * np.log(t))
    val += _weighted_sums(t, 1.0 - a, [dpart], [], tol, wb=beta)[0]
    if a1 != 0:
        val += a1 * _weighted_sums(t, 1.0 - a, [], [f], tol)[0]
    return float(val)


def rhs_fde(e, h, c0, t, H=None, tol=1e-11):
    """``D-hat^{1-alpha(t)}`` applied to ``int_0^t h + c0``.

    ``H`` is an antiderivative of ``h`` vanishing at 0 (built when omitted).
    Below ``t = 1e-14`` the value is replaced by its limit as ``t -> 0+``.
    """
    if e.regime is Regime.VANISHES_AT_ZERO:
        raise RegimeError("alpha(0) = 0 is not admissible here")
    _check_range(e, t)
    if t < SMALL_T:
        if e.regime is Regime.TOUCHES_ONE_AT_ZERO:
            return float(c0)
        if c0 != 0:
            raise DomainError("the c0 term is infinite at t = 0 when alpha(0) < 1")
        return 0.0
    if H is None:
        H = Antiderivative(h)
    jt = e.jet(t)
    a = float(jt.v)
    a1 = float(jt.d1)
    if a1 != 0:
        i_h, i_H, i_Hlog = _weighted_sums(t, 1.0 - a, [h, H], [H], tol)
        hpart = rgamma(a) * (i_h + a1 * i_Hlog - a1 * digamma(a) * i_H)
    else:
        hpart = rgamma(a) * _weighted_sums(t, 1.0 - a, [h], [], tol)[0]
    lt = np.log(t)
    ta = np.exp(a * lt)
    c0part = c0 * (np.exp((a - 1.0) * lt) * rgamma(a)
                   + a1 * ta * lt * rgamma(1.0 + a)
                   - a1 * ta * digamma(1.0 + a) * rgamma(1.0 + a))
    return float(hpart + c0part)


class Composition(enum.Enum):
    ABEL_LEFT_THEN_DHAT = "AbelLeftThenDhat"  # d/dt I-hat^{1-alpha} I^{alpha} g, kernel K
    ABEL_RIGHT_THEN_D = "AbelRightThenD"      # d/dt I^{1-alpha} I-hat^{alpha} g, kernel L


def _composition_specs(e, which):
    ec = e.complement()
    if which is Composition.ABEL_LEFT_THEN_DHAT:
        return OperatorSpec(Family.ABEL_RIGHT, ec), OperatorSpec(Family.ABEL_LEFT, e)
    return OperatorSpec(Family.ABEL_LEFT, ec), OperatorSpec(Family.ABEL_RIGHT, e)


def composition_value(e, g, ts, which, n=16, levels=8):
    """Undifferentiated composition (outer operator of order ``1 - alpha``) at ``ts``."""
    which = Composition(which)
    outer, inner = _composition_specs(e, which)

    def inner_vals(s):
        return eval_forward_batch(inner, g, np.ravel(s), n, levels).reshape(np.shape(s))

    return eval_forward_batch(outer, inner_vals, ts, n, levels)


def fd_derivative(func, t, step):
    """Richardson-extrapolated central difference of ``func`` (vectorised over points)."""
    pts = np.array([t - step, t + step, t - step / 2, t + step / 2])
    v = func(pts)
    d1 = (v[1] - v[0]) / (2 * step)
    d2 = (v[3] - v[2]) / step
    return (4 * d2 - d1) / 3


def compose_sides(e, g, mesh, which):
    """LHS (finite difference of the composition) and RHS at interior nodes."""
    if e.regime is not Regime.INTERIOR_RANGE:
        raise RegimeError("composition identities need 0 < alpha < 1 on [0, T]")
    which = Composition(which)
    kern = KernelK(e) if which is Composition.ABEL_LEFT_THEN_DHAT else KernelL(e)
    t = mesh.nodes
    gv = np.asarray(g(t), dtype=float) + 0.0 * t
    idx = np.arange(1, mesh.N)
    lhs = np.empty(idx.size)
    rhs = np.empty(idx.size)
    for k, i in enumerate(idx):
        ti = t[i]
        step = min(1e-3, ti / 4)
        lhs[k] = fd_derivative(lambda p: composition_value(e, g, p, which), ti, step)
        reg, lg = kern.parts(t[: i + 1], ti)
        a = product_weights(mesh, i, 0.0)[: i + 1]
        b = product_weights(mesh, i, 0.0, with_log=True)[: i + 1]
        rhs[k] = gamma_weight(e, ti) * gv[i] + np.dot(a * reg + b * lg, gv[: i + 1])
    return t[idx], lhs, rhs


def compose_residual(e, g, mesh, which):
    """``max |LHS - RHS|`` of a composition identity over interior nodes."""
    _, lhs, rhs = compose_sides(e, g, mesh, which)
    return float(np.max(np.abs(lhs - rhs)))
