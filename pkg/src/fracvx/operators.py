"""Forward evaluation of the variable-exponent integral operator families."""

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ParameterError
from .exponent import Regime, TwoVariableExponent, VariableExponent
from .quadrature import integrate, product_weights, singular_rule
from .specialfn import rgamma


class Family(enum.Enum):
    ABEL_LEFT = "AbelLeft"      # int g(s) (t-s)**(-alpha(s)) ds
    ABEL_RIGHT = "AbelRight"    # int g(s) (t-s)**(-alpha(t)) ds
    RL_LEFT = "RLLeft"          # int g(s) (t-s)**(alpha(s)-1) / Gamma(alpha(s)) ds
    RL_RIGHT = "RLRight"        # int g(s) (t-s)**(alpha(t)-1) / Gamma(alpha(t)) ds
    RL_GENERAL = "RLGeneral"    # exponent alpha(t, s)
    TEMPERED_LEFT = "TemperedLeft"
    TEMPERED_RIGHT = "TemperedRight"

    @property
    def is_tempered(self):
        return self in (Family.TEMPERED_LEFT, Family.TEMPERED_RIGHT)

    @property
    def is_abel(self):
        return self in (Family.ABEL_LEFT, Family.ABEL_RIGHT)

    @property
    def freezes_at_t(self):
        """Exponent evaluated at the outer time (right families)."""
        return self in (Family.ABEL_RIGHT, Family.RL_RIGHT, Family.TEMPERED_RIGHT)


@dataclass(frozen=True)
class OperatorSpec:
    family: Family
    exponent: Union[VariableExponent, TwoVariableExponent]
    sigma: float = 0.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if self.sigma < 0:
            raise ParameterError("sigma must be non-negative")
        if self.sigma != 0 and not fam.is_tempered:
            raise ParameterError("sigma is only meaningful for tempered families")
        if fam is Family.RL_GENERAL:
            if not isinstance(self.exponent, TwoVariableExponent):
                raise ParameterError("RLGeneral needs a two-variable exponent")
        elif not isinstance(self.exponent, VariableExponent):
            raise ParameterError("family needs a validated one-variable exponent")
        if fam.is_abel and self.exponent.regime is not Regime.INTERIOR_RANGE:
            raise ParameterError("Abel operators require 0 < alpha < 1 on [0, T]")


@dataclass(frozen=True)
class GridData:
    """Data given on nodes, interpolated piecewise linearly."""

    nodes: np.ndarray
    values: np.ndarray

    def __call__(self, s):
        return np.interp(s, self.nodes, self.values)


def as_function(g):
    if isinstance(g, tuple) and len(g) == 2:
        return GridData(np.asarray(g[0], float), np.asarray(g[1], float))
    if callable(g):
        return g
    raise ParameterError("g must be callable or a (nodes, values) pair")


def kernel_setup(spec, t):
    """Endpoint exponent ``wb`` at ``s = t`` and the bounded kernel factor.

    The operator kernel equals ``factor(s, x) * x**(-wb)`` with ``x = t - s``.
    ``t`` may be an array of shape ``(K, 1)`` for batched use.
    """
    fam = spec.family
    e = spec.exponent
    sig = spec.sigma
    if fam is Family.RL_GENERAL:
        a_tt = e(t, t)

        def factor(s, x):
            a_ts = e(t, s)
            return np.exp((a_ts - a_tt) * np.log(x)) * rgamma(a_ts)
        return 1.0 - a_tt, factor
    a_t = np.asarray(e(t), dtype=float)
    if fam is Family.ABEL_LEFT:
        return a_t, lambda s, x: np.exp((a_t - e(s)) * np.log(x))
    if fam is Family.ABEL_RIGHT:
        return a_t, lambda s, x: np.ones(np.broadcast(s, x).shape)
    if fam in (Family.RL_LEFT, Family.TEMPERED_LEFT):
        def factor(s, x):
            a_s = e(s)
            return np.exp((a_s - a_t) * np.log(x) - sig * x) * rgamma(a_s)
        return 1.0 - a_t, factor
    g_t = rgamma(a_t)
    return 1.0 - a_t, lambda s, x: g_t * np.exp(-sig * x)


def _check_t(spec, t):
    if t < 0:
        raise DomainError("t must be non-negative")
    T = getattr(spec.exponent, "horizon_T", None)
    if T is not None and t > T * (1 + 1e-12):
        raise DomainError(f"t = {t} beyond the horizon T = {T}")


def eval_forward(spec, g, t, accuracy=1e-10):
    """Apply the operator to ``g`` at time ``t`` by singular-endpoint quadrature.

    Parameters
    ----------
    spec : OperatorSpec
    g : callable or (nodes, values)
        Vectorised function of ``s``, or grid data (linear interpolation).
    t : float
    accuracy : float
        Absolute error target.

    Returns
    -------
    float
        0 at ``t = 0``.
    """
    _check_t(spec, t)
    if t == 0:
        return 0.0
    g = as_function(g)
    wb, factor = kernel_setup(spec, t)
    val, _ = integrate(lambda s, da, db: g(s) * factor(s, db), 0.0, t, wb=float(wb),
                       tol=accuracy)
    return val


def eval_forward_batch(spec, g, ts, n=12, levels=24, n_mid=0):
    """Fixed-rule forward evaluation at many times at once (no error control)."""
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(ts.shape)
    pos = ts > 0
    if not np.any(pos):
        return out
    tp = ts[pos]
    g = as_function(g)
    wb, factor = kernel_setup(spec, tp[:, None])
    da, db, w = singular_rule(tp, np.zeros_like(tp), np.ravel(wb) + 0.0 * tp,
                              n=n, levels=levels, n_mid=n_mid)
    out[pos] = np.sum(w * g(da) * factor(da, db), axis=1)
    return out


def eval_forward_grid(spec, mesh, g_values):
    """Product-integration forward evaluation on a graded mesh.

    Left families freeze ``alpha(s)`` at panel midpoints inside the panel
    moments; right families use ``alpha(t_i)`` exactly.
    """
    g_values = np.asarray(g_values, dtype=float)
    if g_values.shape != (mesh.N + 1,):
        raise ParameterError("g_values must have one entry per mesh node")
    if not np.all(np.isfinite(g_values)):
        raise ParameterError("g_values must be finite")
    fam = spec.family
    e = spec.exponent
    t = mesh.nodes
    mid = 0.5 * (t[1:] + t[:-1])
    out = np.zeros(mesh.N + 1)
    for i in range(1, mesh.N + 1):
        ti = t[i]
        vals = g_values
        if fam is Family.ABEL_LEFT:
            beta = e(mid)
        elif fam is Family.ABEL_RIGHT:
            beta = float(e(ti))
        elif fam in (Family.RL_LEFT, Family.TEMPERED_LEFT):
            beta = 1.0 - e(mid)
            vals = vals * rgamma(e(t))
        elif fam is Family.RL_GENERAL:
            beta = 1.0 - e(ti, mid)
            vals = vals * rgamma(e(ti, t))
        else:
            beta = 1.0 - float(e(ti))
            vals = vals * rgamma(e(ti))
        if fam.is_tempered:
            vals = vals * np.exp(-spec.sigma * (ti - t))
        w = product_weights(mesh, i, beta)
        out[i] = np.dot(w[: i + 1], vals[: i + 1])
    return out
