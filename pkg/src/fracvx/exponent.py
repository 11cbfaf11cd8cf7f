"""Variable exponents: validation, regime classification, power terms."""

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NotSmooth, RangeViolation
from .funclang import Jet2, ScalarFunc, parse_expr

ONE_TOL = 1e-12
DEFAULT_VALIDATION_NODES = 10000


class Regime(enum.Enum):
    INTERIOR_RANGE = "InteriorRange"        # 0 < alpha < 1 on [0, T]
    TOUCHES_ONE_AT_ZERO = "TouchesOneAtZero"  # alpha(0) = 1, 0 < alpha < 1 on (0, T]
    VANISHES_AT_ZERO = "VanishesAtZero"      # alpha(0) = 0; R-L integrals only


@dataclass(frozen=True)
class VariableExponent:
    """A validated exponent ``alpha(t)`` on ``[0, T]``.

    ``alpha_lo``/``alpha_hi`` are sampled bounds, used for diagnostics and
    quadrature margins only.
    """

    alpha: ScalarFunc
    horizon_T: float
    alpha_lo: float
    alpha_hi: float
    regime: Regime

    def __call__(self, t):
        return self.alpha(t)

    def jet(self, t) -> Jet2:
        return self.alpha.jet(t)

    def d1(self, t):
        return self.alpha.jet(t).d1

    @property
    def alpha0(self) -> float:
        return self.alpha(0.0)

    @property
    def is_constant(self) -> bool:
        return self.alpha.is_constant

    def complement(self) -> "VariableExponent":
        """The exponent ``1 - alpha(t)``."""
        return make_exponent(
            parse_expr(f"1 - ({self.alpha.source})"), self.horizon_T, allow_zero_at_origin=True
        )


def make_exponent(alpha, T, n_validation=DEFAULT_VALIDATION_NODES, allow_zero_at_origin=False):
    """Validate ``alpha`` on ``[0, T]`` and classify its regime.

    Parameters
    ----------
    alpha : ScalarFunc or str
        The exponent; strings are parsed.
    T : float
        Horizon.
    n_validation : int
        Number of equispaced validation nodes (endpoints included).
    allow_zero_at_origin : bool
        Accept ``alpha(0) = 0`` (regime ``VanishesAtZero``), admissible for
        the Riemann-Liouville families but not for Abel operators.

    Raises
    ------
    RangeViolation
        ``alpha`` leaves ``(0, 1)`` on ``(0, T]`` or ``alpha(0)`` is not in ``(0, 1]``.
    NotSmooth
        Jet evaluation fails somewhere on the grid.
    """
    if isinstance(alpha, str):
        alpha = parse_expr(alpha)
    T = float(T)
    if not T > 0:
        raise RangeViolation("horizon T must be positive")
    grid = np.linspace(0.0, T, int(n_validation) + 1)
    try:
        jets = alpha.jet(grid)
    except DomainError as exc:
        raise NotSmooth(f"exponent not differentiable on [0, T]: {exc}") from exc
    vals = np.asarray(jets.v)
    if not np.all(np.isfinite(vals) & np.isfinite(jets.d1) & np.isfinite(jets.d2)):
        raise NotSmooth("exponent jets are not finite on [0, T]")
    a0 = vals[0]
    inner = vals[1:]
    if np.any(inner <= 0.0) or np.any(inner >= 1.0):
        bad = grid[1:][(inner <= 0.0) | (inner >= 1.0)][0]
        raise RangeViolation(f"alpha leaves (0, 1) at t = {bad:.6g}")
    if abs(a0 - 1.0) <= ONE_TOL:
        regime = Regime.TOUCHES_ONE_AT_ZERO
    elif 0.0 < a0 < 1.0:
        regime = Regime.INTERIOR_RANGE
    elif a0 == 0.0 and allow_zero_at_origin:
        regime = Regime.VANISHES_AT_ZERO
    else:
        raise RangeViolation(f"alpha(0) = {a0:.15g} is not in (0, 1]")
    return VariableExponent(alpha, T, float(vals.min()), float(vals.max()), regime)


def divided_difference(e, s, t):
    """``(alpha(t) - alpha(s)) / (t - s)`` with a Taylor branch near the diagonal."""
    s = np.asarray(s, dtype=float)
    x = t - s
    jt = e.jet(t)
    near = x < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        far = (e(t) - e(s)) / np.where(near, 1.0, x)
    return np.where(near, jt.d1 - 0.5 * jt.d2 * x, far)


def power_term(e, s, t):
    """``(t - s) ** (alpha(t) - alpha(s))``, equal to 1 on the diagonal."""
    s_arr = np.asarray(s, dtype=float)
    x = t - s_arr
    if np.any(x < 0):
        raise DomainError("power_term requires s <= t")
    diff = e(t) - e(s_arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.exp(diff * np.log(np.where(x > 0, x, 1.0)))
    val = np.where(x > 0, val, 1.0)
    return float(val) if np.ndim(s) == 0 else val


@dataclass(frozen=True)
class TwoVariableExponent:
    """Exponent ``alpha(a, b)`` of two time arguments, supplied programmatically.

    ``d_first``/``d_second`` are partial derivatives in the first and second
    argument; when omitted they are approximated by central differences.
    """

    func: Callable
    d_first: Optional[Callable] = None
    d_second: Optional[Callable] = None
    fd_step: float = 1e-6

    def __call__(self, a, b):
        return np.asarray(self.func(a, b), dtype=float)

    def partial_first(self, a, b):
        if self.d_first is not None:
            return np.asarray(self.d_first(a, b), dtype=float) + 0.0 * np.asarray(a)
        h = self.fd_step
        return (self(np.asarray(a) + h, b) - self(np.asarray(a) - h, b)) / (2 * h)

    def partial_second(self, a, b):
        if self.d_second is not None:
            return np.asarray(self.d_second(a, b), dtype=float) + 0.0 * np.asarray(b)
        h = self.fd_step
        return (self(a, np.asarray(b) + h) - self(a, np.asarray(b) - h)) / (2 * h)
