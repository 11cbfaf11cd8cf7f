"""Second-kind Volterra collocation and the Abel / variable-exponent FDE pipelines."""

import enum
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, IllConditioned, InvalidInitialValue, RegimeError
from .exponent import Regime, VariableExponent
from .inversion import Antiderivative, rhs_abel, rhs_fde
from .kernels import gamma_weight, make_kernel
from .quadrature import GradedMesh, panel_moments, product_weights
from .specialfn import digamma, gamma_fn

DIAG_TOL = 1e-8
LIMIT_T = 1e-100


class GammaMode(enum.Enum):
    GAMMA_WEIGHT = "GammaWeight"
    UNIT = "Unit"


@dataclass(frozen=True)
class AbelProblem:
    """First-kind equation ``int_0^t u(s) (t-s)**(-alpha(s)) ds = f(t)``."""

    exponent: VariableExponent
    f: object
    T: Optional[float] = None

    def __post_init__(self):
        if self.exponent.regime is not Regime.INTERIOR_RANGE:
            raise RegimeError("Abel problems need 0 < alpha < 1 on [0, T]")
        if self.T is None:
            object.__setattr__(self, "T", self.exponent.horizon_T)


@dataclass(frozen=True)
class FdeProblem:
    """``D^{alpha(t)} u = h`` with ``u(0) = u0``."""

    exponent: VariableExponent
    h: object
    u0: float = 0.0

    def __post_init__(self):
        reg = self.exponent.regime
        if reg is Regime.INTERIOR_RANGE and self.u0 != 0:
            raise InvalidInitialValue(
                "ill-posed: with 0 < alpha(0) < 1 the initial value must be 0 "
                f"(got u0 = {self.u0:g})")
        if reg is Regime.VANISHES_AT_ZERO:
            raise RegimeError("alpha(0) = 0 is not an admissible FDE exponent")

    @property
    def c0(self):
        return float(self.u0)


@dataclass
class SolutionGrid:
    mesh: GradedMesh
    u: np.ndarray
    weighted_u: np.ndarray
    du_estimate: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.mesh.N + 1
        for name in ("u", "weighted_u", "du_estimate"):
            if np.shape(getattr(self, name)) != (n,):
                raise ValueError(f"{name} must have one entry per mesh node")

    @property
    def t(self):
        return self.mesh.nodes

    def to_csv(self, dest=None):
        """Write ``t,u,weighted_u,du_estimate`` rows; returns the text when ``dest`` is None."""
        buf = io.StringIO()
        buf.write("t,u,weighted_u,du_estimate\n")
        for row in zip(self.t, self.u, self.weighted_u, self.du_estimate):
            buf.write(",".join("%.17g" % v for v in row) + "\n")
        text = buf.getvalue()
        if dest is None:
            return text
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w", newline="\n", encoding="ascii") as fh:
                fh.write(text)
        return text


def _quad_deriv(x, y, at):
    """Derivative at ``at`` of the quadratic through three points."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    return (y0 * (2 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2 * at - x0 - x1) / ((x2 - x0) * (x2 - x1)))


def du_estimate(t, u):
    """Second-order finite-difference derivative on the nodes.

    Node 0 is NaN, node 1 uses nodes 1-3 (one-sided, never touching the
    origin), interior nodes the centred quadratic, the last node a
    backward one-sided formula.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    n = t.size
    du = np.full(n, np.nan)
    if n < 4:
        return du
    du[1] = _quad_deriv(t[1:4], u[1:4], t[1])
    i = np.arange(2, n - 1)
    du[2:-1] = _quad_deriv((t[i - 1], t[i], t[i + 1]), (u[i - 1], u[i], u[i + 1]), t[i])
    du[-1] = _quad_deriv(t[-3:], u[-3:], t[-1])
    return du


def _log_moment_J(a):
    """``int_0^1 z**(a-1) ln(1-z) dz``."""
    return (digamma(1.0) - digamma(a + 1.0)) / a


def _first_panel(h0, p, ti_is_t1, k0, k1, lg0, lg1):
    """Weights on ``[0, t_1]`` for ``s**(-p) * k(s) * w(s)`` (``w`` linear).

    ``k0/k1`` are the full kernel values at the panel ends (log part already
    folded in), except at node ``i = 1``: there they are the regular parts
    only and the logarithm, singular at ``s = t_1``, is integrated exactly
    against ``s**(-p)``.
    """
    a = 1.0 - p
    hp = h0 ** a
    q0 = hp * (1.0 / a - 1.0 / (a + 1.0))
    q1 = hp / (a + 1.0)
    if not ti_is_t1:
        return q0 * k0, q1 * k1
    lh = np.log(h0)
    m0 = hp * (lh * (1.0 / a - 1.0 / (a + 1.0)) + _log_moment_J(a) - _log_moment_J(a + 1.0))
    m1 = hp * (lh / (a + 1.0) + _log_moment_J(a + 1.0))
    return q0 * k0 + m0 * lg0, q1 * k1 + m1 * lg1


def solve_vie2(e, mesh, rhs, kernel, gamma_mode=GammaMode.GAMMA_WEIGHT, weight_exponent=0.0):
    """Product-trapezoid collocation for a second-kind Volterra equation.

    Solves ``v(t) + c(t) int_0^t k(s, t) v(s) ds = g(t)`` at the mesh nodes
    with ``c = 1/gamma(t)`` (``GammaWeight``) or ``c = 1`` (``Unit``); the
    kernel's ``ln(t - s)`` part is integrated with exact log moments.

    With ``weight_exponent = p > 0`` the unknown is ``w = t**p v`` and
    ``rhs`` must hold ``t**p g(t)`` (its limit at node 0).  The first panel
    then integrates ``s**(-p)`` exactly.

    Returns the node values of ``v`` (``inf``/``nan`` at node 0 when
    ``p > 0`` and ``w(0) != 0``) and of ``w``.
    """
    gamma_mode = GammaMode(gamma_mode)
    kernel = make_kernel(kernel, e)
    t = mesh.nodes
    N = mesh.N
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (N + 1,):
        raise ValueError("rhs must have one entry per mesh node")
    p = float(weight_exponent)
    if not 0 <= p < 1:
        raise DomainError("weight exponent must lie in [0, 1)")
    w = np.zeros(N + 1)
    w[0] = rhs[0]
    h0 = t[1]
    with np.errstate(divide="ignore"):
        s_neg_p = np.where(t > 0, t ** (-p), 0.0)
    for i in range(1, N + 1):
        ti = t[i]
        if gamma_mode is GammaMode.GAMMA_WEIGHT:
            c = 1.0 / gamma_weight(e, ti)
        else:
            c = 1.0
        if p > 0:
            c *= ti ** p
        reg, lg = kernel.parts(t[: i + 1], ti)
        a = product_weights(mesh, i, 0.0)[: i + 1]
        b = product_weights(mesh, i, 0.0, with_log=True)[: i + 1]
        if p == 0:
            coef = a * reg + b * lg
        else:
            # strip the first panel out of the trapezoid rows and redo it exactly
            a = a.copy()
            b = b.copy()
            a[:2] -= 0.5 * h0
            m0, m1 = panel_moments(ti, h0, 0.0, True)
            b[0] -= m0 - m1 / h0
            b[1] -= m1 / h0
            coef = (a * reg + b * lg) * s_neg_p[: i + 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                x = ti - t[:2]
                logs = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), 0.0)
            if i == 1:
                k0, k1 = reg[0], reg[1]
            else:
                k0 = reg[0] + lg[0] * logs[0]
                k1 = reg[1] + lg[1] * logs[1]
            f0, f1 = _first_panel(h0, p, i == 1, k0, k1, lg[0], lg[1])
            coef[0] += f0
            coef[1] += f1
        diag = 1.0 + c * coef[i]
        if abs(diag) < DIAG_TOL:
            raise IllConditioned(f"near-singular diagonal {diag:.3g} at node {i}")
        w[i] = (rhs[i] - c * np.dot(coef[:i], w[:i])) / diag
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(t > 0, w * s_neg_p, np.inf * np.sign(w[0]) if p > 0 and w[0] != 0 else w[0])
    return v, w


def _weighted(e, t, u, p_used=None, w=None):
    p0 = 1.0 - e.alpha0
    if w is not None and p_used == p0:
        return w.copy()
    with np.errstate(invalid="ignore"):
        out = t ** p0 * u
    out[0] = 0.0 if np.isfinite(u[0]) else np.nan
    return out


def _grid(e, mesh, u, weighted, diagnostics):
    du = du_estimate(mesh.nodes, u)
    from .analysis import fit_singularity_exponent
    try:
        diagnostics["fitted_exponent"] = fit_singularity_exponent(mesh.nodes, u).exponent_p
    except ValueError:
        diagnostics["fitted_exponent"] = float("nan")
    return SolutionGrid(mesh, u, weighted, du, diagnostics)


def _rhs_limit(e, f, T):
    """Limit of the transformed data at ``t = 0+`` when ``f(0) = 0``.

    Zero for ``f`` in C^1, but nonzero when ``f`` is not (``f = 2 sqrt(t)``).
    Raises :class:`DomainError` when the transform grows without bound.
    The transform is sampled at ``1e-100 T`` and ``1e-150 T``: a value that
    shrinks by more than half between them decays like a positive power
    of ``t`` and the limit is 0; otherwise the deeper sample is the limit.
    """
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        v1 = rhs_abel(e, f, LIMIT_T * T)
        v2 = rhs_abel(e, f, LIMIT_T ** 1.5 * T)
    if not np.isfinite(v2) or abs(v2) > 2.0 * abs(v1):
        raise DomainError("transformed data is unbounded at t = 0 (f(0) = 0 but f is not C^1)")
    return v2 if abs(v2) >= 0.5 * abs(v1) and v2 != 0 else 0.0


def solve_abel(p, mesh):
    """Solve an Abel equation through its second-kind reformulation.

    When ``f(0) != 0`` the solution behaves like ``t**(alpha(0)-1)``: the
    unknown is weighted by ``t**(1-alpha(0))`` and ``u`` at node 0 is
    reported as infinite.
    """
    e = p.exponent
    t = mesh.nodes
    f0 = float(p.f(0.0))
    pw = 1.0 - e.alpha0 if f0 != 0 else 0.0
    rhs = np.empty(mesh.N + 1)
    if pw > 0:
        rhs[0] = f0 / gamma_weight(e, 0.0)
    else:
        rhs[0] = _rhs_limit(e, p.f, mesh.T) / gamma_weight(e, 0.0)
    for i in range(1, mesh.N + 1):
        rhs[i] = t[i] ** pw * rhs_abel(e, p.f, t[i]) / gamma_weight(e, t[i])
    u, w = solve_vie2(e, mesh, rhs, "K", GammaMode.GAMMA_WEIGHT, pw)
    diagnostics = {"weight_exponent": pw, "singular_at_zero": pw > 0}
    return _grid(e, mesh, u, _weighted(e, t, u, pw, w), diagnostics)


def _extrapolate_to_zero(t, u):
    """Value at 0 of the quadratic through nodes 1-3."""
    x = t[1:4]
    y = u[1:4]
    return float(np.polyval(np.polyfit(x, y, 2), 0.0))


def solve_fde(p, mesh):
    """Solve ``D^{alpha(t)} u = h``, ``u(0) = u0``.

    Case ``0 < alpha < 1`` (``u0`` must be 0): ``u = Gamma(1-alpha(t)) v``
    where ``v`` solves the Abel equation with data ``int_0^t h``.
    Case ``alpha(0) = 1``: a unit-coefficient second-kind equation with
    the R-L kernel.
    """
    e = p.exponent
    t = mesh.nodes
    H = Antiderivative(p.h)
    if e.regime is Regime.INTERIOR_RANGE:
        inner = solve_abel(AbelProblem(e, H), mesh)
        u = gamma_fn(1.0 - e(t)) * inner.u
        u[0] = 0.0
        diagnostics = {"case": "i", "u_at_t1": float(u[1])}
        return _grid(e, mesh, u, _weighted(e, t, u), diagnostics)
    rhs = np.empty(mesh.N + 1)
    rhs[0] = p.c0
    for i in range(1, mesh.N + 1):
        rhs[i] = rhs_fde(e, p.h, p.c0, t[i], H)
    u, _ = solve_vie2(e, mesh, rhs, "RL", GammaMode.UNIT, 0.0)
    diagnostics = {"case": "ii", "u_at_t1": float(u[1]),
                   "extrapolated_u0": _extrapolate_to_zero(t, u)}
    return _grid(e, mesh, u, _weighted(e, t, u), diagnostics)


def fde_residual(p, grid, every=8, step=1e-4):
    """Residual of the differential form at interior nodes.

    Applies ``d/dt I^{1-alpha}`` (left R-L integral of order ``1 - alpha(s)``)
    to a cubic spline through the computed nodes, differentiating by a
    Richardson central difference, and compares with ``h``.  Every
    ``every``-th interior node with ``t >= 0.01 T`` is checked (the spline
    does not resolve the singular layer at the origin).

    Returns ``(nodes, residuals)``.
    """
    from scipy.interpolate import CubicSpline
    from .inversion import fd_derivative
    from .operators import Family, OperatorSpec, eval_forward_batch

    e = p.exponent
    t = grid.mesh.nodes
    u = np.array(grid.u, dtype=float)
    if not np.isfinite(u[0]):
        raise DomainError("the solution is unbounded at t = 0")
    spline = CubicSpline(t, u)
    spec = OperatorSpec(Family.RL_LEFT, e.complement())
    first = max(4, int(np.searchsorted(t, 0.01 * t[-1])))
    idx = np.arange(first, grid.mesh.N, every)
    out = np.empty(idx.size)
    for k, i in enumerate(idx):
        ti = t[i]
        hh = min(step, 0.25 * (t[i] - t[i - 1]))
        d = fd_derivative(lambda x: eval_forward_batch(spec, spline, x, 16, 30, 3), ti, hh)
        out[k] = d - float(p.h(ti))
    return t[idx], out
