"""Meshes and quadrature for weakly singular integrands.

Three tools live here:

* :func:`graded_mesh` and :func:`product_weights` -- product integration of
  piecewise-linear data against ``(t_i - s)**(-beta)`` (optionally times
  ``ln(t_i - s)``), with every panel moment in closed form;
* :func:`gauss_jacobi` -- classical Gauss-Jacobi rules on ``(0, 1)``;
* :func:`integrate` / :func:`singular_rule` -- composite Gauss rules on
  geometrically graded panels that resolve algebraic/logarithmic endpoint
  singularities.  The innermost panel at each end uses an interpolatory rule
  built from the exact moments of the endpoint weight.
"""

import functools
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, QuadratureFailure
from .specialfn import beta_fn

# --------------------------------------------------------------------------
# Graded meshes


@dataclass(frozen=True)
class GradedMesh:
    """Nodes ``t_j = T (j/N)**r``, ``j = 0..N``."""

    T: float
    N: int
    r: float
    nodes: np.ndarray

    @property
    def widths(self):
        return np.diff(self.nodes)

    def __len__(self):
        return self.N + 1


def graded_mesh(T, N, r=1.0):
    if not T > 0:
        raise ParameterError("T must be positive")
    if int(N) != N or N < 2:
        raise ParameterError("N must be an integer >= 2")
    if not r >= 1:
        raise ParameterError("grading exponent r must be >= 1")
    N = int(N)
    nodes = T * (np.arange(N + 1) / N) ** r
    nodes[-1] = T
    nodes.setflags(write=False)
    return GradedMesh(float(T), N, float(r), nodes)


# --------------------------------------------------------------------------
# Product-integration moments

_SERIES_TERMS = 64


def _series_moments(u, beta):
    """Power series in ``u`` of the normalized panel moments (valid for u <= 1/2)."""
    p = np.ones_like(u)
    dp = np.zeros_like(u)
    g0 = np.zeros_like(u)
    f1 = np.zeros_like(u)
    h0 = np.zeros_like(u)
    h1 = np.zeros_like(u)
    upow = u.copy()
    for k in range(_SERIES_TERMS):
        g0 += p * upow / (k + 1)
        f1 += p * upow * u / (k + 2)
        h0 -= dp * upow / (k + 1)
        h1 -= dp * upow * u / (k + 2)
        dp = (dp * (beta + k) + p) / (k + 1)
        p = p * (beta + k) / (k + 1)
        upow = upow * u
    return g0, f1, h0, h1


def _closed_moments(u, beta):
    """Closed forms of the same moments in terms of ``q = 1 - u`` (u > 1/2)."""
    q = 1.0 - u
    a1 = 1.0 - beta
    a2 = 2.0 - beta
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        q1 = np.where(q > 0, np.exp(a1 * lq), 0.0)
        q2 = np.where(q > 0, np.exp(a2 * lq), 0.0)
    g0 = (1.0 - q1) / a1
    f1 = g0 - (1.0 - q2) / a2
    aq = q1 * (lq / a1 - 1.0 / a1**2)
    bq = q2 * (lq / a2 - 1.0 / a2**2)
    h0 = -1.0 / a1**2 - aq
    h1 = h0 + 1.0 / a2**2 + bq
    return g0, f1, h0, h1


def panel_moments(b, h, beta, with_log=False):
    """Moments of one panel against the weight ``x**(-beta) [ln x]``.

    With ``x = b - y`` measuring the distance to the collocation point,
    returns ``M0 = int_0^h (b-y)**(-beta) [ln(b-y)] dy`` and
    ``M1 = int_0^h y (b-y)**(-beta) [ln(b-y)] dy``.  ``b >= h > 0``.
    """
    b, h, beta = np.broadcast_arrays(
        np.asarray(b, dtype=float), np.asarray(h, dtype=float), np.asarray(beta, dtype=float)
    )
    u = np.clip(h / b, 0.0, 1.0)
    small = u <= 0.5
    g0 = np.empty_like(u)
    f1 = np.empty_like(u)
    h0 = np.empty_like(u)
    h1 = np.empty_like(u)
    if np.any(small):
        out = _series_moments(u[small], beta[small])
        for dst, src in zip((g0, f1, h0, h1), out):
            dst[small] = src
    if np.any(~small):
        out = _closed_moments(u[~small], beta[~small])
        for dst, src in zip((g0, f1, h0, h1), out):
            dst[~small] = src
    lb = np.log(b)
    s1 = np.exp((1.0 - beta) * lb)
    s2 = s1 * b
    if with_log:
        return s1 * (lb * g0 + h0), s2 * (lb * f1 + h1)
    return s1 * g0, s2 * f1


def product_weights(mesh, i, beta, with_log=False):
    """Product-integration weight row for node ``i``.

    ``sum_j w[j] g(t_j)`` integrates the piecewise-linear interpolant of
    ``g`` against ``(t_i - s)**(-beta)`` (times ``ln(t_i - s)`` when
    ``with_log``) over ``[0, t_i]``.  ``beta`` is a scalar or one value per
    panel ``[t_j, t_{j+1}]``, either for ``j < i`` or for all ``N`` panels.
    """
    if not 1 <= i <= mesh.N:
        raise ParameterError("node index must satisfy 1 <= i <= N")
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 1 and beta.shape[0] == mesh.N:
        beta = beta[:i]
    if np.any(beta >= 1.0) or np.any(beta < 0.0):
        raise ParameterError("beta must lie in [0, 1)")
    t = mesh.nodes
    left = t[:i]
    h = np.diff(t[: i + 1])
    b = t[i] - left
    m0, m1 = panel_moments(b, h, np.broadcast_to(beta, h.shape), with_log)
    row = np.zeros(mesh.N + 1)
    upper = m1 / h
    np.add.at(row, np.arange(i), m0 - upper)
    np.add.at(row, np.arange(1, i + 1), upper)
    return row


# --------------------------------------------------------------------------
# Gauss-Jacobi


@dataclass(frozen=True)
class JacobiRule:
    """Gauss rule for ``int_0^1 (1-z)**a z**b phi(z) dz``."""

    n: int
    a: float
    b: float
    nodes: np.ndarray
    weights: np.ndarray

    def __call__(self, phi):
        return float(np.dot(self.weights, phi(self.nodes)))


@functools.lru_cache(maxsize=256)
def _jacobi_cached(n, a, b):
    k = np.arange(n, dtype=float)
    s = a + b
    diag = np.empty(n)
    diag[0] = (b - a) / (s + 2.0)
    if n > 1:
        kk = k[1:]
        diag[1:] = (b * b - a * a) / ((2 * kk + s) * (2 * kk + s + 2.0))
    off = np.empty(max(n - 1, 0))
    if n > 1:
        off[0] = np.sqrt(4.0 * (1 + a) * (1 + b) / ((2.0 + s) ** 2 * (3.0 + s)))
        kk = k[2:]
        off[1:] = np.sqrt(
            4.0 * kk * (kk + a) * (kk + b) * (kk + s)
            / ((2 * kk + s) ** 2 * (2 * kk + s + 1.0) * (2 * kk + s - 1.0))
        )
    jac = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    x, vec = np.linalg.eigh(jac)
    z = 0.5 * (1.0 + x)
    w = beta_fn(a + 1.0, b + 1.0) * vec[0, :] ** 2
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def gauss_jacobi(n, a, b):
    """``n``-point Gauss-Jacobi rule on ``(0, 1)`` for weight ``(1-z)**a z**b``.

    Nodes are eigenvalues of the Jacobi matrix of the three-term recurrence;
    the weights are scaled so that they sum to ``B(a+1, b+1)``.
    """
    if int(n) != n or n < 1:
        raise ParameterError("n must be a positive integer")
    if not (a > -1 and b > -1):
        raise ParameterError("Jacobi weight exponents must exceed -1")
    z, w = _jacobi_cached(int(n), float(a), float(b))
    return JacobiRule(int(n), float(a), float(b), z, w)


# --------------------------------------------------------------------------
# Graded composite rules for endpoint singularities

SIGMA = 0.15
N_GAUSS = 20
LEVELS = 40
N_INNER = 8


@functools.lru_cache(maxsize=None)
def _legendre01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@functools.lru_cache(maxsize=None)
def _inner_vandermonde_inv(n):
    z, _ = _legendre01(n)
    v = np.vander(z, n, increasing=True).T  # v[j, k] = z_k**j
    return np.linalg.inv(v)


def _inner_weights(w, log):
    """Interpolatory weights on the Legendre nodes for ``z**(-w) [ln z]`` on (0, 1)."""
    w = np.asarray(w, dtype=float)
    j = np.arange(N_INNER, dtype=float)
    denom = j + 1.0 - w[..., None]
    m = -1.0 / denom**2 if log else 1.0 / denom
    return m @ _inner_vandermonde_inv(N_INNER).T


def _ladder(q, w_near, log_near, n, levels):
    """Distances from the singular end and weights for a ladder over ``[0, q]``.

    ``q`` and ``w_near`` have shape (K,).  The returned weights include
    ``x**(-w_near) [ln x]`` for the near end.
    """
    zg, wg = _legendre01(n)
    k = np.arange(levels)
    lo = SIGMA ** (k + 1)
    hi = SIGMA**k
    x_unit = (lo[:, None] + (hi - lo)[:, None] * zg[None, :]).ravel()
    w_unit = ((hi - lo)[:, None] * wg[None, :]).ravel()
    x = q[:, None] * x_unit[None, :]
    w = q[:, None] * w_unit[None, :]
    lx = np.log(x)
    w = w * np.exp(-w_near[:, None] * lx)
    if log_near:
        w = w * lx
    # innermost panel [0, delta]
    delta = q * SIGMA**levels
    zi, _ = _legendre01(N_INNER)
    xi = delta[:, None] * zi[None, :]
    scale = np.exp((1.0 - w_near) * np.log(delta))[:, None]
    c0 = _inner_weights(w_near, False)
    if log_near:
        wi = scale * (np.log(delta)[:, None] * c0 + _inner_weights(w_near, True))
    else:
        wi = scale * c0
    return np.concatenate([xi, x], axis=1), np.concatenate([wi, w], axis=1)


def singular_rule(length, wa=0.0, wb=0.0, log_a=False, log_b=False,
                  n=N_GAUSS, levels=LEVELS, n_mid=0):
    """Composite rule for ``int_0^L phi (x)**(-wa) (L-x)**(-wb) [ln x] [ln(L-x)]``.

    Arguments broadcast over a leading batch dimension.  Returns ``(da, db,
    w)`` with ``da`` the distance of each node from the left end, ``db``
    from the right end, and ``w`` weights that already include both endpoint
    weight functions; shapes are ``(K, M)`` (or ``(M,)`` for scalar input).
    """
    scalar = np.ndim(length) == 0 and np.ndim(wa) == 0 and np.ndim(wb) == 0
    length, wa, wb = (np.atleast_1d(np.asarray(v, dtype=float)) for v in
                      np.broadcast_arrays(length, wa, wb))
    q = length / (n_mid + 2)
    xa, wta = _ladder(q, wa, log_a, n, levels)
    xb, wtb = _ladder(q, wb, log_b, n, levels)
    da_parts = [xa, length[:, None] - xb]
    db_parts = [length[:, None] - xa, xb]
    wa_parts = [wta * _far_weight(length[:, None] - xa, wb, log_b),
                wtb * _far_weight(length[:, None] - xb, wa, log_a)]
    if n_mid:
        zg, wg = _legendre01(n)
        k = np.arange(n_mid)
        x_mid = ((k[:, None] + 1.0 + zg[None, :]).ravel())[None, :] * q[:, None]
        w_mid = np.tile(wg, n_mid)[None, :] * q[:, None]
        da_parts.append(x_mid)
        db_parts.append(length[:, None] - x_mid)
        wa_parts.append(w_mid * _far_weight(x_mid, wa, log_a)
                        * _far_weight(length[:, None] - x_mid, wb, log_b))
    da = np.concatenate(da_parts, axis=1)
    db = np.concatenate(db_parts, axis=1)
    w = np.concatenate(wa_parts, axis=1)
    if scalar:
        return da[0], db[0], w[0]
    return da, db, w


def _far_weight(x, w_end, log_end):
    lx = np.log(x)
    out = np.exp(-np.asarray(w_end)[:, None] * lx)
    return out * lx if log_end else out


def integrate(phi, a, b, wa=0.0, wb=0.0, log_a=False, log_b=False, tol=1e-12,
              max_attempts=4):
    """Integrate ``phi(s) (s-a)**(-wa) (b-s)**(-wb) [ln(s-a)] [ln(b-s)]`` over ``[a, b]``.

    ``phi(s, da, db)`` receives the nodes together with their exact
    distances to both endpoints, so that singular factors can be evaluated
    without cancellation.  ``phi`` may itself carry mild integrable endpoint
    singularities (logarithms, ``x**(-1/2)``); the geometric grading takes
    care of them.

    Returns ``(value, error_estimate)``.  Raises :class:`QuadratureFailure`
    when two successive refinements never agree to ``tol`` (absolute).
    """
    if b < a:
        raise ParameterError("integration interval reversed")
    if b == a:
        return 0.0, 0.0
    length = b - a
    settings = [(12, 30, 0), (N_GAUSS, LEVELS, 1), (28, 55, 3), (36, 80, 7), (44, 110, 15)]
    prev = None
    for n, levels, n_mid in settings[: max_attempts + 1]:
        da, db, w = singular_rule(length, wa, wb, log_a, log_b, n, levels, n_mid)
        val = float(np.dot(w, phi(a + da, da, db)))
        if not np.isfinite(val):
            raise QuadratureFailure("non-finite integrand value")
        if prev is not None:
            err = abs(val - prev)
            if err <= tol:
                return val, err
        prev = val
    raise QuadratureFailure(f"no convergence to tolerance {tol:g} (last change {err:.3g})")


def default_grading(alpha0, kind="abel"):
    """Default mesh grading exponent.

    ``"abel"``: ``max(1, 2/alpha(0))``, enough for second order against the
    ``t**(alpha(0)-1)`` singularity; ``"fde-i"``: 4; ``"fde-ii"``: 1.
    """
    if kind == "abel":
        return max(1.0, 2.0 / alpha0)
    if kind == "fde-i":
        return 4.0
    if kind == "fde-ii":
        return 1.0
    raise ParameterError(f"unknown problem kind {kind!r}")
