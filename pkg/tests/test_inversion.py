import math

import numpy as np
import pytest

from fracvx.errors import DomainError, RegimeError
from fracvx.exponent import make_exponent
from fracvx.funclang import parse_expr
from fracvx.inversion import (Antiderivative, Composition, compose_residual, compose_sides,
                              rhs_abel, rhs_fde)
from fracvx.operators import Family, OperatorSpec, eval_forward
from fracvx.quadrature import graded_mesh
from fracvx.specialfn import gamma_fn


def fd(F, t, h=1e-4):
    def d(hh):
        return (F(t + hh) - F(t - hh)) / (2 * hh)
    return (4 * d(h / 2) - d(h)) / 3


def test_rhs_abel_constant_examples():
    e = make_exponent("0.5", 1.0)
    for t in (0.01, 0.4, 1.0):
        assert rhs_abel(e, parse_expr("1"), t) == pytest.approx(t ** -0.5, rel=1e-10)
    for a in (0.5, 0.3, 0.8):
        e = make_exponent(str(a), 1.0)
        # d/dt int_0^t (t-s)^(a-1) s ds = t^a / a
        assert rhs_abel(e, parse_expr("t"), 0.7) == pytest.approx(0.7 ** a / a, rel=1e-10)


def test_rhs_abel_fd_oracle():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    f = parse_expr("1 + t")
    spec = OperatorSpec(Family.ABEL_RIGHT, e.complement())
    ref = fd(lambda t: eval_forward(spec, f, t, 1e-13), 0.5)
    assert abs(rhs_abel(e, f, 0.5) - ref) <= 1e-5


def test_rhs_abel_vanishes_at_zero():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    f = parse_expr("t + t^2")
    v6, v8 = abs(rhs_abel(e, f, 1e-6)), abs(rhs_abel(e, f, 1e-8))
    assert v8 < v6 < 1e-3
    assert rhs_abel(e, f, 0.0) == 0.0


def test_rhs_abel_domain_errors():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    with pytest.raises(DomainError):
        rhs_abel(e, parse_expr("1 + t"), 0.0)
    with pytest.raises(RegimeError):
        rhs_abel(make_exponent("1 - t^2/2", 1.0), parse_expr("t"), 0.5)


def test_rhs_abel_linear():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    f1, f2 = parse_expr("1 + t"), parse_expr("sin(2*t)")
    both = parse_expr("3*(1 + t) - 2*sin(2*t)")
    for t in (0.05, 0.5, 1.0):
        lhs = rhs_abel(e, both, t)
        rhs = 3 * rhs_abel(e, f1, t) - 2 * rhs_abel(e, f2, t)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_rhs_fde_constant_example():
    e = make_exponent("0.4", 1.0)
    for t in (0.1, 0.9):
        got = rhs_fde(e, parse_expr("0"), 1.5, t)
        assert got == pytest.approx(1.5 * t ** -0.6 / gamma_fn(0.4), rel=1e-12)


def test_rhs_fde_limit_touching_one():
    e = make_exponent("1 - t^2/2", 1.0)
    assert rhs_fde(e, parse_expr("1"), 2.0, 0.0) == 2.0
    # the continuous value approaches c0 as t -> 0+
    vals = [rhs_fde(e, parse_expr("0"), 2.0, t) for t in (1e-2, 1e-4, 1e-6)]
    assert abs(vals[2] - 2.0) < abs(vals[1] - 2.0) < abs(vals[0] - 2.0) < 1e-2


def test_rhs_fde_fd_oracle():
    e = make_exponent("1 - t^2/2", 1.0)
    h = parse_expr("1")
    spec = OperatorSpec(Family.RL_RIGHT, e)
    data = lambda s: s + 2.0
    ref = fd(lambda t: eval_forward(spec, data, t, 1e-13), 0.3)
    assert abs(rhs_fde(e, h, 2.0, 0.3) - ref) <= 1e-5


def test_rhs_fde_affine():
    e = make_exponent("1 - t^2/2", 1.0)
    h1, h2 = parse_expr("1"), parse_expr("cos(t)")
    hs = parse_expr("1 + cos(t)")
    for t in (0.05, 0.3, 0.9):
        lhs = rhs_fde(e, hs, -1.0, t)
        rhs = rhs_fde(e, h1, 2.0, t) + rhs_fde(e, h2, -3.0, t)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_rhs_fde_rejects_c0_with_interior_alpha_at_zero():
    with pytest.raises(DomainError):
        rhs_fde(make_exponent("0.5", 1.0), parse_expr("1"), 1.0, 0.0)


def test_antiderivative():
    H = Antiderivative(parse_expr("cos(t)"))
    assert H(0.7) == pytest.approx(math.sin(0.7), rel=1e-14)
    assert np.allclose(H(np.array([0.0, 1.0])), [0.0, math.sin(1.0)], rtol=1e-14)
    assert H.deriv(0.3) == pytest.approx(math.cos(0.3))


@pytest.mark.parametrize("which", list(Composition))
def test_residual_constant_alpha(which):
    e = make_exponent("0.35", 1.0)
    mesh = graded_mesh(1.0, 32, 1)
    assert compose_residual(e, parse_expr("1 + t^2"), mesh, which) <= 1e-6


@pytest.mark.parametrize("which", list(Composition))
def test_residual_zero_data(which):
    e = make_exponent("0.5 + 0.2*t", 1.0)
    assert compose_residual(e, lambda s: 0.0 * s, graded_mesh(1.0, 8, 1), which) == 0.0


@pytest.mark.parametrize("which", list(Composition))
@pytest.mark.parametrize("g", ["1 + t^2", "cos(2*t)"])
def test_residual_decreases(which, g):
    e = make_exponent("0.5 + 0.2*t", 1.0)
    r32 = compose_residual(e, parse_expr(g), graded_mesh(1.0, 32, 1), which)
    r64 = compose_residual(e, parse_expr(g), graded_mesh(1.0, 64, 1), which)
    assert r64 <= 0.7 * r32


def test_compose_sides_shapes():
    e = make_exponent("0.5 + 0.2*t", 1.0)
    t, lhs, rhs = compose_sides(e, parse_expr("1"), graded_mesh(1.0, 8, 1),
                                Composition.ABEL_LEFT_THEN_DHAT)
    assert t.shape == lhs.shape == rhs.shape == (7,)
