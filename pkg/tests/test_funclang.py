import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracvx.errors import DomainError, ParseError
from fracvx.funclang import eval_jet, parse_expr, to_text

CORPUS = [
    ("0.5 + 0.25*t", (0.0, 2.0)),
    ("1 - 0.5*t^2", (0.0, 2.0)),
    ("0.6 - 0.1*t", (0.0, 1.0)),
    ("exp(t)*sin(t)", (0.0, 2.0)),
    ("sqrt(t)*ln(t)", (0.1, 2.0)),
    ("pow(t, 1.5) + cos(2*t)/(1 + t)", (0.1, 2.0)),
    ("2^t^2", (0.0, 1.0)),
    ("-t^2 + 3*t - -1", (0.0, 1.0)),
    ("(1 + t)^(0.3 + t)", (0.0, 1.0)),
    ("pi*e/t", (0.2, 2.0)),
]


def test_examples():
    assert parse_expr("0.5 + 0.25*t")(1.0) == 0.75
    j = eval_jet(parse_expr("1 - 0.5*t^2"), 0.0)
    assert (j.v, j.d1, j.d2) == (1.0, 0.0, -1.0)
    j = eval_jet(parse_expr("0.5 + 0.25*t"), 2.0)
    assert (j.v, j.d1, j.d2) == (1.0, 0.25, 0.0)


def test_syntax_error_position():
    with pytest.raises(ParseError) as exc:
        parse_expr("0.5 + * t")
    assert exc.value.position == 6


@pytest.mark.parametrize("text", ["", "   ", "foo(t)", "x + 1", "sin t", "(t + 1", "t +", "pow(t)"])
def test_invalid_expressions(text):
    with pytest.raises(ParseError):
        parse_expr(text)


def test_exp_sin_matches_fd():
    f = parse_expr("exp(t)*sin(t)")
    d1 = eval_jet(f, 0.7).d1
    for h in (1e-4, 1e-5):
        assert abs((f(0.7 + h) - f(0.7 - h)) / (2 * h) - d1) <= 1e-6


@pytest.mark.parametrize("text, dom", CORPUS)
def test_jets_match_finite_differences(text, dom):
    f = parse_expr(text)
    t = np.random.default_rng(1).uniform(dom[0] + 0.01, dom[1] - 0.01, 100)
    h1, h2 = 1e-6, 1e-4
    j = f.jet(t)
    fd1 = (f(t + h1) - f(t - h1)) / (2 * h1)
    fd2 = (f(t + h2) - 2 * f(t) + f(t - h2)) / h2 ** 2
    assert np.all(np.abs(j.d1 - fd1) <= 1e-6 * (1 + np.abs(j.d1)))
    assert np.all(np.abs(j.d2 - fd2) <= 1e-4 * (1 + np.abs(j.d2)))
    assert np.allclose(j.v, f(t), rtol=1e-14, atol=0)


@pytest.mark.parametrize("text, dom", CORPUS)
def test_round_trip(text, dom):
    f = parse_expr(text, fold=False)
    g = parse_expr(to_text(f.ast), fold=False)
    assert g.ast == f.ast


@pytest.mark.parametrize("text, dom", CORPUS)
def test_constant_folding_preserves_values(text, dom):
    t = np.linspace(dom[0] + 0.01, dom[1], 50)
    a = parse_expr(text, fold=True)(t)
    b = parse_expr(text, fold=False)(t)
    assert np.all(np.abs(a - b) <= 1e-15 * np.abs(b))


def test_folding_reduces_constant_subtree():
    f = parse_expr("2*3 + t")
    assert to_text(f.ast) == to_text(parse_expr("6 + t", fold=False).ast)
    assert parse_expr("sin(pi/2)").is_constant


def test_power_precedence():
    assert parse_expr("2^3^2")(0.0) == 512.0
    assert parse_expr("-2^2")(0.0) == -4.0


def test_domain_errors():
    with pytest.raises(DomainError):
        parse_expr("ln(t)")(0.0)
    with pytest.raises(DomainError):
        parse_expr("t^0.5")(-1.0)


@given(st.floats(-3, 3))
@settings(max_examples=100)
def test_deterministic(t):
    f = parse_expr("exp(t)*sin(t) + t^3")
    assert f(t) == f(t)
    assert f.jet(t) == f.jet(t)


def test_immutable():
    f = parse_expr("t")
    with pytest.raises(AttributeError):
        f.source = "1"


def test_array_evaluation_of_constant():
    assert parse_expr("2")(np.zeros(3)).tolist() == [2.0, 2.0, 2.0]
    assert math.isclose(parse_expr("pi")(0.0), math.pi)
