import io
import math

import numpy as np
import pytest

from fracvx.errors import DomainError, IllConditioned, InvalidInitialValue, RegimeError
from fracvx.exponent import make_exponent
from fracvx.funclang import parse_expr
from fracvx.kernels import SplitKernel, gamma_weight
from fracvx.quadrature import graded_mesh, integrate
from fracvx.solvers import (AbelProblem, FdeProblem, GammaMode, SolutionGrid, du_estimate,
                            fde_residual, solve_abel, solve_fde, solve_vie2)
from fracvx.specialfn import gamma_fn


def test_vie2_zero_kernel_is_identity():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    mesh = graded_mesh(1.0, 16, 2)
    rhs = np.cos(mesh.nodes)
    v, _ = solve_vie2(e, mesh, rhs, "zero", GammaMode.UNIT)
    assert np.array_equal(v, rhs)
    v, _ = solve_vie2(e, mesh, rhs, "zero", GammaMode.GAMMA_WEIGHT)
    assert np.array_equal(v, rhs)


def test_vie2_constant_alpha_kernel_vanishes():
    e = make_exponent("0.3", 1.0)
    mesh = graded_mesh(1.0, 16, 1)
    rhs = 1 + mesh.nodes
    v, _ = solve_vie2(e, mesh, rhs, "K", GammaMode.GAMMA_WEIGHT)
    assert np.allclose(v, rhs, rtol=0, atol=1e-12)


def test_vie2_manufactured_synthetic_kernel():
    # k(s, t) = (t - s) + 0.5 ln(t - s) with unit prefactor and v = 1 + t
    kern = SplitKernel(lambda s, t: t - s, lambda s, t: 0.5 + 0.0 * s)
    e = make_exponent("0.5", 1.0)
    mesh = graded_mesh(1.0, 128, 1)

    def forward(t):
        val, _ = integrate(lambda s, da, db: (1 + s) * (db + 0.5 * np.log(db)), 0.0, t,
                           tol=1e-13)
        return val

    rhs = 1 + mesh.nodes + np.array([forward(t) for t in mesh.nodes])
    v, _ = solve_vie2(e, mesh, rhs, kern, GammaMode.UNIT)
    assert np.max(np.abs(v - (1 + mesh.nodes))) <= 1e-4


def test_vie2_ill_conditioned():
    kern = SplitKernel(lambda s, t: -2.0 / (t - 0.0) + 0.0 * s)
    e = make_exponent("0.5", 1.0)
    mesh = graded_mesh(1.0, 2, 1)
    with pytest.raises(IllConditioned):
        solve_vie2(e, mesh, np.ones(3), kern, GammaMode.UNIT)


def test_vie2_argument_checks():
    e = make_exponent("0.5", 1.0)
    mesh = graded_mesh(1.0, 4, 1)
    with pytest.raises(ValueError):
        solve_vie2(e, mesh, np.ones(3), "zero")
    with pytest.raises(DomainError):
        solve_vie2(e, mesh, np.ones(5), "zero", weight_exponent=1.0)


@pytest.mark.parametrize("f, exact", [("2*sqrt(t)", lambda t: 1 + 0 * t),
                                      ("4/3*t^1.5", lambda t: t)])
def test_abel_closed_form(f, exact):
    e = make_exponent("0.5", 1.0)
    grid = solve_abel(AbelProblem(e, parse_expr(f)), graded_mesh(1.0, 128, 4))
    assert np.max(np.abs(grid.u - exact(grid.t))) <= 1e-4


def test_abel_singular_data_reports_infinite_origin():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    grid = solve_abel(AbelProblem(e, parse_expr("1 + t")), graded_mesh(1.0, 32, 4))
    assert np.isinf(grid.u[0])
    assert np.all(np.isfinite(grid.weighted_u[1:]))
    assert grid.diagnostics["singular_at_zero"]


def test_abel_linear_in_f():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    mesh = graded_mesh(1.0, 32, 4)
    g1 = solve_abel(AbelProblem(e, parse_expr("t")), mesh)
    g2 = solve_abel(AbelProblem(e, parse_expr("sin(t)^2")), mesh)
    g3 = solve_abel(AbelProblem(e, parse_expr("2*t - 3*sin(t)^2")), mesh)
    ref = 2 * g1.u - 3 * g2.u
    assert np.max(np.abs(g3.u - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_abel_self_convergence():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    prob = AbelProblem(e, parse_expr("t + t^2"))
    sols = [solve_abel(prob, graded_mesh(1.0, N, 4)).u for N in (32, 64, 128)]
    d1 = np.max(np.abs(sols[1][::2] - sols[0]))
    d2 = np.max(np.abs(sols[2][::2] - sols[1]))
    assert d2 <= d1 / 1.5


def test_abel_problem_regime():
    with pytest.raises(RegimeError):
        AbelProblem(make_exponent("1 - t^2/2", 1.0), parse_expr("t"))
    assert AbelProblem(make_exponent("0.5", 2.0), parse_expr("t")).T == 2.0


def test_fde_invalid_initial_value():
    with pytest.raises(InvalidInitialValue):
        FdeProblem(make_exponent("0.5", 1.0), parse_expr("1"), 0.5)


@pytest.mark.parametrize("a", [0.4, 0.5, 0.7])
def test_fde_case_i_exact_pair(a):
    e = make_exponent(str(a), 1.0)
    grid = solve_fde(FdeProblem(e, parse_expr(f"t^{1 - a}"), 0.0), graded_mesh(1.0, 128, 4))
    assert np.max(np.abs(grid.u - gamma_fn(2 - a) * grid.t)) <= 1e-3
    assert grid.u[0] == 0.0


def test_fde_case_ii_initial_value_and_linearity():
    e = make_exponent("1 - t^2/2", 1.0)
    mesh = graded_mesh(1.0, 64, 1)
    ga = solve_fde(FdeProblem(e, parse_expr("1"), 2.0), mesh)
    gb = solve_fde(FdeProblem(e, parse_expr("cos(t)"), -1.0), mesh)
    gc = solve_fde(FdeProblem(e, parse_expr("2 - 3*cos(t)"), 7.0), mesh)
    assert abs(ga.diagnostics["extrapolated_u0"] - 2.0) <= 1e-3
    ref = 2 * ga.u - 3 * gb.u
    assert np.max(np.abs(gc.u - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_fde_case_ii_first_node_approaches_u0():
    e = make_exponent("1 - t^2/2", 1.0)
    prob = FdeProblem(e, parse_expr("1"), 2.0)
    gaps = [abs(solve_fde(prob, graded_mesh(1.0, N, 1)).u[1] - 2.0) for N in (32, 64, 128)]
    assert gaps[2] < gaps[1] < gaps[0]
    # first order or better
    assert gaps[1] / gaps[2] >= 1.8


@pytest.mark.parametrize("alpha, h, u0, r", [("1 - t^2/2", "1", 2.0, 1.0),
                                             ("0.6 - 0.1*t", "1 + t", 0.0, 4.0)])
def test_fde_differential_form_residual(alpha, h, u0, r):
    e = make_exponent(alpha, 1.0)
    prob = FdeProblem(e, parse_expr(h), u0)
    res = [np.max(np.abs(fde_residual(prob, solve_fde(prob, graded_mesh(1.0, N, r)))[1]))
           for N in (32, 128)]
    assert res[1] < res[0] and res[1] <= 1e-3


def test_du_estimate_quadratic_exact():
    t = graded_mesh(1.0, 10, 2).nodes
    du = du_estimate(t, 3 * t ** 2 - t)
    assert np.isnan(du[0])
    assert np.allclose(du[1:], 6 * t[1:] - 1, rtol=1e-12, atol=1e-12)


def test_solution_grid_csv(tmp_path):
    e = make_exponent("0.5", 1.0)
    grid = solve_abel(AbelProblem(e, parse_expr("2*sqrt(t)")), graded_mesh(1.0, 8, 4))
    text = grid.to_csv()
    lines = text.split("\n")
    assert lines[0] == "t,u,weighted_u,du_estimate"
    assert len(lines) == 1 + 9 + 1 and lines[-1] == ""
    assert "\r" not in text
    path = tmp_path / "sol.csv"
    grid.to_csv(path)
    assert path.read_bytes() == text.encode()
    buf = io.StringIO()
    grid.to_csv(buf)
    assert buf.getvalue() == text
    row = lines[3].split(",")
    assert float(row[1]) == grid.u[2]


def test_solution_grid_shape_check():
    mesh = graded_mesh(1.0, 4)
    with pytest.raises(ValueError):
        SolutionGrid(mesh, np.zeros(4), np.zeros(5), np.zeros(5))


def test_abel_unbounded_transformed_data_rejected():
    e = make_exponent("0.4", 1.0)
    with pytest.raises(DomainError):
        solve_abel(AbelProblem(e, parse_expr("2*sqrt(t)")), graded_mesh(1.0, 16, 4))


def test_abel_origin_value_for_c1_data_is_zero():
    e = make_exponent("0.6 - 0.1*t", 1.0)
    for f in ("t", "sin(t)", "t^2"):
        assert solve_abel(AbelProblem(e, parse_expr(f)), graded_mesh(1.0, 16, 4)).u[0] == 0.0
