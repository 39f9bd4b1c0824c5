import math

import numpy as np
import pytest

from pohozaev.errors import (
    GridMismatchError,
    NormalizationViolatedError,
    PositivityViolatedError,
)
from pohozaev.expr import parse
from pohozaev.identity import (
    differential_form_residual,
    energy_identities,
    equation_residual_radial,
    general_identity,
    pair_identity_radial,
    scalar_identity_grid,
    scalar_identity_radial,
    sphere_area,
    z_equation_residual,
)
from pohozaev.radial import RadialProblem, RadialSolution, shoot_pair, shoot_scalar
from pohozaev.rect import NewtonConfig, RectDomain, solve_scalar_grid

FOUR_PI_NINTH = 4 * math.pi / 9
EIGHT_PI_NINTH = 8 * math.pi / 9
FOUR_PI_45 = 4 * math.pi / 45


def test_sphere_area_closed_forms():
    for n in range(2, 13):
        assert sphere_area(n) == pytest.approx(
            2 * math.pi ** (n / 2) / math.gamma(n / 2), rel=1e-14)


# ---------------------------------------------------------------------------
# scalar identity on the ball
# ---------------------------------------------------------------------------

def test_scalar_identity_constant_source(ball_const):
    prob, sol = ball_const
    report = scalar_identity_radial(sol, prob.f)
    assert report.lhs_total == pytest.approx(FOUR_PI_NINTH, rel=1e-8)
    assert report.rhs_boundary == pytest.approx(FOUR_PI_NINTH, rel=1e-8)
    assert report.rel_residual < 1e-8
    assert not report.flags


def test_scalar_identity_term_breakdown(ball_const):
    prob, sol = ball_const
    report = scalar_identity_radial(sol, prob.f)
    # 2nF integrates 6u, the (2-n) term integrates -u f
    assert report.lhs_terms["2nF"] == pytest.approx(6 / 5 * FOUR_PI_NINTH, rel=1e-8)
    assert report.lhs_terms["(2-n)uf"] == pytest.approx(-FOUR_PI_45, rel=1e-8)
    assert report.lhs_terms["2xFx"] == 0.0
    assert sum(report.lhs_terms.values()) == pytest.approx(
        report.lhs_total, rel=1e-12)


def test_scalar_identity_n2_term_is_exactly_zero():
    # at n = 2 the (2-n) coefficient vanishes in the breakdown
    prob = RadialProblem(n=2, R=1.0, f=parse("1", []))
    sol = shoot_scalar(prob)
    report = scalar_identity_radial(sol, prob.f)
    assert report.lhs_terms["(2-n)uf"] == 0.0
    assert report.rel_residual < 1e-8


def test_scalar_identity_cubic(ball_cubic):
    prob, sol = ball_cubic
    report = scalar_identity_radial(sol, prob.f)
    assert report.rel_residual < 1e-6
    assert not report.flags


def test_scalar_identity_x_dependent_source():
    prob = RadialProblem(n=3, R=1.0, f=parse("1 + r^2/2", ["r", "u"]))
    sol = shoot_scalar(prob)
    report = scalar_identity_radial(sol, prob.f)
    assert report.lhs_terms["2xFx"] != 0.0
    assert report.rel_residual < 1e-8


def test_equation_residual_gate_flags_garbage(ball_const):
    prob, sol = ball_const
    fake = RadialSolution(n=3, R=1.0, r=sol.r, u=np.cos(sol.r),
                          du=-np.sin(sol.r), alpha=1.0)
    assert equation_residual_radial(fake, prob.f) > 1e-2
    report = scalar_identity_radial(fake, prob.f)
    assert "EquationResidualHigh" in report.flags


# ---------------------------------------------------------------------------
# pair identity
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("a", [-5.0, -1.0, 0.0, 1.0, 2.0, 7.0])
def test_pair_identity_constant_source(pair_const, a):
    prob, sol = pair_const
    report = pair_identity_radial(sol, prob.f, prob.g, a=a)
    assert report.lhs_total == pytest.approx(EIGHT_PI_NINTH, rel=1e-8)
    assert report.rhs_boundary == pytest.approx(EIGHT_PI_NINTH, rel=1e-8)
    assert report.rel_residual < 1e-8


def test_pair_identity_a_independence(pair_cubic):
    prob, sol = pair_cubic
    totals = [pair_identity_radial(sol, prob.f, prob.g, a=a).lhs_total
              for a in (-5.0, -1.0, 0.0, 1.0, 2.0, 7.0)]
    for t in totals[1:]:
        assert t == pytest.approx(totals[0], rel=1e-6)
    extreme = [pair_identity_radial(sol, prob.f, prob.g, a=a).lhs_total
               for a in (-5.0, 7.0)]
    assert extreme[0] == pytest.approx(extreme[1], rel=1e-8)


@pytest.mark.parametrize("a", [0.0, 1.0, 2.0])
def test_pair_identity_cubic(pair_cubic, a):
    prob, sol = pair_cubic
    report = pair_identity_radial(sol, prob.f, prob.g, a=a)
    assert report.rel_residual < 1e-6


def test_pair_identity_rejects_sign_changing_data(pair_const):
    prob, sol = pair_const
    bad = RadialSolution(n=3, R=1.0, r=sol.r, u=np.cos(3 * sol.r),
                         du=-3 * np.sin(3 * sol.r), alpha=1.0,
                         v=sol.v, dv=sol.dv, beta=sol.beta)
    with pytest.raises(PositivityViolatedError):
        pair_identity_radial(bad, prob.f, prob.g, a=1.0)


def test_pair_identity_rhs_is_nonnegative(pair_cubic):
    prob, sol = pair_cubic
    report = pair_identity_radial(sol, prob.f, prob.g, a=-3.0)
    assert report.rhs_boundary >= 0.0


# ---------------------------------------------------------------------------
# general identity
# ---------------------------------------------------------------------------

def test_general_m1_equals_pair_at_a1(pair_cubic):
    prob, sol = pair_cubic
    H = parse("v^4/4 + u^4/4", ["u", "v"])
    rep_general = general_identity([sol], H, [1.0])
    rep_pair = pair_identity_radial(sol, prob.f, prob.g, a=1.0)
    for key in rep_pair.lhs_terms:
        assert rep_general.lhs_terms[key] == pytest.approx(
            rep_pair.lhs_terms[key], rel=1e-10, abs=1e-12)
    assert rep_general.rhs_boundary == pytest.approx(
        rep_pair.rhs_boundary, rel=1e-12)


def test_general_m2_decoupled_sum(pair_const, pair_cubic):
    _, sol1 = pair_const
    _, sol2 = pair_cubic
    H = parse("v1 + u1 + v2^4/4 + u2^4/4", ["u1", "v1", "u2", "v2"])
    rep = general_identity([sol1, sol2], H, [1.0, 1.0])
    rep1 = pair_identity_radial(sol1, parse("1", []), parse("1", []), a=1.0)
    rep2 = pair_identity_radial(sol2, parse("v^3", ["v"]), parse("u^3", ["u"]), a=1.0)
    for key in rep.lhs_terms:
        expected = rep1.lhs_terms[key] + rep2.lhs_terms[key]
        assert rep.lhs_terms[key] == pytest.approx(expected, rel=1e-10, abs=1e-12)
    assert rep.rhs_boundary == pytest.approx(
        rep1.rhs_boundary + rep2.rhs_boundary, rel=1e-10)
    assert rep.rel_residual < 1e-6


def test_general_orientation_swap_matches_pair(pair_cubic):
    # the general statement weights u H_u by a_k while the pair statement
    # weights v f by a; they agree after a -> 2 - a
    prob, sol = pair_cubic
    H = parse("v^4/4 + u^4/4", ["u", "v"])
    a = 0.3
    rep_general = general_identity([sol], H, [2.0 - a])
    rep_pair = pair_identity_radial(sol, prob.f, prob.g, a=a)
    for key in rep_pair.lhs_terms:
        assert rep_general.lhs_terms[key] == pytest.approx(
            rep_pair.lhs_terms[key], rel=1e-10, abs=1e-12)


def test_general_flags_data_that_solves_a_different_system(pair_const):
    _, sol = pair_const
    H = parse("(1 + r^2/4)*(v + u)", ["r", "u", "v"])
    rep = general_identity([sol], H, [1.0])
    assert "EquationResidualHigh" in rep.flags
    assert rep.abs_residual > 1e-3


def test_general_constant_shift_is_subtracted(pair_const):
    _, sol = pair_const
    H = parse("v + u + 5", ["u", "v"])
    rep = general_identity([sol], H, [1.0])
    assert "NormalizationShifted" in rep.flags
    assert rep.rel_residual < 1e-8


def test_general_rejects_boundary_varying_trace(pair_const):
    _, sol = pair_const
    H = parse("v + u + x1", ["u", "v", "x1"])
    with pytest.raises(NormalizationViolatedError):
        general_identity([sol], H, [1.0])


def test_general_rejects_grid_mismatch(pair_const):
    _, sol = pair_const
    other = RadialSolution(n=3, R=1.0, r=sol.r[::2], u=sol.u[::2],
                           du=sol.du[::2], alpha=sol.alpha, v=sol.v[::2],
                           dv=sol.dv[::2], beta=sol.beta)
    H = parse("v1 + u1 + v2 + u2", ["u1", "v1", "u2", "v2"])
    with pytest.raises(GridMismatchError):
        general_identity([sol, other], H, [1.0, 1.0])


# ---------------------------------------------------------------------------
# differential form and z-equation
# ---------------------------------------------------------------------------

def test_differential_form_analytic_order(analytic_const_solution):
    study = differential_form_residual(analytic_const_solution, parse("1", []))
    assert 1.7 <= study.estimated_order <= 2.3
    # truncation at the coarser level scales like h^2
    coarse = study.levels[0]
    assert coarse[2] < 50 * coarse[1] ** 2


def test_differential_form_zero_solution_zero_residual():
    r = np.linspace(1e-6, 1.0, 2049)
    sol = RadialSolution(n=3, R=1.0, r=r, u=np.zeros_like(r),
                         du=np.zeros_like(r), alpha=1.0)
    study = differential_form_residual(sol, parse("u", ["u"]))
    assert study.max_residual < 1e-14


def test_differential_form_shooting_order(ball_cubic):
    prob, sol = ball_cubic
    study = differential_form_residual(sol, prob.f)
    assert 1.7 <= study.estimated_order <= 2.3


def test_differential_form_pair_analytic(analytic_const_pair):
    study = differential_form_residual(analytic_const_pair,
                                       parse("1", []), parse("1", []))
    assert 1.7 <= study.estimated_order <= 2.3


def test_z_equation_analytic_machine_level(analytic_const_solution):
    # z = -r^2/3 is quadratic: centred differences are exact and the
    # residual reduces to roundoff
    study = z_equation_residual(analytic_const_solution, parse("1", []))
    assert study.max_residual <= 1e-10


def test_z_equation_zero_solution():
    r = np.linspace(1e-6, 1.0, 2049)
    sol = RadialSolution(n=3, R=1.0, r=r, u=np.zeros_like(r),
                         du=np.zeros_like(r), alpha=1.0)
    study = z_equation_residual(sol, parse("u", ["u"]))
    assert study.max_residual < 1e-14


def test_z_equation_shooting_order(ball_cubic):
    prob, sol = ball_cubic
    study = z_equation_residual(sol, prob.f)
    assert 1.7 <= study.estimated_order <= 2.3


def test_z_equation_pair_components(analytic_const_pair):
    study = z_equation_residual(analytic_const_pair, parse("1", []), parse("1", []))
    assert set(study.components) == {"p", "q"}
    assert study.components["p"] <= 1e-8
    assert study.components["q"] <= 1e-8


# ---------------------------------------------------------------------------
# energy identities
# ---------------------------------------------------------------------------

def test_energy_scalar_constant(ball_const):
    prob, sol = ball_const
    report = energy_identities(sol, prob.f)
    assert report.values["int_u_f"] == pytest.approx(FOUR_PI_45, rel=1e-8)
    assert report.values["int_grad_u_sq"] == pytest.approx(FOUR_PI_45, rel=1e-8)
    assert report.max_rel_diff < 1e-8


def test_energy_pair_constant(pair_const):
    prob, sol = pair_const
    report = energy_identities(sol, prob.f, prob.g)
    for value in report.values.values():
        assert value == pytest.approx(FOUR_PI_45, rel=1e-8)
    assert report.max_rel_diff < 1e-8


def test_energy_zero_solution():
    r = np.linspace(1e-6, 1.0, 2049)
    sol = RadialSolution(n=3, R=1.0, r=r, u=np.zeros_like(r),
                         du=np.zeros_like(r), alpha=1.0)
    report = energy_identities(sol, parse("u", ["u"]))
    assert all(v == 0.0 for v in report.values.values())


# ---------------------------------------------------------------------------
# quadrature invariants
# ---------------------------------------------------------------------------

def _subsample(sol, stride):
    return RadialSolution(n=sol.n, R=sol.R, r=sol.r[::stride],
                          u=sol.u[::stride], du=sol.du[::stride],
                          alpha=sol.alpha,
                          v=None if sol.v is None else sol.v[::stride],
                          dv=None if sol.dv is None else sol.dv[::stride],
                          beta=sol.beta)


def test_quadrature_refinement_stability(ball_cubic):
    prob, sol = ball_cubic
    fine = scalar_identity_radial(sol, prob.f)
    coarse = scalar_identity_radial(_subsample(sol, 2), prob.f)
    assert fine.lhs_total == pytest.approx(coarse.lhs_total, rel=1e-8)
    assert fine.rhs_boundary == pytest.approx(coarse.rhs_boundary, rel=1e-8)


def test_scaled_gradient_field(ball_const, pair_const):
    from pohozaev.identity import scaled_gradient_field

    _, sol = ball_const
    field = scaled_gradient_field(sol)
    assert abs(field.z[0]) < 1e-6
    assert np.allclose(field.z, sol.r * sol.du)
    _, pair_sol = pair_const
    pair_field = scaled_gradient_field(pair_sol)
    assert pair_field.p is not None and pair_field.q is not None
    assert np.allclose(pair_field.p, pair_field.q)


def test_report_serialization_roundtrip(ball_const):
    import json

    prob, sol = ball_const
    report = scalar_identity_radial(sol, prob.f)
    data = json.loads(report.to_json())
    assert data["lhs_total"] == report.lhs_total
    assert set(data["lhs_terms"]) == {"2nF", "(2-n)uf", "2xFx"}
    text = report.to_text()
    assert "rel_residual" in text


# ---------------------------------------------------------------------------
# rectangle-grid identity
# ---------------------------------------------------------------------------

def test_grid_identity_constant_source(square_const):
    dom, f, sol = square_const
    report = scalar_identity_grid(sol, f)
    # exact series value of the volume side: 4 * integral u = 0.14057701...
    assert report.lhs_total == pytest.approx(0.140577015, abs=5e-6)
    assert report.lhs_terms["(2-n)uf"] == 0.0
    assert report.rel_residual < 5e-4


def test_grid_identity_gap_decreases_at_order(square_const):
    dom, f, _ = square_const
    gaps = {}
    for nodes in (65, 129, 257):
        cfg = NewtonConfig(N1=nodes - 1, N2=nodes - 1, method="direct")
        sol = solve_scalar_grid(dom, f, cfg)
        gaps[nodes] = scalar_identity_grid(sol, f).abs_residual
    order1 = math.log2(gaps[65] / gaps[129])
    order2 = math.log2(gaps[129] / gaps[257])
    assert order1 >= 1.5 and order2 >= 1.5


def test_grid_identity_x_dependent_term():
    dom = RectDomain(0.5, 0.5)
    f = parse("1 + x1/2", ["x1", "x2", "u"])
    sol = solve_scalar_grid(dom, f, NewtonConfig(N1=128, N2=128, method="direct"))
    report = scalar_identity_grid(sol, f)
    assert report.lhs_terms["2xFx"] != 0.0
    assert report.rel_residual < 1e-3


def test_grid_identity_zero_solution():
    dom = RectDomain(0.5, 0.5)
    f = parse("0", [])
    sol = solve_scalar_grid(dom, f, NewtonConfig(N1=32, N2=32))
    report = scalar_identity_grid(sol, f)
    assert report.lhs_total == pytest.approx(0.0, abs=1e-14)
    assert report.rhs_boundary == pytest.approx(0.0, abs=1e-14)


def test_grid_energy_identity(square_const):
    dom, f, sol = square_const
    report = energy_identities(sol, f)
    assert report.max_rel_diff < 1e-3
