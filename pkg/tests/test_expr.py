import math

import numpy as np
import pytest

from pohozaev.errors import EvalDomainError, ExprSyntaxError, UndeclaredSymbolError
from pohozaev.expr import (
    NumericAntiderivative,
    Sum,
    antiderivative_in,
    antiderivative_value,
    differentiate,
    evaluate,
    free_symbols,
    parse,
    simplify,
    var,
)


def test_parse_two_summands():
    e = parse("v^3 + u^2", ["u", "v"])
    assert isinstance(simplify(e), Sum)
    assert evaluate(e, {"u": 3.0, "v": 2.0}) == 17.0


def test_parse_rejects_undeclared_symbol():
    with pytest.raises(UndeclaredSymbolError, match="undeclared symbol p"):
        parse("u^p", ["u"])


def test_parse_coefficient_expression():
    e = parse("(1+x1/2)*u", ["x1", "u"])
    assert evaluate(e, {"x1": 2.0, "u": 3.0}) == pytest.approx(6.0, abs=1e-15)


def test_parse_syntax_error_reports_position():
    with pytest.raises(ExprSyntaxError) as err:
        parse("u + * v", ["u", "v"])
    assert "position" in str(err.value)


def test_parse_unbalanced_parenthesis():
    with pytest.raises(ExprSyntaxError):
        parse("(u + v", ["u", "v"])


def test_parse_exponent_must_be_constant():
    with pytest.raises(ExprSyntaxError, match="constant"):
        parse("u^v", ["u", "v"])


def test_parse_constant_exponent_arithmetic():
    e = parse("u^(2+1)", ["u"])
    assert evaluate(e, {"u": 2.0}) == 8.0


def test_differentiate_power_rule():
    e = parse("u^3", ["u"])
    d = differentiate(e, "u")
    for x in (0.5, 1.0, 2.0):
        assert evaluate(d, {"u": x}) == pytest.approx(3 * x ** 2, rel=1e-14)


def test_differentiate_two_powers():
    e = parse("v^3 + u^4", ["u", "v"])
    dv = differentiate(e, "v")
    du = differentiate(e, "u")
    assert evaluate(dv, {"u": 1.0, "v": 2.0}) == pytest.approx(12.0)
    assert evaluate(du, {"u": 2.0, "v": 1.0}) == pytest.approx(32.0)


def test_differentiate_product_rule_with_coefficient():
    e = parse("(1+x1/2)*u", ["x1", "u"])
    d = differentiate(e, "x1")
    assert evaluate(d, {"x1": 7.0, "u": 4.0}) == pytest.approx(2.0)


def test_evaluate_basics():
    assert evaluate(parse("v^3", ["v"]), {"v": 2.0}) == 8.0
    assert evaluate(parse("exp(u)-1", ["u"]), {"u": 0.0}) == 0.0


def test_evaluate_domain_errors():
    with pytest.raises(EvalDomainError):
        evaluate(parse("u^0.5", ["u"]), {"u": -1.0})
    with pytest.raises(EvalDomainError):
        evaluate(parse("log(u)", ["u"]), {"u": 0.0})
    with pytest.raises(EvalDomainError):
        evaluate(parse("1/u", ["u"]), {"u": 0.0})


def test_evaluate_zero_base_positive_fractional_power():
    # Dirichlet boundary values hit u = 0 exactly; u^p must extend there
    assert evaluate(parse("u^2.5", ["u"]), {"u": 0.0}) == 0.0


def test_evaluate_vectorized():
    e = parse("u^2 + v", ["u", "v"])
    out = evaluate(e, {"u": np.array([1.0, 2.0]), "v": np.array([1.0, 1.0])})
    assert np.allclose(out, [2.0, 5.0])


def test_antiderivative_power():
    F = antiderivative_in(parse("v^3", ["v"]), "v")
    assert evaluate(F, {"v": 2.0}) == pytest.approx(4.0)


def test_antiderivative_var_free_coefficient():
    F = antiderivative_in(parse("1 + x1/2", ["x1", "u"]), "u")
    assert evaluate(F, {"x1": 2.0, "u": 3.0}) == pytest.approx(6.0)


def test_antiderivative_exponential():
    F = antiderivative_in(parse("exp(2*u)", ["u"]), "u")
    assert evaluate(F, {"u": 0.0}) == pytest.approx(0.0, abs=1e-15)
    assert evaluate(F, {"u": 1.0}) == pytest.approx((math.e ** 2 - 1) / 2)


def test_antiderivative_fallback_marker():
    F = antiderivative_in(parse("exp(u*u)", ["u"]), "u")
    assert isinstance(F, NumericAntiderivative)
    # independent oracle: composite Simpson refinement of the same integral
    grid = np.linspace(0.0, 1.0, 20001)
    vals = np.exp(grid ** 2)
    from scipy.integrate import simpson
    expected = simpson(vals, x=grid)
    assert F.value({"u": 1.0}) == pytest.approx(expected, rel=1e-9)


def test_antiderivative_inverse_power_falls_back():
    F = antiderivative_in(parse("1/u", ["u"]), "u")
    assert isinstance(F, NumericAntiderivative)


def test_numeric_antiderivative_vectorized():
    F = antiderivative_in(parse("exp(u*u)", ["u"]), "u")
    out = antiderivative_value(F, {"u": np.array([0.0, 1.0])})
    assert out[0] == pytest.approx(0.0, abs=1e-12)
    assert out[1] == pytest.approx(1.4626517459071815, rel=1e-10)


def test_simplify_identities():
    assert str(simplify(parse("0*u + 1*v", ["u", "v"]))) == "v"
    assert str(simplify(parse("u^1", ["u"]))) == "u"
    assert str(simplify(parse("2+3", []))) == "5"


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

_CASES = [
    ("u^3", ["u"], "u"),
    ("v^2.5 + u^2", ["u", "v"], "v"),
    ("(1+x1/2)*u", ["x1", "u"], "u"),
    ("(1+x1/2)*u", ["x1", "u"], "x1"),
    ("exp(2*u) - 1", ["u"], "u"),
    ("log(u) * v", ["u", "v"], "u"),
    ("u/v", ["u", "v"], "v"),
    ("(u + v)^2 / (1 + u)", ["u", "v"], "u"),
    ("exp(u*v)", ["u", "v"], "v"),
    ("u^(-2)", ["u"], "u"),
]


@pytest.mark.parametrize("text,symbols,wrt", _CASES)
def test_derivative_matches_finite_differences(text, symbols, wrt):
    e = parse(text, symbols)
    d = differentiate(e, wrt)
    rng = np.random.default_rng(42)
    step = 1e-5
    for _ in range(200):
        binding = {s: float(rng.uniform(0.5, 2.0)) for s in symbols}
        up = dict(binding, **{wrt: binding[wrt] + step})
        dn = dict(binding, **{wrt: binding[wrt] - step})
        fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * step)
        exact = evaluate(d, binding)
        assert exact == pytest.approx(fd, rel=1e-6, abs=1e-9)


_SYMBOLIC_ANTIDERIVATIVES = [
    ("v^3", ["v"], "v"),
    ("v^2.5", ["v"], "v"),
    ("1 + x1/2", ["x1", "u"], "u"),
    ("exp(2*u)", ["u"], "u"),
    ("3*u^2 + 2*u + 1", ["u"], "u"),
    ("u^2 * x1 + exp(u)", ["x1", "u"], "u"),
]


@pytest.mark.parametrize("text,symbols,wrt", _SYMBOLIC_ANTIDERIVATIVES)
def test_antiderivative_vanishes_at_zero(text, symbols, wrt):
    F = antiderivative_in(parse(text, symbols), wrt)
    assert not isinstance(F, NumericAntiderivative)
    binding = {s: 1.3 for s in symbols}
    binding[wrt] = 0.0
    assert abs(evaluate(F, binding)) < 1e-15


@pytest.mark.parametrize("text,symbols,wrt", _SYMBOLIC_ANTIDERIVATIVES)
def test_antiderivative_inverts_differentiation(text, symbols, wrt):
    e = parse(text, symbols)
    F = antiderivative_in(e, wrt)
    back = differentiate(F, wrt)
    rng = np.random.default_rng(7)
    for _ in range(50):
        binding = {s: float(rng.uniform(0.5, 2.0)) for s in symbols}
        assert evaluate(back, binding) == pytest.approx(
            evaluate(e, binding), rel=1e-10)


@pytest.mark.parametrize("text,symbols", [(t, s) for t, s, _ in _CASES])
def test_simplify_preserves_evaluation(text, symbols):
    e = parse(text, symbols)
    s = simplify(e)
    rng = np.random.default_rng(3)
    for _ in range(50):
        binding = {sym: float(rng.uniform(0.5, 2.0)) for sym in symbols}
        assert evaluate(s, binding) == pytest.approx(
            evaluate(e, binding), rel=1e-12)


def test_free_symbols():
    e = parse("(1+x1/2)*u + exp(v)", ["x1", "u", "v"])
    assert free_symbols(e) == {"x1", "u", "v"}


def test_operator_overloading_builds_trees():
    u = var("u")
    e = 2 * u ** 3 + 1
    assert evaluate(e, {"u": 2.0}) == 17.0
