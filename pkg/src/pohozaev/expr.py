"""Symbolic expression engine.

Supplies exact partial derivatives and antiderivatives of the nonlinearities
(f, g) and Hamiltonians (H) consumed by the solvers, identity verifiers and
criteria checkers.  The grammar is deliberately small: sums, products,
quotients, powers with constant real exponent, exp and log.  Trees are
immutable after construction and safe to evaluate from concurrent workers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np
from scipy.integrate import quad

from .defaults import QUAD_ABS_TOL
from .errors import EvalDomainError, ExprSyntaxError, UndeclaredSymbolError

Value = Union[float, np.ndarray]


class ExprNode:
    """Base class for expression tree nodes.  Nodes are immutable."""

    def __add__(self, other):
        return Sum((self, _coerce(other)))

    def __radd__(self, other):
        return Sum((_coerce(other), self))

    def __sub__(self, other):
        return Sum((self, Prod((Const(-1.0), _coerce(other)))))

    def __rsub__(self, other):
        return Sum((_coerce(other), Prod((Const(-1.0), self))))

    def __mul__(self, other):
        return Prod((self, _coerce(other)))

    def __rmul__(self, other):
        return Prod((_coerce(other), self))

    def __truediv__(self, other):
        return Quot(self, _coerce(other))

    def __rtruediv__(self, other):
        return Quot(_coerce(other), self)

    def __pow__(self, exponent):
        if isinstance(exponent, Const):
            exponent = exponent.value
        if not isinstance(exponent, (int, float)):
            raise TypeError("exponent must be a real constant")
        return Pow(self, float(exponent))

    def __neg__(self):
        return Prod((Const(-1.0), self))

    def __str__(self):
        return to_string(self)


def _coerce(x) -> ExprNode:
    if isinstance(x, ExprNode):
        return x
    if isinstance(x, (int, float)):
        return Const(float(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


@dataclass(frozen=True)
class Const(ExprNode):
    value: float


@dataclass(frozen=True)
class Var(ExprNode):
    name: str


@dataclass(frozen=True)
class Sum(ExprNode):
    terms: tuple


@dataclass(frozen=True)
class Prod(ExprNode):
    factors: tuple


@dataclass(frozen=True)
class Quot(ExprNode):
    num: ExprNode
    den: ExprNode


@dataclass(frozen=True)
class Pow(ExprNode):
    base: ExprNode
    exponent: float


@dataclass(frozen=True)
class Exp(ExprNode):
    arg: ExprNode


@dataclass(frozen=True)
class Log(ExprNode):
    arg: ExprNode


def const(value: float) -> Const:
    return Const(float(value))


def var(name: str) -> Var:
    return Var(name)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCTIONS = {"exp": Exp, "log": Log}


class _Parser:
    """Recursive-descent parser for the infix grammar.

    Exponents must fold to a constant: the tree's power node carries a real
    exponent, which keeps symbolic differentiation total.
    """

    def __init__(self, text: str, symbols: frozenset):
        self.text = text
        self.symbols = symbols
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                stripped = text[pos:].lstrip()
                if not stripped:
                    break
                at = len(text) - len(stripped)
                raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", at)
            if m.lastgroup is not None:
                self.tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, pos = self.next()
        if kind != "op" or value != op:
            raise ExprSyntaxError(f"expected {op!r}", pos)

    def parse(self) -> ExprNode:
        e = self.expr()
        kind, value, pos = self.peek()
        if kind is not None:
            raise ExprSyntaxError(f"unexpected token {value!r}", pos)
        return e

    def expr(self) -> ExprNode:
        terms = [self.term()]
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                t = self.term()
                terms.append(t if value == "+" else Prod((Const(-1.0), t)))
            else:
                break
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self) -> ExprNode:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                rhs = self.unary()
                node = Prod((node, rhs)) if value == "*" else Quot(node, rhs)
            else:
                break
        return node

    def unary(self) -> ExprNode:
        kind, value, _ = self.peek()
        if kind == "op" and value in "+-":
            self.next()
            inner = self.unary()
            return inner if value == "+" else Prod((Const(-1.0), inner))
        return self.power()

    def power(self) -> ExprNode:
        base = self.atom()
        kind, value, pos = self.peek()
        if kind == "op" and value == "^":
            self.next()
            exponent = simplify(self.unary())
            if not isinstance(exponent, Const):
                raise ExprSyntaxError("exponent must fold to a constant", pos)
            return Pow(base, exponent.value)
        return base

    def atom(self) -> ExprNode:
        kind, value, pos = self.next()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return _FUNCTIONS[value](arg)
            if value not in self.symbols:
                raise UndeclaredSymbolError(value, pos)
            return Var(value)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError("expected a number, symbol or parenthesis", pos)


def parse(text: str, symbols: Iterable[str]) -> ExprNode:
    """Parse an infix expression over the declared symbol set.

    Raises ExprSyntaxError with the offending position, or
    UndeclaredSymbolError for names outside the symbol set.
    """
    return _Parser(text, frozenset(symbols)).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate(e: ExprNode, binding: Mapping[str, Value]) -> Value:
    """Evaluate the tree at a binding of all free variables.

    Values may be scalars or numpy arrays (broadcast elementwise).  Power
    with non-integer exponent requires a positive base, except that a base
    of exactly 0 with positive exponent evaluates to 0 (positive solutions
    attain 0 on the Dirichlet boundary, where u^p must still make sense).
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return binding[e.name]
        except KeyError:
            raise UndeclaredSymbolError(e.name) from None
    if isinstance(e, Sum):
        total = evaluate(e.terms[0], binding)
        for t in e.terms[1:]:
            total = total + evaluate(t, binding)
        return total
    if isinstance(e, Prod):
        prod = evaluate(e.factors[0], binding)
        for f in e.factors[1:]:
            prod = prod * evaluate(f, binding)
        return prod
    if isinstance(e, Quot):
        num = evaluate(e.num, binding)
        den = evaluate(e.den, binding)
        if np.any(den == 0):
            raise EvalDomainError("division by zero")
        return num / den
    if isinstance(e, Pow):
        base = evaluate(e.base, binding)
        k = e.exponent
        if float(k).is_integer():
            if k < 0 and np.any(base == 0):
                raise EvalDomainError("zero base with negative exponent")
            return base ** k
        if k > 0:
            if np.any(np.asarray(base) < 0):
                raise EvalDomainError(
                    f"negative base for non-integer exponent {k}")
            return base ** k
        if np.any(np.asarray(base) <= 0):
            raise EvalDomainError(
                f"non-positive base for non-integer exponent {k}")
        return base ** k
    if isinstance(e, Exp):
        return np.exp(evaluate(e.arg, binding))
    if isinstance(e, Log):
        arg = evaluate(e.arg, binding)
        if np.any(np.asarray(arg) <= 0):
            raise EvalDomainError("log of a non-positive value")
        return np.log(arg)
    raise TypeError(f"unknown node {type(e).__name__}")


def free_symbols(e: ExprNode) -> frozenset:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Sum):
        return frozenset().union(*(free_symbols(t) for t in e.terms))
    if isinstance(e, Prod):
        return frozenset().union(*(free_symbols(f) for f in e.factors))
    if isinstance(e, Quot):
        return free_symbols(e.num) | free_symbols(e.den)
    if isinstance(e, Pow):
        return free_symbols(e.base)
    return free_symbols(e.arg)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def differentiate(e: ExprNode, name: str) -> ExprNode:
    """Exact symbolic partial derivative with respect to the named variable."""
    return simplify(_diff(e, name))


def _diff(e: ExprNode, name: str) -> ExprNode:
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == name else 0.0)
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, name) for t in e.terms))
    if isinstance(e, Prod):
        terms = []
        for i in range(len(e.factors)):
            factors = list(e.factors)
            factors[i] = _diff(factors[i], name)
            terms.append(Prod(tuple(factors)))
        return Sum(tuple(terms))
    if isinstance(e, Quot):
        num = Sum((
            Prod((_diff(e.num, name), e.den)),
            Prod((Const(-1.0), e.num, _diff(e.den, name))),
        ))
        return Quot(num, Pow(e.den, 2.0))
    if isinstance(e, Pow):
        return Prod((Const(e.exponent), Pow(e.base, e.exponent - 1.0), _diff(e.base, name)))
    if isinstance(e, Exp):
        return Prod((Exp(e.arg), _diff(e.arg, name)))
    if isinstance(e, Log):
        return Quot(_diff(e.arg, name), e.arg)
    raise TypeError(f"unknown node {type(e).__name__}")


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def simplify(e: ExprNode) -> ExprNode:
    """Fold constants and remove 0/1 identities.

    Evaluation is unchanged at every binding; no canonical-form rewriting
    is attempted.
    """
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        terms = []
        const_part = 0.0
        for t in e.terms:
            s = simplify(t)
            parts = s.terms if isinstance(s, Sum) else (s,)
            for p in parts:
                if isinstance(p, Const):
                    const_part += p.value
                else:
                    terms.append(p)
        if const_part != 0.0 or not terms:
            terms.append(Const(const_part))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))
    if isinstance(e, Prod):
        factors = []
        const_part = 1.0
        for f in e.factors:
            s = simplify(f)
            parts = s.factors if isinstance(s, Prod) else (s,)
            for p in parts:
                if isinstance(p, Const):
                    const_part *= p.value
                else:
                    factors.append(p)
        if const_part == 0.0:
            return Const(0.0)
        if const_part != 1.0 or not factors:
            factors.insert(0, Const(const_part))
        return factors[0] if len(factors) == 1 else Prod(tuple(factors))
    if isinstance(e, Quot):
        num = simplify(e.num)
        den = simplify(e.den)
        if isinstance(num, Const) and num.value == 0.0:
            return Const(0.0)
        if isinstance(den, Const) and den.value != 0.0:
            if isinstance(num, Const):
                return Const(num.value / den.value)
            if den.value == 1.0:
                return num
            return simplify(Prod((Const(1.0 / den.value), num)))
        return Quot(num, den)
    if isinstance(e, Pow):
        base = simplify(e.base)
        if e.exponent == 0.0:
            return Const(1.0)
        if e.exponent == 1.0:
            return base
        if isinstance(base, Const):
            try:
                return Const(float(evaluate(Pow(base, e.exponent), {})))
            except EvalDomainError:
                pass
        return Pow(base, e.exponent)
    if isinstance(e, Exp):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            return Const(math.exp(arg.value))
        return Exp(arg)
    if isinstance(e, Log):
        arg = simplify(e.arg)
        if isinstance(arg, Const) and arg.value > 0:
            return Const(math.log(arg.value))
        return Log(arg)
    raise TypeError(f"unknown node {type(e).__name__}")


# ---------------------------------------------------------------------------
# Antiderivatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NumericAntiderivative:
    """Marker directing callers to adaptive quadrature of integral_0^s e dt.

    Returned when no symbolic antiderivative exists in the supported
    grammar.  value() integrates with adaptive Gauss-Kronrod quadrature at
    absolute tolerance QUAD_ABS_TOL.
    """

    integrand: ExprNode
    var: str

    def value(self, binding: Mapping[str, Value]) -> Value:
        others = {k: v for k, v in binding.items() if k != self.var}
        upper = binding[self.var]
        arrays = {k: np.asarray(v) for k, v in others.items()}
        upper_arr = np.asarray(upper, dtype=float)
        shape = np.broadcast_shapes(upper_arr.shape, *(a.shape for a in arrays.values()))
        if shape == ():
            return self._point({k: float(v) for k, v in others.items()}, float(upper))
        upper_b = np.broadcast_to(upper_arr, shape)
        arrays_b = {k: np.broadcast_to(a, shape) for k, a in arrays.items()}
        out = np.empty(shape, dtype=float)
        it = np.nditer(upper_b, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            point = {k: float(a[idx]) for k, a in arrays_b.items()}
            out[idx] = self._point(point, float(upper_b[idx]))
        return out

    def _point(self, fixed: dict, upper: float) -> float:
        def integrand(t):
            return float(evaluate(self.integrand, {**fixed, self.var: t}))

        result, _ = quad(integrand, 0.0, upper, epsabs=QUAD_ABS_TOL, limit=200)
        return result


Antiderivative = Union[ExprNode, NumericAntiderivative]

_FALLBACK = object()


def antiderivative_in(e: ExprNode, name: str) -> Antiderivative:
    """Antiderivative in the named variable, vanishing at 0.

    Returns an exact tree when every summand is a var-free coefficient times
    a power or exp of the variable; otherwise returns a
    NumericAntiderivative marker.  Powers u^k with k <= -1 fall back to the
    marker because their antiderivative cannot vanish at 0.
    """
    s = simplify(e)
    terms = s.terms if isinstance(s, Sum) else (s,)
    results = []
    for t in terms:
        r = _term_antiderivative(t, name)
        if r is _FALLBACK:
            return NumericAntiderivative(s, name)
        results.append(r)
    return simplify(Sum(tuple(results)) if len(results) > 1 else results[0])


def _term_antiderivative(t: ExprNode, name: str):
    if name not in free_symbols(t):
        return Prod((t, Var(name)))
    coeff, core = _split_coefficient(t, name)
    if core is _FALLBACK:
        return _FALLBACK
    kind, payload = core
    if kind == "power":
        k = payload
        if k + 1.0 <= 0.0:
            return _FALLBACK
        return Prod((Const(1.0 / (k + 1.0)), *coeff, Pow(Var(name), k + 1.0)))
    if kind == "exp":
        c = payload
        # integral_0^s exp(c t) dt = (exp(c s) - 1) / c
        return Prod((Const(1.0 / c), *coeff,
                     Sum((Exp(Prod((Const(c), Var(name)))), Const(-1.0)))))
    return _FALLBACK


def _split_coefficient(t: ExprNode, name: str):
    """Split a term into var-free coefficient factors and its var core.

    The core is ("power", exponent) for c * u^k, or ("exp", c) for
    coeff * exp(c*u).  Anything else is _FALLBACK.
    """
    factors = list(t.factors) if isinstance(t, Prod) else [t]
    coeff = []
    power_exponent = 0.0
    exp_rate = None
    saw_var = False
    for f in factors:
        if name not in free_symbols(f):
            coeff.append(f)
            continue
        if isinstance(f, Var) and f.name == name:
            power_exponent += 1.0
            saw_var = True
        elif isinstance(f, Pow) and isinstance(f.base, Var) and f.base.name == name:
            power_exponent += f.exponent
            saw_var = True
        elif isinstance(f, Quot):
            if name in free_symbols(f.num) or not (
                isinstance(f.den, Pow)
                and isinstance(f.den.base, Var)
                and f.den.base.name == name
            ):
                return coeff, _FALLBACK
            coeff.append(f.num)
            power_exponent -= f.den.exponent
            saw_var = True
        elif isinstance(f, Exp):
            rate = _linear_rate(f.arg, name)
            if rate is None or exp_rate is not None:
                return coeff, _FALLBACK
            exp_rate = rate
        else:
            return coeff, _FALLBACK
    if exp_rate is not None:
        if saw_var:
            return coeff, _FALLBACK  # mixed power * exp has no closed form here
        return coeff, ("exp", exp_rate)
    return coeff, ("power", power_exponent)


def _linear_rate(arg: ExprNode, name: str):
    """Rate c when arg == c * name with c a nonzero constant, else None."""
    a = simplify(arg)
    if isinstance(a, Var) and a.name == name:
        return 1.0
    if isinstance(a, Prod) and len(a.factors) == 2:
        c, v = a.factors
        if isinstance(c, Const) and isinstance(v, Var) and v.name == name and c.value != 0:
            return c.value
    return None


def antiderivative_value(F: Antiderivative, binding: Mapping[str, Value]) -> Value:
    """Evaluate either form of antiderivative at a binding."""
    if isinstance(F, NumericAntiderivative):
        return F.value(binding)
    return evaluate(F, binding)


def antiderivative_partial(f: ExprNode, uvar: str, spatial: str) -> Antiderivative:
    """d/dx_i of the antiderivative F(x, u) = integral_0^u f(x, t) dt.

    Differentiation under the integral sign: F_{x_i} is the antiderivative
    of f_{x_i}, which keeps the numeric fallback usable.
    """
    return antiderivative_in(differentiate(f, spatial), uvar)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def to_string(e: ExprNode) -> str:
    return _render(e, 0)


def _render(e: ExprNode, parent_prec: int) -> str:
    if isinstance(e, Const):
        return f"{e.value:g}" if e.value >= 0 else f"({e.value:g})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Sum):
        s = " + ".join(_render(t, 1) for t in e.terms)
        return f"({s})" if parent_prec > 1 else s
    if isinstance(e, Prod):
        s = "*".join(_render(f, 2) for f in e.factors)
        return f"({s})" if parent_prec > 2 else s
    if isinstance(e, Quot):
        s = f"{_render(e.num, 2)}/{_render(e.den, 3)}"
        return f"({s})" if parent_prec > 2 else s
    if isinstance(e, Pow):
        exp_str = f"{e.exponent:g}" if e.exponent >= 0 else f"({e.exponent:g})"
        return f"{_render(e.base, 3)}^{exp_str}"
    if isinstance(e, Exp):
        return f"exp({_render(e.arg, 0)})"
    if isinstance(e, Log):
        return f"log({_render(e.arg, 0)})"
    raise TypeError(f"unknown node {type(e).__name__}")
