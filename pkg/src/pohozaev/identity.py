"""Identity verifiers.

Evaluates both sides of every Pohozaev-type identity on computed or supplied
solutions: the scalar identity on balls and rectangles, the pair identity
with its free parameter, the general m-pair Hamiltonian identity, the
pointwise differential form, the linearized equation for the scaled gradient
z = x . grad u, and the auxiliary energy identities.  All operations are pure
functions of immutable inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from . import defaults
from .errors import (
    GridMismatchError,
    IdentityError,
    NormalizationViolatedError,
    PositivityViolatedError,
)
from .expr import (
    Antiderivative,
    ExprNode,
    antiderivative_in,
    antiderivative_partial,
    antiderivative_value,
    differentiate,
    evaluate,
    free_symbols,
)
from .radial import RadialSolution


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2).

    Closed forms for integer and half-integer Gamma arguments, tabulated
    for n <= 12; desk-scale dimensions need no general Gamma.
    """
    if not 2 <= n <= 12:
        raise ValueError("sphere_area supports 2 <= n <= 12")
    if n % 2 == 0:
        k = n // 2
        return 2.0 * math.pi ** k / math.factorial(k - 1)
    k = (n - 1) // 2
    # Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
    return 2.0 * math.pi ** k * 4 ** k * math.factorial(k) / math.factorial(2 * k)


def _rel_residual(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), defaults.REL_RESIDUAL_FLOOR)


@dataclass(frozen=True)
class IdentityReport:
    lhs_terms: dict
    lhs_total: float
    rhs_boundary: float
    abs_residual: float
    rel_residual: float
    quadrature: dict
    flags: tuple = ()
    params: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "lhs_terms": dict(self.lhs_terms),
            "lhs_total": self.lhs_total,
            "rhs_boundary": self.rhs_boundary,
            "abs_residual": self.abs_residual,
            "rel_residual": self.rel_residual,
            "quadrature": dict(self.quadrature),
            "flags": list(self.flags),
            "params": dict(self.params),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        width = max(len(k) for k in self.lhs_terms)
        lines = [f"identity report ({self.quadrature.get('rule', '?')}, "
                 f"{self.quadrature.get('points', '?')} points)"]
        for name, value in self.lhs_terms.items():
            lines.append(f"  lhs {name:<{width}}  {value:+.12e}")
        lines.append(f"  {'lhs_total':<{width + 4}}  {self.lhs_total:+.12e}")
        lines.append(f"  {'rhs_boundary':<{width + 4}}  {self.rhs_boundary:+.12e}")
        lines.append(f"  abs_residual {self.abs_residual:.3e}   "
                     f"rel_residual {self.rel_residual:.3e}")
        if self.params:
            lines.append("  params " + json.dumps(self.params, sort_keys=True))
        if self.flags:
            lines.append("  flags: " + ", ".join(self.flags))
        return "\n".join(lines)


def _make_report(terms: dict, rhs: float, quadrature: dict,
                 flags=(), params=None) -> IdentityReport:
    lhs_total = sum(terms.values())
    return IdentityReport(
        lhs_terms=terms,
        lhs_total=lhs_total,
        rhs_boundary=rhs,
        abs_residual=abs(lhs_total - rhs),
        rel_residual=_rel_residual(lhs_total, rhs),
        quadrature=quadrature,
        flags=tuple(flags),
        params=dict(params or {}),
    )


# ---------------------------------------------------------------------------
# Radial sampling helpers
# ---------------------------------------------------------------------------

def _positive_samples(values: np.ndarray, name: str) -> np.ndarray:
    # Positivity is required strictly inside; the Dirichlet end may carry
    # roundoff of either sign, which is clipped so fractional powers of the
    # solution stay evaluable.
    interior = values[:-1]
    if np.any(interior <= 0):
        idx = int(np.argmin(interior))
        raise PositivityViolatedError(
            f"{name} is not positive inside the domain (min {interior[idx]:.3e} "
            f"at sample {idx})")
    return np.maximum(values, 0.0)


def _ball_integral(n: int, r: np.ndarray, values: np.ndarray) -> float:
    return sphere_area(n) * float(simpson(values * r ** (n - 1), x=r))


def _dilation_values(f: ExprNode, uvar: str, binding: dict) -> np.ndarray:
    """Sum of x_i * d/dx_i of the antiderivative F, evaluated on samples.

    Radial data only carries the symbol r, for which the dilation term is
    r * F_r; F_r is the antiderivative of f_r.
    """
    r = binding["r"]
    if "r" not in free_symbols(f):
        return np.zeros_like(np.asarray(r, dtype=float))
    Fr = antiderivative_partial(f, uvar, "r")
    return r * np.asarray(antiderivative_value(Fr, binding), dtype=float)


def equation_residual_radial(sol: RadialSolution, f: ExprNode,
                             g: Optional[ExprNode] = None) -> float:
    """Max-norm residual of the radial PDE over interior nodes.

    The Laplacian uses centred second differences of the stored values and
    the stored first derivative for the (n-1)/r term; two nodes nearest each
    end are excluded.  The identities hold only for solutions, so verifiers
    gate on this before trusting supplied data.  Pair components are clipped
    at zero (they are positivity-gated upstream); the scalar equation is
    evaluated at the raw values since the scalar identity holds for
    sign-changing solutions too.
    """
    if g is None:
        return _component_residual(sol, sol.u, sol.du, f,
                                   {"r": sol.r, "u": sol.u})
    res = _component_residual(sol, sol.u, sol.du, f,
                              {"r": sol.r, "v": np.maximum(sol.v, 0.0)})
    res_v = _component_residual(sol, sol.v, sol.dv, g,
                                {"r": sol.r, "u": np.maximum(sol.u, 0.0)})
    return max(res, res_v)


def _component_residual(sol: RadialSolution, w: np.ndarray, dw: np.ndarray,
                        rhs_expr: ExprNode, binding: dict) -> float:
    # normalized by the forcing scale: the gate separates solutions from
    # garbage, and the raw FD truncation grows with |f| on steep solutions
    r, h, n = sol.r, sol.h, sol.n
    lap = np.empty_like(w)
    lap[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / h ** 2 + (n - 1) / r[1:-1] * dw[1:-1]
    forcing = np.asarray(evaluate(rhs_expr, binding), dtype=float)
    forcing = np.broadcast_to(forcing, w.shape)
    resid = lap[2:-2] + forcing[2:-2]
    scale = max(1.0, float(np.max(np.abs(forcing[2:-2]))))
    return float(np.max(np.abs(resid))) / scale


def _equation_flags(sol: RadialSolution, f: ExprNode,
                    g: Optional[ExprNode] = None) -> tuple:
    res = equation_residual_radial(sol, f, g)
    if res > defaults.EQUATION_RESIDUAL_GATE:
        return ("EquationResidualHigh",), res
    return (), res


# ---------------------------------------------------------------------------
# Scalar and pair identities on balls
# ---------------------------------------------------------------------------

def scalar_identity_radial(sol: RadialSolution, f: ExprNode) -> IdentityReport:
    """Both sides of the scalar identity on the ball.

    LHS integrates 2n F + (2-n) u f + 2 r F_r against the sphere measure;
    RHS is sigma_n R^n u'(R)^2, with u'(R) taken from the integrator's
    endpoint derivative, the most accurate datum available.
    """
    if sol.kind != "scalar":
        raise IdentityError("scalar identity requires a scalar solution")
    n, r = sol.n, sol.r
    # no positivity gate here: the scalar identity holds for any classical
    # solution; only the pair and general identities require positive data
    flags, eq_res = _equation_flags(sol, f)
    binding = {"r": r, "u": sol.u}
    F = antiderivative_in(f, "u")
    Fv = np.broadcast_to(np.asarray(antiderivative_value(F, binding), dtype=float), sol.u.shape)
    fv = np.broadcast_to(np.asarray(evaluate(f, binding), dtype=float), sol.u.shape)
    terms = {
        "2nF": 2 * n * _ball_integral(n, r, Fv),
        "(2-n)uf": (2 - n) * _ball_integral(n, r, sol.u * fv),
        "2xFx": 2 * _ball_integral(n, r, _dilation_values(f, "u", binding)),
    }
    rhs = sphere_area(n) * sol.R ** n * sol.du[-1] ** 2
    quad = {"rule": "simpson", "points": int(r.size), "equation_residual": eq_res}
    return _make_report(terms, rhs, quad, flags=flags)


def pair_identity_radial(sol: RadialSolution, f: ExprNode, g: ExprNode,
                         a: float = 1.0) -> IdentityReport:
    """Both sides of the pair identity on the ball, for any real a.

    LHS integrates 2n (F+G) + (2-n) (a v f + (2-a) u g) + 2 r (F_r + G_r);
    RHS is 2 sigma_n R^n |u'(R)| |v'(R)|.  The value of the assembled LHS is
    independent of a because the integrals of v f and u g coincide on
    solutions.
    """
    if sol.kind != "pair":
        raise IdentityError("pair identity requires a pair solution")
    n, r = sol.n, sol.r
    u = _positive_samples(sol.u, "u")
    v = _positive_samples(sol.v, "v")
    flags, eq_res = _equation_flags(sol, f, g)
    bind_f = {"r": r, "v": v}
    bind_g = {"r": r, "u": u}
    F = antiderivative_in(f, "v")
    G = antiderivative_in(g, "u")
    Fv = np.broadcast_to(np.asarray(antiderivative_value(F, bind_f), dtype=float), v.shape)
    Gv = np.broadcast_to(np.asarray(antiderivative_value(G, bind_g), dtype=float), u.shape)
    fv = np.broadcast_to(np.asarray(evaluate(f, bind_f), dtype=float), v.shape)
    gv = np.broadcast_to(np.asarray(evaluate(g, bind_g), dtype=float), u.shape)
    dil = _dilation_values(f, "v", bind_f) + _dilation_values(g, "u", bind_g)
    terms = {
        "2nH": 2 * n * _ball_integral(n, r, Fv + Gv),
        "(2-n)uHu": (2 - n) * (2.0 - a) * _ball_integral(n, r, u * gv),
        "(2-n)vHv": (2 - n) * a * _ball_integral(n, r, v * fv),
        "2xHx": 2 * _ball_integral(n, r, dil),
    }
    rhs = 2 * sphere_area(n) * sol.R ** n * abs(sol.du[-1]) * abs(sol.dv[-1])
    quad = {"rule": "simpson", "points": int(r.size), "equation_residual": eq_res}
    return _make_report(terms, rhs, quad, flags=flags, params={"a": a})


# ---------------------------------------------------------------------------
# General m-pair Hamiltonian identity
# ---------------------------------------------------------------------------

def _pair_symbols(m: int):
    if m == 1:
        return ["u"], ["v"]
    return [f"u{k}" for k in range(1, m + 1)], [f"v{k}" for k in range(1, m + 1)]


def _boundary_points(n: int, R: float, count: int) -> np.ndarray:
    # deterministic sample of the sphere |x| = R: the 2n axis points plus a
    # fixed-seed isotropic sample
    rng = np.random.default_rng(20240811)
    pts = rng.standard_normal((count, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    axes = np.concatenate([np.eye(n), -np.eye(n)])
    return R * np.concatenate([axes, pts])


def check_normalization(H: ExprNode, m: int, n: int, R: float):
    """Boundary normalization: H(x, 0, ..., 0) must vanish on |x| = R.

    A nonzero constant trace c is subtracted (harmless shift); a trace that
    varies over the boundary is fatal because the boundary flux of the
    identity no longer drops.  Returns the constant shift.
    """
    us, vs = _pair_symbols(m)
    zeros = {s: 0.0 for s in us + vs}
    pts = _boundary_points(n, R, defaults.BOUNDARY_SAMPLE_COUNT)
    values = []
    for x in pts:
        binding = dict(zeros)
        binding["r"] = R
        for i in range(n):
            binding[f"x{i + 1}"] = float(x[i])
        values.append(float(evaluate(H, binding)))
    values = np.asarray(values)
    center = float(np.mean(values))
    spread = float(np.max(np.abs(values - center)))
    scale = max(1.0, abs(center))
    if spread > 1e-9 * scale:
        worst = int(np.argmax(np.abs(values - center)))
        raise NormalizationViolatedError(
            f"H(x, 0, ..., 0) varies over the boundary (spread {spread:.3e}); "
            f"sample H = {values[worst]:.6g} at x = {np.round(pts[worst], 6).tolist()}",
            point=pts[worst].tolist())
    return center


def general_identity(pairs: Sequence[RadialSolution], H: ExprNode,
                     a: Sequence[float]) -> IdentityReport:
    """The m-pair Hamiltonian identity on a common ball.

    Coefficients follow the general statement: a_k weights u_k H_{u_k} and
    (2 - a_k) weights v_k H_{v_k}.  The supplied solutions are gated by the
    PDE residual of the H-system they are claimed to solve.
    """
    m = len(pairs)
    if m == 0:
        raise IdentityError("at least one solved pair is required")
    if len(a) != m:
        raise IdentityError(f"expected {m} parameters a_k, got {len(a)}")
    n, R, r = pairs[0].n, pairs[0].R, pairs[0].r
    for s in pairs[1:]:
        if s.n != n or s.R != R or s.r.shape != r.shape or not np.allclose(s.r, r):
            raise GridMismatchError("solutions must share dimension, radius and grid")
    us, vs = _pair_symbols(m)

    shift = check_normalization(H, m, n, R)
    flags = []
    if shift != 0.0:
        H = H - shift
        flags.append("NormalizationShifted")

    allowed = set(us) | set(vs) | {"r"}
    extra = free_symbols(H) - allowed
    if extra:
        raise IdentityError(
            f"H depends on non-radial coordinates {sorted(extra)}; ball "
            "integration requires x-dependence through r only")

    binding = {"r": r}
    for sym, s in zip(us, pairs):
        binding[sym] = _positive_samples(s.u, sym)
    for sym, s in zip(vs, pairs):
        binding[sym] = _positive_samples(s.v, sym)

    def values(e: ExprNode) -> np.ndarray:
        return np.broadcast_to(np.asarray(evaluate(e, binding), dtype=float), r.shape)

    # PDE residual of the claimed H-system on the supplied data
    eq_res = 0.0
    for k, s in enumerate(pairs):
        Hv_k = differentiate(H, vs[k])
        Hu_k = differentiate(H, us[k])
        eq_res = max(eq_res, _sampled_component_residual(s, s.u, s.du, values(Hv_k)))
        eq_res = max(eq_res, _sampled_component_residual(s, s.v, s.dv, values(Hu_k)))
    if eq_res > defaults.EQUATION_RESIDUAL_GATE:
        flags.append("EquationResidualHigh")

    term_uHu = 0.0
    term_vHv = 0.0
    for k, s in enumerate(pairs):
        term_uHu += a[k] * _ball_integral(n, r, binding[us[k]] * values(differentiate(H, us[k])))
        term_vHv += (2.0 - a[k]) * _ball_integral(n, r, binding[vs[k]] * values(differentiate(H, vs[k])))
    dil = r * values(differentiate(H, "r")) if "r" in free_symbols(H) else np.zeros_like(r)
    terms = {
        "2nH": 2 * n * _ball_integral(n, r, values(H)),
        "(2-n)uHu": (2 - n) * term_uHu,
        "(2-n)vHv": (2 - n) * term_vHv,
        "2xHx": 2 * _ball_integral(n, r, dil),
    }
    rhs = sum(2 * sphere_area(n) * R ** n * abs(s.du[-1]) * abs(s.dv[-1]) for s in pairs)
    quad = {"rule": "simpson", "points": int(r.size), "equation_residual": eq_res}
    return _make_report(terms, rhs, quad, flags=flags,
                        params={"a": list(map(float, a)), "m": m})


def _sampled_component_residual(sol: RadialSolution, w: np.ndarray,
                                dw: np.ndarray, forcing: np.ndarray) -> float:
    r, h, n = sol.r, sol.h, sol.n
    lap = (w[2:] - 2 * w[1:-1] + w[:-2]) / h ** 2 + (n - 1) / r[1:-1] * dw[1:-1]
    resid = lap[1:-1] + forcing[2:-2]
    scale = max(1.0, float(np.max(np.abs(forcing[2:-2]))))
    return float(np.max(np.abs(resid))) / scale


# ---------------------------------------------------------------------------
# Differential form and z-equation residuals (radial)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledGradientField:
    """Samples of the scaled gradient x . grad u on the solution grid.

    Radially z(r) = r u'(r), which vanishes at the origin; pairs carry the
    analogous fields p = r u' and q = r v' with centred first derivatives.
    """

    r: np.ndarray
    z: Optional[np.ndarray] = None
    dz: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    dp: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    dq: Optional[np.ndarray] = None


def scaled_gradient_field(sol: RadialSolution) -> ScaledGradientField:
    h = sol.h
    if sol.kind == "scalar":
        z = sol.r * sol.du
        return ScaledGradientField(r=sol.r, z=z, dz=_central_d(z, h))
    p = sol.r * sol.du
    q = sol.r * sol.dv
    return ScaledGradientField(r=sol.r, p=p, dp=_central_d(p, h),
                               q=q, dq=_central_d(q, h))


@dataclass(frozen=True)
class ResidualStudy:
    max_residual: float
    l2_residual: float
    estimated_order: Optional[float]
    levels: tuple            # (points, h, max_residual) per level
    components: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "l2_residual": self.l2_residual,
            "estimated_order": self.estimated_order,
            "levels": [list(level) for level in self.levels],
            "components": dict(self.components),
        }


def _subsample_indices(total: int, points: int) -> np.ndarray:
    if (total - 1) % (points - 1) != 0:
        raise IdentityError(
            f"cannot subsample {total} nodes to {points}: strides must divide")
    stride = (total - 1) // (points - 1)
    return np.arange(0, total, stride)


def _central_d(w: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(w)
    d[1:-1] = (w[2:] - w[:-2]) / (2 * h)
    d[0] = (w[1] - w[0]) / h
    d[-1] = (w[-1] - w[-2]) / h
    return d


def _central_d2(w: np.ndarray, h: float) -> np.ndarray:
    d2 = np.empty_like(w)
    d2[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / h ** 2
    d2[0] = d2[1]
    d2[-1] = d2[-2]
    return d2


def _interior(values: np.ndarray) -> np.ndarray:
    # two nodes nearest each boundary are excluded from residual norms
    return values[2:-2]


def differential_form_residual(sol: RadialSolution, f: ExprNode,
                               g: Optional[ExprNode] = None,
                               levels: Sequence[int] = defaults.RESIDUAL_STUDY_LEVELS
                               ) -> ResidualStudy:
    """Pointwise residual of the divergence (differential) form.

    Computes div Phi by centred differences of r^(n-1) Phi_r and compares
    with the identity's volume integrand; the Richardson order across the
    sampling levels should be 2 for smooth solutions.
    """
    results = []
    for points in sorted(levels):
        idx = _subsample_indices(sol.r.size, points)
        if sol.kind == "scalar":
            res = _scalar_divergence_residual(sol, f, idx)
        else:
            res = _pair_divergence_residual(sol, f, g, idx)
        h = float(sol.r[idx][1] - sol.r[idx][0])
        results.append((points, h, res))
    return _study_from_levels(results)


def _study_from_levels(results) -> ResidualStudy:
    orders = []
    for (p0, h0, (m0, _)), (p1, h1, (m1, _)) in zip(results, results[1:]):
        if m1 > 0 and m0 > 0:
            orders.append(math.log(m0 / m1) / math.log(h0 / h1))
    finest = results[-1]
    return ResidualStudy(
        max_residual=finest[2][0],
        l2_residual=finest[2][1],
        estimated_order=orders[-1] if orders else None,
        levels=tuple((p, h, m[0]) for p, h, m in results),
    )


def _norms(resid: np.ndarray):
    return float(np.max(np.abs(resid))), float(np.sqrt(np.mean(resid ** 2)))


def _scalar_divergence_residual(sol: RadialSolution, f: ExprNode, idx: np.ndarray):
    n = sol.n
    r, u, du = sol.r[idx], sol.u[idx], sol.du[idx]
    h = float(r[1] - r[0])
    binding = {"r": r, "u": u}
    F = antiderivative_in(f, "u")
    Fv = np.broadcast_to(np.asarray(antiderivative_value(F, binding), dtype=float), u.shape)
    fv = np.broadcast_to(np.asarray(evaluate(f, binding), dtype=float), u.shape)
    z = r * du
    dz = _central_d(z, h)
    flux = z * du - u * dz + r * (2 * Fv - u * fv)
    # expanded divergence Phi' + (n-1) Phi / r: the 1/r factor multiplies
    # sampled values of the odd flux, not FD errors, so truncation stays
    # O(h^2) uniformly down to the axis
    div = _central_d(flux, h) + (n - 1) / r * flux
    rhs = 2 * n * Fv + (2 - n) * u * fv + 2 * _dilation_values(f, "u", binding)
    return _norms(_interior(div - rhs))


def _pair_divergence_residual(sol: RadialSolution, f: ExprNode, g: ExprNode,
                              idx: np.ndarray):
    n = sol.n
    r, u, du, v, dv = sol.r[idx], sol.u[idx], sol.du[idx], sol.v[idx], sol.dv[idx]
    h = float(r[1] - r[0])
    bind_f = {"r": r, "v": np.maximum(v, 0.0)}
    bind_g = {"r": r, "u": np.maximum(u, 0.0)}
    F = antiderivative_in(f, "v")
    G = antiderivative_in(g, "u")
    Fv = np.broadcast_to(np.asarray(antiderivative_value(F, bind_f), dtype=float), v.shape)
    Gv = np.broadcast_to(np.asarray(antiderivative_value(G, bind_g), dtype=float), u.shape)
    fv = np.broadcast_to(np.asarray(evaluate(f, bind_f), dtype=float), v.shape)
    gv = np.broadcast_to(np.asarray(evaluate(g, bind_g), dtype=float), u.shape)
    Hsum = Fv + Gv
    pk = r * du
    qk = r * dv
    dpk = _central_d(pk, h)
    dqk = _central_d(qk, h)
    flux = (du * qk - dpk * v + dv * pk - dqk * u
            + r * (2 * Hsum - u * gv - v * fv))
    div = _central_d(flux, h) + (n - 1) / r * flux
    dil = _dilation_values(f, "v", bind_f) + _dilation_values(g, "u", bind_g)
    rhs = 2 * n * Hsum + (2 - n) * (u * gv + v * fv) + 2 * dil
    return _norms(_interior(div - rhs))


def z_equation_residual(sol: RadialSolution, f: ExprNode,
                        g: Optional[ExprNode] = None,
                        levels: Sequence[int] = defaults.RESIDUAL_STUDY_LEVELS
                        ) -> ResidualStudy:
    """Residual of the linearized equation satisfied by z = x . grad u.

    Scalar: Delta z + f_u z + 2 f + r f_r should vanish.  Pairs check the
    corresponding system for p = x . grad u and q = x . grad v; components
    are reported separately and the study carries their maximum.
    """
    per_component = {}
    results = []
    for points in sorted(levels):
        idx = _subsample_indices(sol.r.size, points)
        if sol.kind == "scalar":
            res = _z_residual_scalar(sol, f, idx)
            comp = {"z": res}
        else:
            res_p = _pq_residual(sol, f, g, idx, "p")
            res_q = _pq_residual(sol, f, g, idx, "q")
            comp = {"p": res_p, "q": res_q}
            res = max(res_p, res_q, key=lambda t: t[0])
        h = float(sol.r[idx][1] - sol.r[idx][0])
        results.append((points, h, res))
        per_component = {k: v[0] for k, v in comp.items()}
    study = _study_from_levels(results)
    return ResidualStudy(max_residual=study.max_residual,
                         l2_residual=study.l2_residual,
                         estimated_order=study.estimated_order,
                         levels=study.levels,
                         components=per_component)


def _z_residual_scalar(sol: RadialSolution, f: ExprNode, idx: np.ndarray):
    n = sol.n
    r, u, du = sol.r[idx], sol.u[idx], sol.du[idx]
    h = float(r[1] - r[0])
    binding = {"r": r, "u": u}
    fv = np.broadcast_to(np.asarray(evaluate(f, binding), dtype=float), u.shape)
    fu = np.broadcast_to(np.asarray(evaluate(differentiate(f, "u"), binding), dtype=float), u.shape)
    if "r" in free_symbols(f):
        fr = np.broadcast_to(np.asarray(evaluate(differentiate(f, "r"), binding), dtype=float), u.shape)
    else:
        fr = np.zeros_like(u)
    z = r * du
    lap = _central_d2(z, h) + (n - 1) / r * _central_d(z, h)
    resid = lap + fu * z + 2 * fv + r * fr
    return _norms(_interior(resid))


def _pq_residual(sol: RadialSolution, f: ExprNode, g: ExprNode,
                 idx: np.ndarray, which: str):
    n = sol.n
    r, u, du, v, dv = sol.r[idx], sol.u[idx], sol.du[idx], sol.v[idx], sol.dv[idx]
    h = float(r[1] - r[0])
    bind_f = {"r": r, "v": np.maximum(v, 0.0)}
    bind_g = {"r": r, "u": np.maximum(u, 0.0)}
    pk = r * du
    qk = r * dv
    if which == "p":
        # Delta p + f'(v) q = -2 f - r f_r  (H_{vu} vanishes for F(v) + G(u))
        w, coupled, expr_, bind = pk, qk, f, bind_f
        dvar = "v"
    else:
        w, coupled, expr_, bind = qk, pk, g, bind_g
        dvar = "u"
    val = np.broadcast_to(np.asarray(evaluate(expr_, bind), dtype=float), r.shape)
    dval = np.broadcast_to(np.asarray(evaluate(differentiate(expr_, dvar), bind), dtype=float), r.shape)
    if "r" in free_symbols(expr_):
        rval = np.broadcast_to(np.asarray(evaluate(differentiate(expr_, "r"), bind), dtype=float), r.shape)
    else:
        rval = np.zeros_like(r)
    lap = _central_d2(w, h) + (n - 1) / r * _central_d(w, h)
    resid = lap + dval * coupled + 2 * val + r * rval
    return _norms(_interior(resid))


# ---------------------------------------------------------------------------
# Energy identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    values: dict
    max_rel_diff: float

    def to_json_dict(self) -> dict:
        return {"values": dict(self.values), "max_rel_diff": self.max_rel_diff}


def _pairwise_rel(values: dict) -> float:
    vals = list(values.values())
    worst = 0.0
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            worst = max(worst, abs(vals[i] - vals[j])
                        / max(abs(vals[i]), abs(vals[j]), defaults.REL_RESIDUAL_FLOOR))
    return worst


def energy_identities(sol, f: ExprNode,
                      g: Optional[ExprNode] = None) -> EnergyReport:
    """Independent quadratures of the energy equalities.

    Scalar: integral of u f against integral of |grad u|^2.  Pair: integrals
    of v H_v, u H_u and grad u . grad v, all of which coincide on solutions.
    Accepts radial or rectangle-grid solutions.
    """
    from .rect import GridSolution

    if isinstance(sol, GridSolution):
        return _energy_identities_grid(sol, f)
    n, r = sol.n, sol.r
    if sol.kind == "scalar":
        u = np.maximum(sol.u, 0.0)
        fv = np.broadcast_to(np.asarray(evaluate(f, {"r": r, "u": u}), dtype=float), u.shape)
        values = {
            "int_u_f": _ball_integral(n, r, u * fv),
            "int_grad_u_sq": _ball_integral(n, r, sol.du ** 2),
        }
    else:
        if g is None:
            raise IdentityError("pair energy identities require g")
        u = np.maximum(sol.u, 0.0)
        v = np.maximum(sol.v, 0.0)
        fv = np.broadcast_to(np.asarray(evaluate(f, {"r": r, "v": v}), dtype=float), v.shape)
        gv = np.broadcast_to(np.asarray(evaluate(g, {"r": r, "u": u}), dtype=float), u.shape)
        values = {
            "int_v_Hv": _ball_integral(n, r, v * fv),
            "int_u_Hu": _ball_integral(n, r, u * gv),
            "int_grad_u_dot_grad_v": _ball_integral(n, r, sol.du * sol.dv),
        }
    return EnergyReport(values=values, max_rel_diff=_pairwise_rel(values))


# ---------------------------------------------------------------------------
# Rectangle-grid identity (n = 2)
# ---------------------------------------------------------------------------

def _simpson2d(values: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> float:
    return float(simpson(simpson(values, x=x2, axis=1), x=x1))


def _grid_binding(sol) -> dict:
    X1, X2 = np.meshgrid(sol.x1, sol.x2, indexing="ij")
    return {"x1": X1, "x2": X2, "u": np.maximum(sol.u, 0.0)}


def _grid_dilation(f: ExprNode, binding: dict) -> np.ndarray:
    out = np.zeros_like(binding["u"])
    for name in ("x1", "x2"):
        if name in free_symbols(f):
            Fx = antiderivative_partial(f, "u", name)
            out += binding[name] * np.asarray(antiderivative_value(Fx, binding), dtype=float)
    return out


def equation_residual_grid(sol, f: ExprNode) -> float:
    """Normalized max 5-point residual over interior nodes (two layers
    excluded), scaled by the forcing magnitude."""
    from .rect import assemble_residual

    res = assemble_residual(sol.dom, f, sol.u)
    binding = _grid_binding(sol)
    forcing = np.broadcast_to(np.asarray(evaluate(f, binding), dtype=float), sol.u.shape)
    scale = max(1.0, float(np.max(np.abs(forcing[2:-2, 2:-2]))))
    return float(np.max(np.abs(res[2:-2, 2:-2]))) / scale


def scalar_identity_grid(sol, f: ExprNode) -> IdentityReport:
    """Both sides of the scalar identity on a centered rectangle (n = 2).

    Volume terms by tensor Simpson over the nodes; the boundary term sums
    a_i * integral |du/dnu|^2 over the faces by trapezoid with one-sided
    second-order normal derivatives.  At n = 2 the (2-n) term is exactly 0,
    which isolates the F and dilation terms.
    """
    from .rect import boundary_gradient

    n = 2
    binding = _grid_binding(sol)
    flags = []
    eq_res = equation_residual_grid(sol, f)
    if eq_res > defaults.EQUATION_RESIDUAL_GATE:
        flags.append("EquationResidualHigh")
    F = antiderivative_in(f, "u")
    Fv = np.broadcast_to(np.asarray(antiderivative_value(F, binding), dtype=float),
                         sol.u.shape)
    terms = {
        "2nF": 2 * n * _simpson2d(Fv, sol.x1, sol.x2),
        "(2-n)uf": 0.0,
        "2xFx": 2 * _simpson2d(_grid_dilation(f, binding), sol.x1, sol.x2),
    }
    grad = boundary_gradient(sol)
    rhs = (sol.dom.a1 * (np.trapezoid(grad["east"] ** 2, sol.x2)
                         + np.trapezoid(grad["west"] ** 2, sol.x2))
           + sol.dom.a2 * (np.trapezoid(grad["north"] ** 2, sol.x1)
                           + np.trapezoid(grad["south"] ** 2, sol.x1)))
    quad = {"rule": "simpson2d+trapezoid",
            "points": [int(sol.x1.size), int(sol.x2.size)],
            "equation_residual": eq_res}
    return _make_report(terms, float(rhs), quad, flags=flags)


def _grid_gradient(u: np.ndarray, h1: float, h2: float):
    ux = np.gradient(u, h1, axis=0, edge_order=2)
    uy = np.gradient(u, h2, axis=1, edge_order=2)
    return ux, uy


def _energy_identities_grid(sol, f: ExprNode) -> EnergyReport:
    binding = _grid_binding(sol)
    fv = np.broadcast_to(np.asarray(evaluate(f, binding), dtype=float), sol.u.shape)
    ux, uy = _grid_gradient(sol.u, sol.h1, sol.h2)
    values = {
        "int_u_f": _simpson2d(np.maximum(sol.u, 0.0) * fv, sol.x1, sol.x2),
        "int_grad_u_sq": _simpson2d(ux ** 2 + uy ** 2, sol.x1, sol.x2),
    }
    return EnergyReport(values=values, max_rel_diff=_pairwise_rel(values))
