"""Non-existence criteria and verdicts.

Decides the critical-exponent and critical-hyperbola conditions, the
Hamiltonian inequality conditions (with their free parameters alpha_k), the
power-first-equation condition, and the biharmonic threshold.  Power-type
nonlinearities are recognized and decided by closed-form threshold
arithmetic; everything else is verified by deterministic sampling and
labeled as such, never as a proof.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import defaults
from .expr import (
    Const,
    ExprNode,
    Pow,
    Prod,
    Sum,
    Var,
    antiderivative_in,
    antiderivative_partial,
    antiderivative_value,
    differentiate,
    evaluate,
    free_symbols,
    simplify,
)

NONEXISTENCE = "Nonexistence"
INCONCLUSIVE = "Inconclusive"
VIOLATED = "ConditionViolatedAt"


@dataclass(frozen=True)
class PowerSpec:
    p: float
    q: float
    n: int

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("exponents p, q must be positive")


@dataclass(frozen=True)
class Verdict:
    outcome: str
    witness: object = None          # alpha / a value, or the violating sample point
    margin: Optional[float] = None  # signed slack of the decisive inequality
    method: str = "closed-form"     # closed-form | sampled
    note: str = ""

    def __post_init__(self):
        if self.outcome == NONEXISTENCE and self.witness is None:
            raise ValueError("Nonexistence verdicts must carry their witness")
        if self.outcome == VIOLATED and self.witness is None:
            raise ValueError("ConditionViolatedAt verdicts must carry a point")

    def to_json_dict(self) -> dict:
        return {"outcome": self.outcome, "witness": self.witness,
                "margin": self.margin, "method": self.method, "note": self.note}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _strict(margin: float, scale: float = 1.0) -> bool:
    # the conclusions need strict inequalities; margins inside the tolerance
    # band are treated as boundary cases
    return margin > defaults.STRICTNESS_TOL * max(abs(scale), 1.0)


def hyperbola_gap(p: float, q: float, n: int) -> float:
    """Signed gap (n-2)/n - 1/(p+1) - 1/(q+1); positive means supercritical.

    Single source of the threshold arithmetic so that every closed-form
    checker agrees bit-for-bit.
    """
    return (n - 2) / n - 1.0 / (p + 1.0) - 1.0 / (q + 1.0)


# ---------------------------------------------------------------------------
# Closed-form checkers
# ---------------------------------------------------------------------------

def classify_hyperbola(spec: PowerSpec):
    """Classification against the critical hyperbola plus the verdict.

    Strictly supercritical implies non-existence of positive pairs on
    star-shaped domains; the critical and subcritical sides are
    inconclusive here.  At n = 2 the right side is 0 and the strict
    condition is vacuous.
    """
    p, q, n = spec.p, spec.q, spec.n
    if n < 3:
        return INCONCLUSIVE, Verdict(INCONCLUSIVE, margin=None,
                                     note="vacuous at n = 2: (n-2)/n = 0")
    gap = hyperbola_gap(p, q, n)
    if _strict(gap):
        return "Supercritical", Verdict(NONEXISTENCE, witness={"p": p, "q": q},
                                        margin=gap)
    if _strict(-gap):
        return "Subcritical", Verdict(INCONCLUSIVE, margin=gap)
    return "Critical", Verdict(INCONCLUSIVE, margin=gap,
                               note="on the critical hyperbola")


def scalar_supercritical(p: float, n: int) -> Verdict:
    """Scalar threshold: no positive solutions when p > (n+2)/(n-2) strictly."""
    if n < 3:
        return Verdict(INCONCLUSIVE, note="threshold undefined below n = 3")
    threshold = (n + 2) / (n - 2)
    margin = p - threshold
    if _strict(margin, threshold):
        return Verdict(NONEXISTENCE, witness={"p": p, "threshold": threshold},
                       margin=margin)
    return Verdict(INCONCLUSIVE, margin=margin)


def biharmonic_check(q: float, n: int) -> Verdict:
    """Fourth-order problem with Navier data: non-existence for
    q > (n+4)/(n-4); equivalent to the hyperbola slice p = 1."""
    if n <= 4:
        return Verdict(INCONCLUSIVE, note="threshold undefined for n <= 4")
    threshold = (n + 4) / (n - 4)
    margin = q - threshold
    gap = hyperbola_gap(1.0, q, n)
    if _strict(gap):
        return Verdict(NONEXISTENCE,
                       witness={"q": q, "threshold": threshold,
                                "hyperbola_datum": {"p": 1.0, "q": q}},
                       margin=margin)
    return Verdict(INCONCLUSIVE, margin=margin,
                   note="" if _strict(-gap) else "boundary case")


# ---------------------------------------------------------------------------
# Power-structure detection
# ---------------------------------------------------------------------------

def _power_term(term: ExprNode):
    """Match c * s^e (c > 0 constant) for a single variable s."""
    coeff = 1.0
    core = term
    if isinstance(term, Prod):
        consts = [f for f in term.factors if isinstance(f, Const)]
        others = [f for f in term.factors if not isinstance(f, Const)]
        if len(others) != 1:
            return None
        coeff = math.prod(c.value for c in consts)
        core = others[0]
    if isinstance(core, Var):
        return (core.name, coeff, 1.0) if coeff > 0 else None
    if isinstance(core, Pow) and isinstance(core.base, Var):
        return (core.base.name, coeff, core.exponent) if coeff > 0 else None
    return None


def detect_power_hamiltonian(H: ExprNode, us: Sequence[str], vs: Sequence[str]):
    """Recognize H = sum_k (c_uk u_k^(q_k+1) + c_vk v_k^(p_k+1)).

    Returns per-pair exponent data [(p_k, q_k)] or None; this is where the
    closed-form threshold arithmetic replaces sampling.
    """
    s = simplify(H)
    terms = s.terms if isinstance(s, Sum) else (s,)
    found = {}
    for t in terms:
        hit = _power_term(t)
        if hit is None:
            return None
        name, coeff, exponent = hit
        if exponent <= 1.0 or name in found:
            return None
        found[name] = exponent
    if set(found) != set(us) | set(vs):
        return None
    return [(found[v] - 1.0, found[u] - 1.0) for u, v in zip(us, vs)]


# ---------------------------------------------------------------------------
# Sampling machinery
# ---------------------------------------------------------------------------

def _log_grid(rng: tuple, count: int) -> np.ndarray:
    return np.geomspace(rng[0], rng[1], count)


@dataclass(frozen=True)
class DomainSampler:
    """Deterministic spatial sample of Omega binding r (and x_i) symbols."""

    kind: str = "none"              # none | ball | rectangle
    radius: float = 1.0
    half_widths: tuple = (0.5, 0.5)
    n: int = 3
    count: int = defaults.SPATIAL_SAMPLE_COUNT

    def bindings(self) -> list:
        if self.kind == "none":
            return [{}]
        if self.kind == "ball":
            radii = np.linspace(0.0, self.radius, self.count)
            return [{"r": float(r)} for r in radii]
        if self.kind == "rectangle":
            a1, a2 = self.half_widths
            xs = np.linspace(-a1, a1, self.count)
            ys = np.linspace(-a2, a2, self.count)
            out = []
            for x in xs:
                for y in ys:
                    out.append({"x1": float(x), "x2": float(y),
                                "r": float(np.hypot(x, y))})
            return out
        raise ValueError(f"unknown sampler kind {self.kind!r}")


def _dilation_expr(e: ExprNode, n: int) -> ExprNode:
    """x . grad_x of an expression over r and/or Cartesian x_i symbols."""
    parts = []
    if "r" in free_symbols(e):
        parts.append(Prod((Var("r"), differentiate(e, "r"))))
    for i in range(1, n + 1):
        name = f"x{i}"
        if name in free_symbols(e):
            parts.append(Prod((Var(name), differentiate(e, name))))
    if not parts:
        return Const(0.0)
    return simplify(Sum(tuple(parts)))


# ---------------------------------------------------------------------------
# Hamiltonian condition, m = 1 (the classical form)
# ---------------------------------------------------------------------------

def mitidieri_condition(H: ExprNode, n: int,
                        search: tuple = defaults.ALPHA_SEARCH_RANGE,
                        search_count: int = defaults.ALPHA_SEARCH_COUNT,
                        sample_range: tuple = defaults.SAMPLE_RANGE,
                        sample_count: int = defaults.SAMPLE_COUNT) -> Verdict:
    """Does some alpha satisfy alpha u H_u + (1-alpha) v H_v > n/(n-2) H
    for all u, v > 0?

    Power Hamiltonians are decided in closed form (the condition reduces to
    the strict hyperbola); general H is tested on a logarithmic sample grid
    for each alpha and flagged "sampled, not proven".
    """
    if n < 3:
        return Verdict(INCONCLUSIVE, note="condition undefined below n = 3")
    extra = free_symbols(H) - {"u", "v"}
    if extra:
        raise ValueError(f"H must use only u, v; found {sorted(extra)}")
    powers = detect_power_hamiltonian(H, ["u"], ["v"])
    if powers is not None:
        p, q = powers[0]
        return _power_alpha_verdict(p, q, n)
    kappa = n / (n - 2)
    alphas = np.linspace(search[0], search[1], search_count)
    uu = _log_grid(sample_range, sample_count)
    vv = _log_grid(sample_range, sample_count)
    U, V = np.meshgrid(uu, vv, indexing="ij")
    binding = {"u": U, "v": V}
    uHu = np.broadcast_to(np.asarray(
        evaluate(simplify(Prod((Var("u"), differentiate(H, "u")))), binding),
        dtype=float), U.shape)
    vHv = np.broadcast_to(np.asarray(
        evaluate(simplify(Prod((Var("v"), differentiate(H, "v")))), binding),
        dtype=float), U.shape)
    Hval = np.broadcast_to(np.asarray(evaluate(H, binding), dtype=float), U.shape)
    scale = np.maximum.reduce([np.abs(uHu), np.abs(vHv), np.abs(kappa * Hval),
                               np.full_like(Hval, 1e-30)])
    best_alpha, best_min = None, -np.inf
    for alpha in alphas:
        margin = (alpha * uHu + (1 - alpha) * vHv - kappa * Hval) / scale
        worst = float(np.min(margin))
        if worst > best_min:
            best_min = worst
            best_alpha = float(alpha)
    if best_min > defaults.STRICTNESS_TOL:
        return Verdict(NONEXISTENCE, witness={"alpha": best_alpha},
                       margin=best_min, method="sampled",
                       note="sampled, not proven")
    margin = (best_alpha * uHu + (1 - best_alpha) * vHv - kappa * Hval) / scale
    i, j = np.unravel_index(int(np.argmin(margin)), margin.shape)
    return Verdict(VIOLATED,
                   witness={"alpha": best_alpha, "u": float(U[i, j]), "v": float(V[i, j])},
                   margin=float(margin[i, j]), method="sampled")


def _power_alpha_verdict(p: float, q: float, n: int) -> Verdict:
    """Closed form for H = c_u u^(q+1) + c_v v^(p+1).

    An admissible alpha exists iff kappa/(q+1) + kappa/(p+1) < 1 with
    kappa = n/(n-2), which is exactly the strict hyperbola; the best alpha
    balances the two one-sided constraints.
    """
    kappa = n / (n - 2)
    gap = hyperbola_gap(p, q, n)
    alpha_best = (kappa / (q + 1) + 1 - kappa / (p + 1)) / 2.0
    if _strict(gap):
        return Verdict(NONEXISTENCE, witness={"alpha": alpha_best}, margin=gap)
    if not _strict(-gap):
        return Verdict(INCONCLUSIVE, margin=gap, note="boundary case")
    # maximin alpha equalizes alpha (q+1) and (1-alpha) (p+1)
    alpha_star = (p + 1) / (p + q + 2)
    return Verdict(VIOLATED,
                   witness={"alpha": alpha_star, "u": 1.0, "v": 1.0},
                   margin=gap)


# ---------------------------------------------------------------------------
# Power-first-equation condition
# ---------------------------------------------------------------------------

def theorem2_condition(g: ExprNode, p: float, n: int,
                       sampler: DomainSampler = DomainSampler(),
                       sample_range: tuple = defaults.SAMPLE_RANGE,
                       sample_count: int = defaults.SAMPLE_COUNT) -> Verdict:
    """Non-existence for the system with first equation Delta u + v^p = 0.

    Tests n G + (2-n) (1 - n/((n-2)(p+1))) u g + x . grad G < 0 over the
    sampled domain and a logarithmic u grid; pure-power g reduces exactly to
    the strict hyperbola.  The witness reports the identity constant
    a = 2n/((n-2)(p+1)) that kills the F-terms.
    """
    if n < 3:
        return Verdict(INCONCLUSIVE, note="condition undefined below n = 3")
    if p <= 0:
        raise ValueError("p must be positive")
    a_const = 2 * n / ((n - 2) * (p + 1))
    spatial = free_symbols(g) - {"u"}
    if not spatial:
        power = _power_term(simplify(g))
        if power is not None and power[0] == "u":
            q = power[2]
            if q > 0:
                gap = hyperbola_gap(p, q, n)
                if _strict(gap):
                    return Verdict(NONEXISTENCE,
                                   witness={"a": a_const, "q": q}, margin=gap)
                if not _strict(-gap):
                    return Verdict(INCONCLUSIVE, margin=gap, note="boundary case")
                return Verdict(VIOLATED,
                               witness={"a": a_const, "u": 1.0}, margin=gap)
    # sampled path
    G = antiderivative_in(g, "u")
    weight = (2 - n) * (1 - n / ((n - 2) * (p + 1)))
    uu = _log_grid(sample_range, sample_count)
    worst = -np.inf
    worst_point = None
    for space in sampler.bindings():
        binding = dict(space)
        binding["u"] = uu
        Gv = np.broadcast_to(np.asarray(antiderivative_value(G, binding), dtype=float), uu.shape)
        gv = np.broadcast_to(np.asarray(evaluate(g, binding), dtype=float), uu.shape)
        dil = np.zeros_like(uu)
        for name in sorted(spatial):
            if name == "u":
                continue
            Gx = antiderivative_partial(g, "u", name)
            dil = dil + binding.get(name, 0.0) * np.broadcast_to(
                np.asarray(antiderivative_value(Gx, binding), dtype=float), uu.shape)
        quantity = n * Gv + weight * uu * gv + dil
        scale = np.maximum.reduce([np.abs(n * Gv), np.abs(weight * uu * gv),
                                   np.abs(dil), np.full_like(uu, 1e-30)])
        rel = quantity / scale
        k = int(np.argmax(rel))
        if rel[k] > worst:
            worst = float(rel[k])
            worst_point = dict(space)
            worst_point["u"] = float(uu[k])
    if worst < -defaults.STRICTNESS_TOL:
        return Verdict(NONEXISTENCE, witness={"a": a_const}, margin=-worst,
                       method="sampled", note="sampled, not proven")
    worst_point["a"] = a_const
    return Verdict(VIOLATED, witness=worst_point, margin=-worst, method="sampled")


# ---------------------------------------------------------------------------
# General m-pair condition
# ---------------------------------------------------------------------------

def _alpha_grid_for(m: int, search: tuple):
    if m == 1:
        counts = defaults.ALPHA_SEARCH_COUNT
    elif m == 2:
        counts = defaults.ALPHA_SEARCH_COUNT_M2
    else:
        counts = defaults.ALPHA_SEARCH_COUNT_M3
    return np.linspace(search[0], search[1], counts)


def _sample_count_for(m: int) -> int:
    return {1: defaults.SAMPLE_COUNT, 2: defaults.SAMPLE_COUNT_M2,
            3: defaults.SAMPLE_COUNT_M3}.get(m, 3)


def general_condition(H: ExprNode, n: int, m: int = 1,
                      search: tuple = defaults.ALPHA_SEARCH_RANGE,
                      sample_range: tuple = defaults.SAMPLE_RANGE,
                      sampler: DomainSampler = DomainSampler()) -> Verdict:
    """The m-pair condition n H + (2-n) sum_k (alpha_k u_k H_{u_k}
    + (1-alpha_k) v_k H_{v_k}) + x . grad H < 0.

    For m = 1 without x-dependence this coincides with the classical ">"
    form after dividing by (n - 2), with alpha_k = a_k / 2; decoupled sums
    of power Hamiltonians are decided per pair in closed form.  Exhaustive
    alpha grids are used for m <= 3, coordinate descent beyond.
    """
    if n < 3:
        return Verdict(INCONCLUSIVE, note="condition undefined below n = 3")
    us = ["u"] if m == 1 else [f"u{k}" for k in range(1, m + 1)]
    vs = ["v"] if m == 1 else [f"v{k}" for k in range(1, m + 1)]
    allowed = set(us) | set(vs) | {"r"} | {f"x{i}" for i in range(1, n + 1)}
    extra = free_symbols(H) - allowed
    if extra:
        raise ValueError(f"H uses undeclared symbols {sorted(extra)}")

    powers = detect_power_hamiltonian(H, us, vs)
    if powers is not None:
        verdicts = [_power_alpha_verdict(p, q, n) for p, q in powers]
        margins = [v.margin for v in verdicts]
        alphas = [v.witness["alpha"] for v in verdicts]
        if all(v.outcome == NONEXISTENCE for v in verdicts):
            return Verdict(NONEXISTENCE, witness={"alpha": alphas},
                           margin=min(margins))
        if any(v.outcome == VIOLATED for v in verdicts):
            bad = min(range(m), key=lambda k: margins[k])
            point = {us[bad]: 1.0, vs[bad]: 1.0, "alpha": alphas}
            return Verdict(VIOLATED, witness=point, margin=min(margins))
        return Verdict(INCONCLUSIVE, margin=min(margins), note="boundary case")

    # sampled path: the condition is affine in each alpha_k, so precompute
    # the coefficient fields once
    count = _sample_count_for(m)
    axes = [_log_grid(sample_range, count) for _ in range(2 * m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    space_bindings = sampler.bindings() if (free_symbols(H) & ({"r"} | {f"x{i}" for i in range(1, n + 1)})) else [{}]

    C0_list, Ck_list, scale_list = [], [], []
    dil_expr = _dilation_expr(H, n)
    for space in space_bindings:
        binding = dict(space)
        for sym, arr in zip(us + vs, mesh):
            binding[sym] = arr
        Hval = np.asarray(evaluate(H, binding), dtype=float)
        shape = mesh[0].shape
        Hval = np.broadcast_to(Hval, shape)
        dil = np.broadcast_to(np.asarray(evaluate(dil_expr, binding), dtype=float), shape)
        Cks = []
        base = n * Hval + dil
        scale = np.maximum(np.abs(n * Hval), 1e-30)
        for k in range(m):
            uHu = binding[us[k]] * np.broadcast_to(
                np.asarray(evaluate(differentiate(H, us[k]), binding), dtype=float), shape)
            vHv = binding[vs[k]] * np.broadcast_to(
                np.asarray(evaluate(differentiate(H, vs[k]), binding), dtype=float), shape)
            base = base + (2 - n) * vHv
            Cks.append((2 - n) * (uHu - vHv))
            scale = np.maximum.reduce([scale, np.abs((n - 2) * uHu),
                                       np.abs((n - 2) * vHv)])
        C0_list.append(base.ravel())
        Ck_list.append(np.stack([c.ravel() for c in Cks]))
        scale_list.append(scale.ravel())
    C0 = np.concatenate(C0_list)
    Ck = np.concatenate(Ck_list, axis=1)
    scale = np.concatenate(scale_list)

    def worst_margin(alpha_vec) -> float:
        quantity = C0 + alpha_vec @ Ck
        return float(np.max(quantity / scale))

    if m <= 3:
        grid = _alpha_grid_for(m, search)
        best_alpha, best = None, np.inf
        for alpha_vec in np.stack(np.meshgrid(*([grid] * m), indexing="ij"),
                                  axis=-1).reshape(-1, m):
            w = worst_margin(alpha_vec)
            if w < best:
                best, best_alpha = w, alpha_vec.copy()
    else:
        best_alpha = np.full(m, 0.5)
        grid = np.linspace(search[0], search[1], 101)
        best = worst_margin(best_alpha)
        for _ in range(4):
            for k in range(m):
                trial = best_alpha.copy()
                for val in grid:
                    trial[k] = val
                    w = worst_margin(trial)
                    if w < best:
                        best, best_alpha = w, trial.copy()
    alphas_out = [float(a) for a in best_alpha]
    if best < -defaults.STRICTNESS_TOL:
        return Verdict(NONEXISTENCE, witness={"alpha": alphas_out},
                       margin=-best, method="sampled", note="sampled, not proven")
    quantity = (C0 + best_alpha @ Ck) / scale
    idx = int(np.argmax(quantity))
    point = {"alpha": alphas_out}
    flat = [m_.ravel() for m_ in mesh]
    per_space = flat[0].size
    space_idx, cell = divmod(idx, per_space)
    for sym, arr in zip(us + vs, flat):
        point[sym] = float(arr[cell])
    point.update(space_bindings[space_idx])
    return Verdict(VIOLATED, witness=point, margin=-best, method="sampled")
