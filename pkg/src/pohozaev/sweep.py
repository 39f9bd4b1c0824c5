"""Batch classification, shooting probes and convergence studies.

Sweeps the (p, q) plane of the pure-power pair system, optionally probing
each point with a budget-capped shooting attempt and verifying the pair
identity on every solved point.  Results are emitted in deterministic
lexicographic order regardless of worker completion order.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import defaults
from .criteria import PowerSpec, classify_hyperbola
from .errors import NoConvergenceError, PositivityLostError, SolverError
from .expr import Pow, Var
from .identity import (
    differential_form_residual,
    pair_identity_radial,
    scalar_identity_grid,
)
from .radial import (
    RadialProblem,
    ShootingConfig,
    _power_pair_start,
    integrate_pair_ivp,
    shoot_pair,
)

ACTIONS = ("criteria", "probe", "solve")


@dataclass(frozen=True)
class SweepSpec:
    n: int
    p_range: tuple
    q_range: tuple
    p_count: int
    q_count: int
    action: str = "criteria"
    R: float = 1.0
    gate: float = defaults.VERIFY_GATE
    jobs: int = 1

    def __post_init__(self):
        if self.p_range[0] <= 0 or self.q_range[0] <= 0:
            raise ValueError("exponent ranges must be positive")
        if self.p_count < 2 or self.q_count < 2:
            raise ValueError("grid counts must be at least 2")
        if self.action not in ACTIONS:
            raise ValueError(f"action must be one of {ACTIONS}")

    def points(self):
        ps = np.linspace(self.p_range[0], self.p_range[1], self.p_count)
        qs = np.linspace(self.q_range[0], self.q_range[1], self.q_count)
        return [(float(p), float(q)) for p in ps for q in qs]


@dataclass(frozen=True)
class SweepRow:
    p: float
    q: float
    classification: str
    verdict: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    identity_residual: Optional[float] = None
    notes: str = ""


def _pair_problem(n: int, p: float, q: float, R: float) -> RadialProblem:
    return RadialProblem(n=n, R=R, f=Pow(Var("v"), p), g=Pow(Var("u"), q))


def _probe_point(n: int, p: float, q: float, R: float):
    """Budget-capped shooting probe at one (p, q) point.

    Returns ("solved", alpha, beta), ("NoBracket", ...) or
    ("NoConvergence", ...); non-existence shows up as NoBracket, never as an
    endless search.
    """
    if abs(p * q - 1.0) < 1e-9:
        return ("NoConvergence", None, None, "scaling degenerate at pq = 1")
    prob = _pair_problem(n, p, q, R)
    cfg = ShootingConfig(rtol=defaults.PROBE_RTOL, atol=defaults.PROBE_ATOL,
                         scan_rtol=defaults.PROBE_RTOL, scan_atol=defaults.PROBE_ATOL)
    start = _power_pair_start(prob, cfg, starts=defaults.PROBE_STARTS,
                              horizon_factor=defaults.PROBE_HORIZON_FACTOR)
    if start is None:
        return ("NoBracket", None, None, "")
    alpha, beta = start
    traj = integrate_pair_ivp(prob, alpha, beta, R, cfg, terminate_on_crossing=False)
    if traj.termination == "blow_up":
        return ("NoConvergence", None, None, "blow-up at probe start")
    uR = float(traj.dense(R)[0])
    vR = float(traj.dense(R)[2])
    scale = max(alpha, beta)
    if max(abs(uR), abs(vR)) <= 1e-5 * scale:
        grid = np.linspace(cfg.start_radius(R), R, 257)
        vals = traj.dense(grid)
        if np.all(vals[0][:-1] > 0) and np.all(vals[2][:-1] > 0):
            return ("solved", alpha, beta, "")
    return ("NoConvergence", alpha, beta, "probe start did not meet the boundary")


def _solve_point(n: int, p: float, q: float, R: float, gate: float):
    prob = _pair_problem(n, p, q, R)
    try:
        sol = shoot_pair(prob)
    except SolverError as err:
        kind = "NoBracket" if "bracket" in str(err).lower() else "NoConvergence"
        if isinstance(err, (NoConvergenceError, PositivityLostError)):
            kind = "NoConvergence"
        return (kind, None, None, None, "")
    report = pair_identity_radial(sol, prob.f, prob.g, a=1.0)
    notes = "" if report.rel_residual <= gate else "IdentityGateExceeded"
    return ("solved", sol.alpha, sol.beta, report.rel_residual, notes)


def _evaluate_point(args) -> SweepRow:
    n, p, q, action, R, gate = args
    classification, verdict = classify_hyperbola(PowerSpec(p, q, n))
    alpha = beta = residual = None
    notes = []
    if action == "probe":
        status, alpha, beta, note = _probe_point(n, p, q, R)
        if note:
            notes.append(note)
        if status != "solved":
            notes.append(status)
            alpha = beta = None
        solved = status == "solved"
    elif action == "solve":
        status, alpha, beta, residual, note = _solve_point(n, p, q, R, gate)
        if note:
            notes.append(note)
        if status != "solved":
            notes.append(status)
        solved = status == "solved"
    else:
        solved = False
    if solved and classification == "Supercritical":
        # a solved positive pair at a supercritical point contradicts the
        # non-existence theory and is flagged as a hard failure
        notes.append("CONTRADICTION")
    return SweepRow(p=p, q=q, classification=classification,
                    verdict=verdict.outcome, alpha=alpha, beta=beta,
                    identity_residual=residual, notes=";".join(notes))


def run_sweep(spec: SweepSpec):
    """Evaluate every grid point and return (rows, summary).

    Per-point failures are recorded in the rows and never abort the sweep.
    """
    tasks = [(spec.n, p, q, spec.action, spec.R, spec.gate)
             for p, q in spec.points()]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            rows = list(pool.map(_evaluate_point, tasks, chunksize=4))
    else:
        rows = [_evaluate_point(t) for t in tasks]
    rows.sort(key=lambda row: (row.p, row.q))
    return rows, sweep_summary(rows)


def sweep_summary(rows: Sequence[SweepRow]) -> dict:
    counts = {}
    for row in rows:
        counts[row.classification] = counts.get(row.classification, 0) + 1
    contradictions = sum(1 for row in rows if "CONTRADICTION" in row.notes)
    solved = sum(1 for row in rows if row.alpha is not None)
    gate_failures = sum(1 for row in rows if "IdentityGateExceeded" in row.notes)
    return {"points": len(rows), "classes": counts, "solved": solved,
            "contradictions": contradictions,
            "identity_gate_failures": gate_failures}


def _fmt(x) -> str:
    return "" if x is None else f"{x:.12g}"


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    """Deterministic CSV: fixed column set, fixed float formatting, rows in
    (p, q) lexicographic order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "q", "classification", "verdict", "alpha",
                         "beta", "identity_residual", "notes"])
        for row in rows:
            writer.writerow([_fmt(row.p), _fmt(row.q), row.classification,
                             row.verdict, _fmt(row.alpha), _fmt(row.beta),
                             _fmt(row.identity_residual), row.notes])


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyRow:
    level: int
    h: float
    metric: str
    value: float
    order: Optional[float] = None


def _orders(levels):
    rows = []
    prev = None
    for level, h, value in levels:
        order = None
        if prev is not None and value > 0 and prev[2] > 0:
            order = float(np.log(prev[2] / value) / np.log(prev[1] / h))
        rows.append((level, h, value, order))
        prev = (level, h, value)
    return rows


def convergence_study_radial(sol, f, g=None,
                             levels: Sequence[int] = (257, 513, 1025)):
    """Differential-form residual across sampling levels with pairwise
    Richardson orders."""
    if len(levels) < 3:
        raise ValueError("at least 3 refinement levels are required")
    study = differential_form_residual(sol, f, g, levels=levels)
    return [StudyRow(level, h, "differential_form_max_residual", value, order)
            for level, h, value, order in _orders(study.levels)]


def convergence_study_grid(dom, f, node_levels: Sequence[int] = (65, 129, 257),
                           method: str = "direct"):
    """Identity gap |LHS - RHS| of the rectangle identity under refinement."""
    from .rect import NewtonConfig, solve_scalar_grid

    if len(node_levels) < 3:
        raise ValueError("at least 3 refinement levels are required")
    levels = []
    for nodes in sorted(node_levels):
        cfg = NewtonConfig(N1=nodes - 1, N2=nodes - 1, method=method)
        sol = solve_scalar_grid(dom, f, cfg)
        report = scalar_identity_grid(sol, f)
        levels.append((nodes, sol.h1, report.abs_residual))
    return [StudyRow(level, h, "identity_gap", value, order)
            for level, h, value, order in _orders(levels)]


def richardson_limit(rows: Sequence[StudyRow]) -> Optional[float]:
    """Extrapolated limit of the study metric.

    Uses the order estimated from the previous refinement pair so the
    extrapolation is not circular with the final pair.
    """
    if len(rows) < 3:
        return None
    order = rows[-2].order
    if order is None or order <= 0:
        return None
    g_c, g_f = rows[-2].value, rows[-1].value
    ratio = (rows[-2].h / rows[-1].h) ** order
    return float(g_f + (g_f - g_c) / (ratio - 1.0))


def write_study_csv(rows: Sequence[StudyRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "h", "metric", "value", "order"])
        for row in rows:
            writer.writerow([row.level, f"{row.h:.12g}", row.metric,
                             f"{row.value:.12g}",
                             "" if row.order is None else f"{row.order:.6g}"])
