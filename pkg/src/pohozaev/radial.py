"""Radial solver for balls: scalar problems and Hamiltonian pairs by shooting.

The ball problem  Delta u + f(|x|, u) = 0, u = 0 on |x| = R  reduces to
u'' + (n-1)/r u' + f(r, u) = 0 with u'(0) = 0.  Scalar problems are solved
by bracketing and bisecting the first-zero-radius map rho(alpha); pairs by
Newton iteration on the boundary map (alpha, beta) -> (u(R), v(R)).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import defaults
from .errors import NoBracketError, NoConvergenceError, PositivityLostError
from .expr import ExprNode, evaluate, free_symbols


@dataclass(frozen=True)
class RadialProblem:
    """Ball problem: scalar (g is None, f over {r,u}) or pair (f over {r,v},
    g over {r,u})."""

    n: int
    R: float
    f: ExprNode
    g: Optional[ExprNode] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension n must be >= 2")
        if self.R <= 0:
            raise ValueError("ball radius must be positive")
        allowed_f = {"r", "u"} if self.g is None else {"r", "v"}
        extra = free_symbols(self.f) - allowed_f
        if extra:
            raise ValueError(f"f uses symbols outside {sorted(allowed_f)}: {sorted(extra)}")
        if self.g is not None:
            extra = free_symbols(self.g) - {"r", "u"}
            if extra:
                raise ValueError(f"g uses symbols outside ['r', 'u']: {sorted(extra)}")

    @property
    def kind(self) -> str:
        return "scalar" if self.g is None else "pair"


@dataclass(frozen=True)
class ShootingConfig:
    rtol: float = defaults.ODE_RTOL
    atol: float = defaults.ODE_ATOL
    scan_rtol: float = defaults.SCAN_RTOL
    scan_atol: float = defaults.SCAN_ATOL
    r0: Optional[float] = None          # series-start radius; default 1e-6 * R
    alpha_grid: tuple = defaults.ALPHA_GRID
    max_bisect: int = defaults.MAX_BISECT
    radius_tol: float = defaults.RADIUS_TOL
    max_newton: int = defaults.MAX_NEWTON
    boundary_tol: float = defaults.BOUNDARY_TOL
    fd_step_rel: float = defaults.FD_STEP_REL
    damping_halvings: int = defaults.DAMPING_HALVINGS
    blowup_bound: float = defaults.BLOWUP_BOUND
    resample_points: int = defaults.RESAMPLE_POINTS
    pair_grid: tuple = defaults.PAIR_GRID

    def start_radius(self, R: float) -> float:
        return self.r0 if self.r0 is not None else defaults.R0_FACTOR * R


@dataclass(frozen=True)
class Trajectory:
    """IVP trajectory at the integrator's own steps."""

    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    v: Optional[np.ndarray] = None
    dv: Optional[np.ndarray] = None
    termination: str = "reached_rmax"   # or "zero_crossing" | "blow_up"
    crossing_radius: Optional[float] = None
    crossing_component: Optional[str] = None
    dense: object = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class RadialSolution:
    """Accepted Dirichlet solution on a uniform radial grid [r0, R]."""

    n: int
    R: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    alpha: float
    v: Optional[np.ndarray] = None
    dv: Optional[np.ndarray] = None
    beta: Optional[float] = None

    @property
    def kind(self) -> str:
        return "scalar" if self.v is None else "pair"

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])


@dataclass(frozen=True)
class ProbeEntry:
    start: tuple
    outcome: str                        # crossed-zero-at-radius | positive-up-to-horizon | blow-up
    radius: Optional[float] = None


@dataclass(frozen=True)
class ProbeReport:
    horizon: float
    entries: tuple

    @property
    def crossings(self) -> int:
        return sum(1 for e in self.entries if e.outcome == "crossed-zero-at-radius")

    @property
    def none_crossed(self) -> bool:
        return self.crossings == 0

    @property
    def all_crossed(self) -> bool:
        return self.crossings == len(self.entries)

    def summary(self) -> dict:
        counts = {}
        for e in self.entries:
            counts[e.outcome] = counts.get(e.outcome, 0) + 1
        return counts


def _pos(x):
    # Positive-part extension: nonlinearities are evaluated at max(value, 0)
    # so that fractional powers survive the integrator stepping past a zero.
    # Accepted solutions are positive up to the boundary, where f(0) is finite,
    # so the extension never alters a reported solution.
    return x if x > 0.0 else 0.0


def _scalar_rhs(p: RadialProblem, n: int):
    f = p.f

    def rhs(r, y):
        u, w = y
        return [w, -(n - 1) / r * w - float(evaluate(f, {"r": r, "u": _pos(u)}))]

    return rhs

def _pair_rhs(p: RadialProblem, n: int):
    f, g = p.f, p.g

    def rhs(r, y):
        u, w, v, z = y
        fu = float(evaluate(f, {"r": r, "v": _pos(v)}))
        gu = float(evaluate(g, {"r": r, "u": _pos(u)}))
        return [w, -(n - 1) / r * w - fu, z, -(n - 1) / r * z - gu]

    return rhs


def _blowup_event(bound: float, ncomp: int):
    def event(r, y):
        return bound - max(abs(y[i]) for i in range(ncomp))

    event.terminal = True
    event.direction = -1
    return event


def _crossing_event(index: int):
    def event(r, y):
        return y[index]

    event.terminal = True
    event.direction = -1
    return event


def _series_radius(n: int, default_r0: float, *terms) -> float:
    # The Taylor start is only valid while its second-order correction is a
    # tiny fraction of the initial height; for steep nonlinearities (large
    # f(0, alpha)) the fixed default would start outside the series' validity
    # and fabricate crossings, so r0 shrinks until f0*r0^2/(2n) <= 1e-9*height.
    r0 = default_r0
    for height, f0 in terms:
        if f0 != 0.0:
            r0 = min(r0, float(np.sqrt(2 * n * 1e-9 * height / abs(f0))))
    return r0


def integrate_scalar_ivp(p: RadialProblem, alpha: float, r_max: float,
                         cfg: ShootingConfig = ShootingConfig(),
                         terminate_on_crossing: bool = True,
                         tight: bool = True) -> Trajectory:
    """Integrate the scalar radial IVP from the series start at height alpha.

    Terminates at r_max, at the first zero crossing of u (when requested),
    or at blow-up; blow-up is a termination reason, not a failure.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = p.n
    f0 = float(evaluate(p.f, {"r": 0.0, "u": alpha}))
    r0 = _series_radius(n, cfg.start_radius(p.R), (alpha, f0))
    # second-order series start: truncation O(r0^4) is below ODE tolerance
    y0 = [alpha - f0 * r0 ** 2 / (2 * n), -f0 * r0 / n]
    events = [_blowup_event(cfg.blowup_bound, 2)]
    if terminate_on_crossing:
        events.append(_crossing_event(0))
    rtol, atol = (cfg.rtol, cfg.atol) if tight else (cfg.scan_rtol, cfg.scan_atol)
    sol = solve_ivp(_scalar_rhs(p, n), (r0, r_max), y0, method="RK45",
                    rtol=rtol, atol=atol, events=events, dense_output=True)
    termination, radius, comp = _classify(sol, terminate_on_crossing, 1)
    return Trajectory(r=sol.t, u=sol.y[0], du=sol.y[1],
                      termination=termination, crossing_radius=radius,
                      crossing_component=comp, dense=sol.sol)


def integrate_pair_ivp(p: RadialProblem, alpha: float, beta: float, r_max: float,
                       cfg: ShootingConfig = ShootingConfig(),
                       terminate_on_crossing: bool = True,
                       tight: bool = True) -> Trajectory:
    """Coupled pair IVP with series start for both components; termination
    rules apply to the first component that crosses zero."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    n = p.n
    f0 = float(evaluate(p.f, {"r": 0.0, "v": beta}))
    g0 = float(evaluate(p.g, {"r": 0.0, "u": alpha}))
    r0 = _series_radius(n, cfg.start_radius(p.R), (alpha, f0), (beta, g0))
    y0 = [alpha - f0 * r0 ** 2 / (2 * n), -f0 * r0 / n,
          beta - g0 * r0 ** 2 / (2 * n), -g0 * r0 / n]
    events = [_blowup_event(cfg.blowup_bound, 4)]
    if terminate_on_crossing:
        events.extend([_crossing_event(0), _crossing_event(2)])
    rtol, atol = (cfg.rtol, cfg.atol) if tight else (cfg.scan_rtol, cfg.scan_atol)
    sol = solve_ivp(_pair_rhs(p, n), (r0, r_max), y0, method="RK45",
                    rtol=rtol, atol=atol, events=events, dense_output=True)
    termination, radius, comp = _classify(sol, terminate_on_crossing, 2)
    return Trajectory(r=sol.t, u=sol.y[0], du=sol.y[1], v=sol.y[2], dv=sol.y[3],
                      termination=termination, crossing_radius=radius,
                      crossing_component=comp, dense=sol.sol)


def _classify(sol, had_crossing_events: bool, ncomp: int):
    if sol.status != 1:
        return "reached_rmax", None, None
    if sol.t_events[0].size:
        return "blow_up", None, None
    if had_crossing_events:
        hits = [(ev[0], "uv"[i]) for i, ev in enumerate(sol.t_events[1:1 + ncomp]) if ev.size]
        if hits:
            radius, comp = min(hits)
            return "zero_crossing", float(radius), comp
    return "reached_rmax", None, None


# ---------------------------------------------------------------------------
# Scalar shooting
# ---------------------------------------------------------------------------

def first_zero_radius(p: RadialProblem, alpha: float, r_max: float,
                      cfg: ShootingConfig, tight: bool = False) -> float:
    """rho(alpha): radius of the first zero of u, or +inf when the trajectory
    stays positive (or blows up) before r_max."""
    traj = integrate_scalar_ivp(p, alpha, r_max, cfg, tight=tight)
    if traj.termination == "zero_crossing":
        return traj.crossing_radius
    return np.inf


def shoot_scalar(p: RadialProblem, cfg: ShootingConfig = ShootingConfig()) -> RadialSolution:
    """Solve the scalar Dirichlet problem on the ball of radius R.

    Brackets rho(alpha) around R on a logarithmic alpha grid, bisects until
    |rho(alpha) - R| <= radius_tol, then resamples the accepted trajectory on
    a uniform grid ending exactly at R.
    """
    if p.kind != "scalar":
        raise ValueError("shoot_scalar requires a scalar problem")
    R = p.R
    scan_rmax = 2.0 * R
    lo, hi, count = cfg.alpha_grid
    alphas = np.geomspace(lo, hi, int(count))
    signs = []
    for a in alphas:
        rho = first_zero_radius(p, float(a), scan_rmax, cfg)
        if np.isfinite(rho) and abs(rho - R) <= cfg.radius_tol:
            return _accept_scalar(p, float(a), cfg)
        signs.append(1.0 if rho > R else -1.0)
    bracket = None
    for i in range(len(alphas) - 1):
        if signs[i] * signs[i + 1] < 0:
            bracket = (float(alphas[i]), float(alphas[i + 1]), signs[i])
            break
    if bracket is None:
        raise NoBracketError(
            f"rho(alpha) never straddles R={R:g} over alpha in "
            f"[{lo:g}, {hi:g}] ({count} starts); no Dirichlet radius was "
            "bracketed (empirical signature of non-existence)")
    a_lo, a_hi, sign_lo = bracket
    alpha = None
    for it in range(cfg.max_bisect):
        mid = _geometric_mid(a_lo, a_hi)
        rho = first_zero_radius(p, mid, scan_rmax, cfg, tight=True)
        if np.isfinite(rho) and abs(rho - R) <= cfg.radius_tol:
            alpha = mid
            break
        s = 1.0 if rho > R else -1.0
        if s == sign_lo:
            a_lo = mid
        else:
            a_hi = mid
        if (a_hi - a_lo) <= 1e-15 * a_hi:
            alpha = mid
            break
    if alpha is None:
        raise NoConvergenceError(
            f"bisection did not reach |rho - R| <= {cfg.radius_tol:g} "
            f"in {cfg.max_bisect} iterations")
    alpha = _secant_polish(p, alpha, cfg)
    return _accept_scalar(p, alpha, cfg)


def _boundary_value_scalar(p: RadialProblem, alpha: float, cfg: ShootingConfig) -> float:
    traj = integrate_scalar_ivp(p, alpha, p.R, cfg, terminate_on_crossing=False)
    if traj.termination == "blow_up":
        return np.nan
    return float(traj.dense(p.R)[0])


def _secant_polish(p: RadialProblem, alpha: float, cfg: ShootingConfig) -> float:
    # bisection stops on the crossing radius; a few secant steps on the
    # boundary value u(R; alpha) push |u(R)| down to integration accuracy,
    # which the identity quadratures then inherit
    a0 = alpha
    a1 = alpha * (1.0 + 1e-7)
    phi0 = _boundary_value_scalar(p, a0, cfg)
    phi1 = _boundary_value_scalar(p, a1, cfg)
    best, best_phi = (a0, abs(phi0)) if abs(phi0) < abs(phi1) else (a1, abs(phi1))
    for _ in range(6):
        if not np.isfinite(phi0) or not np.isfinite(phi1) or phi1 == phi0:
            break
        a2 = a1 - phi1 * (a1 - a0) / (phi1 - phi0)
        if not np.isfinite(a2) or a2 <= 0:
            break
        phi2 = _boundary_value_scalar(p, a2, cfg)
        a0, phi0, a1, phi1 = a1, phi1, a2, phi2
        if np.isfinite(phi2) and abs(phi2) < best_phi:
            best, best_phi = a2, abs(phi2)
        if best_phi <= 1e-14 * max(1.0, alpha):
            break
    return best


def _geometric_mid(a: float, b: float) -> float:
    # geometric midpoint: the bracket grid is logarithmic
    return float(np.sqrt(a * b))


def _uniform_grid(r0: float, R: float, points: int) -> np.ndarray:
    grid = np.linspace(r0, R, points)
    grid[-1] = R
    return grid


def _accept_scalar(p: RadialProblem, alpha: float, cfg: ShootingConfig) -> RadialSolution:
    traj = integrate_scalar_ivp(p, alpha, p.R, cfg, terminate_on_crossing=False)
    if traj.termination == "blow_up":
        raise NoConvergenceError("accepted alpha blew up on re-integration")
    grid = _uniform_grid(cfg.start_radius(p.R), p.R, cfg.resample_points)
    y = traj.dense(grid)
    u, du = y[0].copy(), y[1]
    _check_positive(u, alpha, "u")
    u[-1] = _snap_boundary(u[-1], alpha)
    return RadialSolution(n=p.n, R=p.R, r=grid, u=u, du=du, alpha=alpha)


def _check_positive(values: np.ndarray, scale: float, name: str):
    if np.any(values[:-1] <= 0):
        raise PositivityLostError(f"{name} is not positive on [r0, R)")


def _snap_boundary(value: float, scale: float) -> float:
    # Roundoff at the Dirichlet end must not break fractional powers of the
    # solution downstream; microscopic negatives are snapped to zero.
    if -1e-7 * max(1.0, scale) < value < 0.0:
        return 0.0
    return value


# ---------------------------------------------------------------------------
# Pair shooting
# ---------------------------------------------------------------------------

def _pair_boundary(p: RadialProblem, alpha: float, beta: float, cfg: ShootingConfig):
    traj = integrate_pair_ivp(p, alpha, beta, p.R, cfg, terminate_on_crossing=False)
    if traj.termination == "blow_up":
        return None, traj
    uR = float(traj.dense(p.R)[0])
    vR = float(traj.dense(p.R)[2])
    return np.array([uR, vR]), traj


def power_form(e: ExprNode, name: str):
    """Match c * name^k with c > 0; returns (c, k) or None."""
    from .expr import Const, Pow, Prod, Var, simplify

    s = simplify(e)
    if isinstance(s, Const):
        return (s.value, 0.0) if s.value > 0 else None
    if isinstance(s, Var) and s.name == name:
        return (1.0, 1.0)
    if isinstance(s, Pow) and isinstance(s.base, Var) and s.base.name == name:
        return (1.0, s.exponent)
    if isinstance(s, Prod) and len(s.factors) == 2:
        c, rest = s.factors
        if isinstance(c, Const) and c.value > 0:
            inner = power_form(rest, name)
            if inner is not None:
                return (c.value * inner[0], inner[1])
    return None


def _first_crosser(p: RadialProblem, alpha: float, beta: float, horizon: float,
                   cfg: ShootingConfig):
    """Which component crosses zero first from this start: 'u', 'v' or None."""
    traj = integrate_pair_ivp(p, alpha, beta, horizon, cfg, tight=False)
    if traj.termination != "zero_crossing":
        return None, None
    return traj.crossing_component, traj.crossing_radius


def _power_pair_start(p: RadialProblem, cfg: ShootingConfig,
                      starts: int = 33, horizon_factor: float = 50.0):
    """Start for pure-power pairs f = c_f v^p, g = c_g u^q via scaling.

    The system is invariant under u -> lam^a u(lam r), v -> lam^b v(lam r)
    with a = 2(p+1)/(pq-1), b = 2(q+1)/(pq-1), so the two-parameter search
    collapses to one: fix alpha = 1, bisect beta until u and v first cross
    at the same radius, then rescale that radius onto R.
    """
    fp = power_form(p.f, "v")
    gq = power_form(p.g, "u")
    if fp is None or gq is None:
        return None
    pw, qw = fp[1], gq[1]
    if abs(pw * qw - 1.0) < 1e-9:
        return None
    a_exp = 2.0 * (pw + 1.0) / (pw * qw - 1.0)
    b_exp = 2.0 * (qw + 1.0) / (pw * qw - 1.0)
    horizon = horizon_factor * p.R
    betas = np.geomspace(1e-4, 1e4, starts)
    marks = [_first_crosser(p, 1.0, float(b), horizon, cfg) for b in betas]
    brackets = []
    for i in range(len(betas) - 1):
        ci, cj = marks[i][0], marks[i + 1][0]
        if ci is not None and cj is not None and ci != cj:
            brackets.append((float(betas[i]), float(betas[i + 1]), ci))
    for b_lo, b_hi, mark_lo in brackets:
        best = None
        for _ in range(200):
            mid = _geometric_mid(b_lo, b_hi)
            mark, radius = _first_crosser(p, 1.0, mid, horizon, cfg)
            if mark is None:
                # no crossing within the horizon: near-critical data pushes
                # the simultaneous crossing out of budget; fall back on the
                # deepest resolvable iterate as a polish start
                break
            best = (mid, radius)
            if mark == mark_lo:
                b_lo = mid
            else:
                b_hi = mid
            if (b_hi - b_lo) <= 1e-13 * b_hi:
                break
        if best is not None:
            beta_mid, radius = best
            lam = radius / p.R
            return (lam ** a_exp, lam ** b_exp * beta_mid)
    return None


def shoot_pair(p: RadialProblem, cfg: ShootingConfig = ShootingConfig()) -> RadialSolution:
    """Two-parameter shooting for the Hamiltonian pair on the ball.

    Newton iteration on (alpha, beta) -> (u(R), v(R)) with a forward
    finite-difference Jacobian and step-halving damping; accepts when both
    boundary values are below tolerance and positivity held on [r0, R).
    Pure-power pairs get their start from the system's scaling symmetry,
    which is exact up to bisection tolerance; other pairs start from a
    logarithmic grid search.
    """
    if p.kind != "pair":
        raise ValueError("shoot_pair requires a pair problem")
    starts = []
    power_start = _power_pair_start(p, cfg)
    if power_start is not None:
        starts.append(power_start)
    starts.extend(_pair_start_candidates(p, cfg))
    if not starts:
        raise NoConvergenceError("no usable (alpha, beta) start: every candidate blew up")
    last_residual = None
    for alpha0, beta0 in starts:
        result = _pair_newton(p, alpha0, beta0, cfg)
        if isinstance(result, tuple):
            alpha, beta = result
            return _accept_pair(p, alpha, beta, cfg)
        last_residual = result
    raise NoConvergenceError(
        f"pair Newton failed from {len(starts)} starts", last_residual=last_residual)


def _pair_start_candidates(p: RadialProblem, cfg: ShootingConfig):
    lo, hi, count = cfg.pair_grid
    grid = np.geomspace(lo, hi, int(count))
    scan_cfg = replace(cfg, rtol=cfg.scan_rtol, atol=cfg.scan_atol)
    scored = []
    for a in grid:
        for b in grid:
            F, traj = _pair_boundary(p, float(a), float(b), scan_cfg)
            if F is None:
                continue
            # score relative to the heights: as (alpha, beta) -> 0 the
            # boundary values scale like the heights themselves, and an
            # absolute score would steer Newton into the trivial solution
            scored.append((float(np.hypot(*F)) / max(a, b), float(a), float(b)))
    scored.sort()
    return [(a, b) for _, a, b in scored[:5]]


def _pair_newton(p: RadialProblem, alpha: float, beta: float, cfg: ShootingConfig):
    F, _ = _pair_boundary(p, alpha, beta, cfg)
    if F is None:
        return None
    norm = float(np.max(np.abs(F)))
    for _ in range(cfg.max_newton):
        # tolerance relative to the heights, so the trivial solution
        # (boundary values ~ alpha as alpha -> 0) can never be accepted
        tol = cfg.boundary_tol * max(alpha, beta)
        if norm <= tol:
            return alpha, beta
        ha = cfg.fd_step_rel * (1.0 + abs(alpha))
        hb = cfg.fd_step_rel * (1.0 + abs(beta))
        Fa, _ = _pair_boundary(p, alpha + ha, beta, cfg)
        Fb, _ = _pair_boundary(p, alpha, beta + hb, cfg)
        if Fa is None or Fb is None:
            return norm
        J = np.column_stack(((Fa - F) / ha, (Fb - F) / hb))
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return norm
        lam = 1.0
        improved = False
        for _ in range(cfg.damping_halvings):
            na, nb = alpha + lam * step[0], beta + lam * step[1]
            if na > 0 and nb > 0:
                Fn, _ = _pair_boundary(p, na, nb, cfg)
                if Fn is not None and float(np.max(np.abs(Fn))) < norm:
                    alpha, beta, F = na, nb, Fn
                    norm = float(np.max(np.abs(F)))
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            return norm
    tol = cfg.boundary_tol * max(alpha, beta)
    return (alpha, beta) if norm <= tol else norm


def _accept_pair(p: RadialProblem, alpha: float, beta: float, cfg: ShootingConfig) -> RadialSolution:
    traj = integrate_pair_ivp(p, alpha, beta, p.R, cfg, terminate_on_crossing=False)
    grid = _uniform_grid(cfg.start_radius(p.R), p.R, cfg.resample_points)
    y = traj.dense(grid)
    u, du, v, dv = y[0].copy(), y[1], y[2].copy(), y[3]
    _check_positive(u, alpha, "u")
    _check_positive(v, beta, "v")
    u[-1] = _snap_boundary(u[-1], alpha)
    v[-1] = _snap_boundary(v[-1], beta)
    return RadialSolution(n=p.n, R=p.R, r=grid, u=u, du=du, alpha=alpha,
                          v=v, dv=dv, beta=beta)


# ---------------------------------------------------------------------------
# Positivity probe
# ---------------------------------------------------------------------------

def positivity_probe(p: RadialProblem, starts: Sequence, r_horizon: float,
                     cfg: ShootingConfig = ShootingConfig()) -> ProbeReport:
    """Integrate each start to the horizon and report whether any trajectory
    attains a zero (a candidate Dirichlet radius).

    Empirical corroboration only: for supercritical data the expected
    summary is that no start crosses.
    """
    if len(starts) == 0:
        raise ValueError("probe grid must be nonempty")
    entries = []
    for start in starts:
        if p.kind == "scalar":
            alpha = float(start)
            traj = integrate_scalar_ivp(p, alpha, r_horizon, cfg, tight=False)
            key = (alpha,)
        else:
            alpha, beta = (float(start[0]), float(start[1]))
            traj = integrate_pair_ivp(p, alpha, beta, r_horizon, cfg, tight=False)
            key = (alpha, beta)
        if traj.termination == "zero_crossing":
            entries.append(ProbeEntry(key, "crossed-zero-at-radius", traj.crossing_radius))
        elif traj.termination == "blow_up":
            entries.append(ProbeEntry(key, "blow-up"))
        else:
            entries.append(ProbeEntry(key, "positive-up-to-horizon"))
    return ProbeReport(horizon=r_horizon, entries=tuple(entries))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_solution_csv(sol, path) -> None:
    """Columns r,u,du[,v,dv], one row per grid node.

    Accepts a RadialSolution or a raw Trajectory (same column layout).
    """
    pair = sol.v is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "u", "du", "v", "dv"] if pair else ["r", "u", "du"])
        for i in range(sol.r.size):
            row = [f"{sol.r[i]:.12g}", f"{sol.u[i]:.12g}", f"{sol.du[i]:.12g}"]
            if pair:
                row += [f"{sol.v[i]:.12g}", f"{sol.dv[i]:.12g}"]
            writer.writerow(row)
