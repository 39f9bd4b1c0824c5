"""Newton finite-difference solver on centered rectangles in R^2.

The domain (-a1, a1) x (-a2, a2) is star-shaped with respect to its center
and x . nu equals the half-width a_i on each face, so the boundary term of
the identity is a sum of exact face integrals.  The scalar problem
Delta u + f(x, u) = 0 with zero Dirichlet data is discretized by the
standard 5-point stencil and solved by damped Newton with optional load
continuation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from . import defaults
from .errors import EvalDomainError, NoConvergenceError
from .expr import ExprNode, evaluate, free_symbols


@dataclass(frozen=True)
class RectDomain:
    """Origin-centered rectangle with positive half-widths."""

    a1: float
    a2: float

    def __post_init__(self):
        if self.a1 <= 0 or self.a2 <= 0:
            raise ValueError("half-widths must be positive")


@dataclass(frozen=True)
class NewtonConfig:
    N1: int = defaults.GRID_N
    N2: int = defaults.GRID_N
    tol: float = defaults.NEWTON_TOL
    max_iter: int = defaults.NEWTON_MAX_ITER
    damping_halvings: int = defaults.DAMPING_HALVINGS
    method: str = "auto"          # auto | direct | cg
    cg_tol: float = defaults.CG_TOL
    cg_max_iter: int = defaults.CG_MAX_ITER
    continuation_steps: int = defaults.CONTINUATION_STEPS

    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        return "direct" if max(self.N1, self.N2) <= defaults.DIRECT_SOLVE_MAX_N else "cg"


@dataclass(frozen=True)
class GridSolution:
    dom: RectDomain
    x1: np.ndarray                 # (N1+1,)
    x2: np.ndarray                 # (N2+1,)
    u: np.ndarray                  # (N1+1, N2+1), boundary rows exactly 0
    boundary_normal: dict          # face -> |du/dnu| samples along the face
    iterations: int
    residual_norm: float
    positive: bool
    warnings: tuple = ()

    @property
    def h1(self) -> float:
        return float(self.x1[1] - self.x1[0])

    @property
    def h2(self) -> float:
        return float(self.x2[1] - self.x2[0])

    @property
    def center_value(self) -> float:
        return float(self.u[self.u.shape[0] // 2, self.u.shape[1] // 2])


def _grid(dom: RectDomain, N1: int, N2: int):
    x1 = np.linspace(-dom.a1, dom.a1, N1 + 1)
    x2 = np.linspace(-dom.a2, dom.a2, N2 + 1)
    return x1, x2


def _eval_nodewise(expr: ExprNode, X1, X2, U):
    """Vectorized evaluation; on a domain error the node is located by a
    scalar re-scan so the message can carry its index."""
    try:
        out = evaluate(expr, {"x1": X1, "x2": X2, "u": U})
        return np.broadcast_to(np.asarray(out, dtype=float), U.shape)
    except EvalDomainError:
        for i in range(U.shape[0]):
            for j in range(U.shape[1]):
                try:
                    evaluate(expr, {"x1": float(X1[i, j]), "x2": float(X2[i, j]),
                                    "u": float(U[i, j])})
                except EvalDomainError as err:
                    raise EvalDomainError(f"{err} at node ({i}, {j})") from None
        raise


def _laplacian_matrix(N1: int, N2: int, h1: float, h2: float):
    """5-point Laplacian on the interior (N1-1) x (N2-1) nodes."""
    def second_diff(m, h):
        main = -2.0 * np.ones(m)
        off = np.ones(m - 1)
        return sp.diags([off, main, off], [-1, 0, 1]) / h ** 2

    T1 = second_diff(N1 - 1, h1)
    T2 = second_diff(N2 - 1, h2)
    I1 = sp.identity(N1 - 1)
    I2 = sp.identity(N2 - 1)
    return (sp.kron(T1, I2) + sp.kron(I1, T2)).tocsc()


def assemble_residual(dom: RectDomain, f: ExprNode, u: np.ndarray) -> np.ndarray:
    """Discrete residual Delta_h u + f(x, u) on the full grid.

    Boundary entries are zero by convention (Dirichlet rows are not part of
    the system); second-order consistent on interior nodes.
    """
    N1, N2 = u.shape[0] - 1, u.shape[1] - 1
    if np.max(np.abs(u[0, :])) > 0 or np.max(np.abs(u[-1, :])) > 0 \
            or np.max(np.abs(u[:, 0])) > 0 or np.max(np.abs(u[:, -1])) > 0:
        raise ValueError("boundary entries of u must be zero")
    x1, x2 = _grid(dom, N1, N2)
    h1, h2 = x1[1] - x1[0], x2[1] - x2[0]
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    res = np.zeros_like(u)
    lap = ((u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / h1 ** 2
           + (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / h2 ** 2)
    fv = _eval_nodewise(f, X1, X2, u)
    res[1:-1, 1:-1] = lap + fv[1:-1, 1:-1]
    return res


def _linear_solve(A, rhs, cfg: NewtonConfig):
    method = cfg.resolved_method()
    if method == "direct":
        return splu(A.tocsc()).solve(rhs)
    if method == "cg":
        # CG needs a definite operator: solve (-A) x = -rhs with diagonal
        # (Jacobi) preconditioning
        M = sp.diags(1.0 / np.abs((-A).diagonal()))
        x, info = cg(-A, -rhs, rtol=cfg.cg_tol, atol=0.0,
                     maxiter=cfg.cg_max_iter, M=M)
        if info != 0:
            raise NoConvergenceError(f"CG did not converge (info={info})")
        return x
    raise ValueError(f"unknown linear solver method {method!r}")


def solve_scalar_grid(dom: RectDomain, f: ExprNode,
                      cfg: NewtonConfig = NewtonConfig()) -> GridSolution:
    """Damped Newton for the rectangle problem.

    Starts from the solution of the linear problem Delta u + f(x, 0) = 0;
    the Jacobian is the discrete Laplacian plus diag(f_u).  When plain
    Newton stalls, continuation in a load factor lam * f retries from 0 to 1
    in equal steps.  Positivity is checked and reported, not enforced.
    """
    extra = free_symbols(f) - {"x1", "x2", "u"}
    if extra:
        raise ValueError(f"f uses symbols outside ['x1', 'x2', 'u']: {sorted(extra)}")
    N1, N2 = cfg.N1, cfg.N2
    x1, x2 = _grid(dom, N1, N2)
    h1, h2 = x1[1] - x1[0], x2[1] - x2[0]
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    L = _laplacian_matrix(N1, N2, h1, h2)
    fu_expr = None
    if "u" in free_symbols(f):
        from .expr import differentiate
        fu_expr = differentiate(f, "u")

    u, iters = _newton_loop(dom, f, fu_expr, L, X1, X2, cfg, load=1.0, u0=None)
    if u is None:
        # continuation in the load factor, warm-starting each step
        steps = cfg.continuation_steps
        u_prev = None
        for k in range(1, steps + 1):
            lam = k / steps
            u, iters = _newton_loop(dom, f, fu_expr, L, X1, X2, cfg,
                                    load=lam, u0=u_prev)
            if u is None:
                raise NoConvergenceError(
                    f"Newton stalled at continuation step {k}/{steps}")
            u_prev = u
    res = assemble_residual(dom, f, u)
    res_norm = float(np.max(np.abs(res)))
    warnings = []
    positive = bool(np.min(u[1:-1, 1:-1]) > 0)
    if not positive:
        warnings.append("NonPositive")
    return GridSolution(dom=dom, x1=x1, x2=x2, u=u,
                        boundary_normal=_normal_derivatives(x1, x2, u),
                        iterations=iters, residual_norm=res_norm,
                        positive=positive, warnings=tuple(warnings))


def _newton_loop(dom, f, fu_expr, L, X1, X2, cfg, load, u0):
    N1, N2 = cfg.N1, cfg.N2
    shape = (N1 + 1, N2 + 1)

    def full(vec):
        u = np.zeros(shape)
        u[1:-1, 1:-1] = vec.reshape(N1 - 1, N2 - 1)
        return u

    def interior(arr):
        return arr[1:-1, 1:-1].ravel()

    def residual(vec):
        u = full(vec)
        fv = _eval_nodewise(f, X1, X2, u)
        return L @ vec + load * interior(fv)

    if u0 is None:
        f0 = _eval_nodewise(f, X1, X2, np.zeros(shape))
        vec = _linear_solve(L, -load * interior(f0), cfg)
        solves = 1
    else:
        vec = interior(u0)
        solves = 0
    res = residual(vec)
    norm = float(np.max(np.abs(res)))
    for it in range(1, cfg.max_iter + 1):
        if norm <= cfg.tol:
            return full(vec), solves + it - 1
        if fu_expr is not None:
            fu = _eval_nodewise(fu_expr, X1, X2, full(vec))
            J = L + load * sp.diags(interior(fu))
        else:
            J = L
        step = _linear_solve(J, -res, cfg)
        lam = 1.0
        improved = False
        for _ in range(cfg.damping_halvings):
            trial = vec + lam * step
            trial_res = residual(trial)
            trial_norm = float(np.max(np.abs(trial_res)))
            if trial_norm < norm or trial_norm <= cfg.tol:
                vec, res, norm = trial, trial_res, trial_norm
                improved = True
                break
            lam *= 0.5
        if not improved:
            return None, solves + it
    if norm <= cfg.tol:
        return full(vec), solves + cfg.max_iter
    return None, solves + cfg.max_iter


def _normal_derivatives(x1, x2, u) -> dict:
    """One-sided second-order normal derivatives per face.

    The boundary is a level set of u, so the tangential derivative vanishes
    and |grad u| equals |du/dnu| there.
    """
    h1 = x1[1] - x1[0]
    h2 = x2[1] - x2[0]
    # outward derivative at x1 = +a1 (east): (3u_N - 4u_{N-1} + u_{N-2}) / 2h
    east = (3 * u[-1, :] - 4 * u[-2, :] + u[-3, :]) / (2 * h1)
    west = -(3 * u[0, :] - 4 * u[1, :] + u[2, :]) / (2 * h1)
    north = (3 * u[:, -1] - 4 * u[:, -2] + u[:, -3]) / (2 * h2)
    south = -(3 * u[:, 0] - 4 * u[:, 1] + u[:, 2]) / (2 * h2)
    return {"east": east, "west": west, "north": north, "south": south}


def boundary_gradient(sol: GridSolution) -> dict:
    """Per-face arrays of |grad u| samples along the boundary."""
    return {face: np.abs(vals) for face, vals in sol.boundary_normal.items()}


def make_grid_solution(dom: RectDomain, u: np.ndarray) -> GridSolution:
    """Wrap externally supplied nodal values (boundary rows must be zero)."""
    N1, N2 = u.shape[0] - 1, u.shape[1] - 1
    x1, x2 = _grid(dom, N1, N2)
    return GridSolution(dom=dom, x1=x1, x2=x2, u=u,
                        boundary_normal=_normal_derivatives(x1, x2, u),
                        iterations=0, residual_norm=float("nan"),
                        positive=bool(np.min(u[1:-1, 1:-1]) > 0))


def write_grid_csv(sol: GridSolution, path) -> None:
    """Columns x1,x2,u, row-major over the node lattice."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "u"])
        for i in range(sol.x1.size):
            for j in range(sol.x2.size):
                writer.writerow([f"{sol.x1[i]:.12g}", f"{sol.x2[j]:.12g}",
                                 f"{sol.u[i, j]:.12g}"])
