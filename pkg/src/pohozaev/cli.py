"""Command-line entry point.

Subcommands: solve, verify, check, sweep, convergence.  Exit codes:
0 ok, 2 config error, 3 solver failure, 4 identity gate exceeded,
5 equation residual too high on supplied data, 6 refusing to overwrite.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import defaults
from .config import (
    build_newton_config,
    build_problem,
    build_sampler,
    build_shooting_config,
    criteria_kwargs,
    identity_a_values,
    load_check_config,
    load_run_config,
    load_sweep_config,
    pair_symbol_names,
)
from .criteria import (
    PowerSpec,
    biharmonic_check,
    classify_hyperbola,
    general_condition,
    mitidieri_condition,
    scalar_supercritical,
    theorem2_condition,
)
from .errors import ConfigError, IdentityError, PohozaevError, SolverError
from .expr import parse as parse_expr
from .identity import (
    energy_identities,
    general_identity,
    pair_identity_radial,
    scalar_identity_grid,
    scalar_identity_radial,
)
from .radial import (
    RadialSolution,
    shoot_pair,
    shoot_scalar,
    write_solution_csv,
)
from .rect import RectDomain, make_grid_solution, solve_scalar_grid, write_grid_csv
from .sweep import (
    SweepSpec,
    convergence_study_grid,
    convergence_study_radial,
    richardson_limit,
    run_sweep,
    sweep_summary,
    write_study_csv,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_GATE = 4
EXIT_EQUATION = 5
EXIT_OVERWRITE = 6


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pohozaev",
        description="Solvers, identity verifiers, non-existence criteria and "
                    "sweeps for semilinear elliptic problems and Hamiltonian "
                    "pairs on balls and rectangles.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--format", choices=["json", "text", "csv"],
                       default="json", help="stdout format")
        if out:
            p.add_argument("--out", help="output directory for artifacts")
            p.add_argument("--force", action="store_true",
                           help="overwrite existing outputs")

    p_solve = sub.add_parser("solve", help="solve the configured problem")
    common(p_solve)

    p_verify = sub.add_parser("verify", help="verify the identity on a solved "
                                             "or supplied solution")
    common(p_verify)
    p_verify.add_argument("--a", help="comma-separated identity parameters")
    p_verify.add_argument("--gate", type=float, default=defaults.VERIFY_GATE,
                          help="relative residual gate (default %(default)g)")
    p_verify.add_argument("--solution", help="solution CSV to verify instead "
                                             "of solving")

    p_check = sub.add_parser("check", help="decide non-existence criteria")
    common(p_check, out=False)

    p_sweep = sub.add_parser("sweep", help="classify a (p, q) grid")
    common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="worker processes (default 1)")

    p_conv = sub.add_parser("convergence", help="residual refinement study")
    common(p_conv)
    p_conv.add_argument("--levels", help="comma-separated refinement levels")
    return parser


def _ensure_out(args, *names):
    out = Path(args.out) if args.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / name for name in names]
    if not args.force:
        for path in paths:
            if path.exists():
                print(f"refusing to overwrite {path} (use --force)",
                      file=sys.stderr)
                raise SystemExit(EXIT_OVERWRITE)
    return paths


def _emit(data: dict, fmt: str, text_fallback=None):
    if fmt == "json":
        print(json.dumps(data, sort_keys=True, indent=2))
    elif text_fallback is not None:
        print(text_fallback)
    else:
        print(json.dumps(data, sort_keys=True, indent=2))


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = load_run_config(args.config)
    kind, built = build_problem(cfg)
    from .plots import grid_heatmap_figure, radial_profile_figure

    csv_path, report_path, fig_path = _ensure_out(
        args, "solution.csv", "solve_report.json", "solution.svg")
    if kind == "radial":
        prob = built
        scfg = build_shooting_config(cfg)
        sol = shoot_scalar(prob, scfg) if prob.kind == "scalar" else shoot_pair(prob, scfg)
        write_solution_csv(sol, csv_path)
        radial_profile_figure(sol, fig_path)
        report = {
            "kind": prob.kind, "n": prob.n, "R": prob.R,
            "alpha": sol.alpha, "beta": sol.beta,
            "boundary_values": {"u": sol.u[-1],
                                "v": None if sol.v is None else sol.v[-1]},
            "grid_points": int(sol.r.size),
        }
    elif kind == "rect":
        dom, f = built
        ncfg = build_newton_config(cfg)
        sol = solve_scalar_grid(dom, f, ncfg)
        write_grid_csv(sol, csv_path)
        grid_heatmap_figure(sol, fig_path)
        report = {
            "kind": "rectangle", "half_widths": [dom.a1, dom.a2],
            "iterations": sol.iterations, "residual_norm": sol.residual_norm,
            "center_value": sol.center_value, "positive": sol.positive,
            "warnings": list(sol.warnings),
            "grid_nodes": [int(sol.x1.size), int(sol.x2.size)],
        }
    else:
        raise ConfigError("solve supports scalar and pair problems; general "
                          "Hamiltonians are verified from their decoupled pairs")
    report_path.write_text(json.dumps(report, sort_keys=True, indent=2))
    _emit(report, args.format,
          "\n".join(f"{k}: {v}" for k, v in sorted(report.items())))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _load_radial_csv(path, n: int, R: float) -> RadialSolution:
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    if names is None or "r" not in names or "u" not in names or "du" not in names:
        raise ConfigError(f"solution CSV {path} must have columns r,u,du[,v,dv]")
    r = np.asarray(data["r"], dtype=float)
    if r.size < 9 or np.max(np.abs(np.diff(r) - (r[1] - r[0]))) > 1e-9 * (r[-1] - r[0]):
        raise ConfigError("solution grid must be uniform")
    kwargs = {}
    if "v" in names and "dv" in names:
        kwargs = {"v": np.asarray(data["v"], dtype=float),
                  "dv": np.asarray(data["dv"], dtype=float),
                  "beta": float(data["v"][0])}
    return RadialSolution(n=n, R=R, r=r, u=np.asarray(data["u"], dtype=float),
                          du=np.asarray(data["du"], dtype=float),
                          alpha=float(data["u"][0]), **kwargs)


def _load_rect_csv(path, dom: RectDomain):
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.dtype.names is None or set(data.dtype.names) != {"x1", "x2", "u"}:
        raise ConfigError(f"solution CSV {path} must have columns x1,x2,u")
    x1 = np.unique(np.asarray(data["x1"], dtype=float))
    x2 = np.unique(np.asarray(data["x2"], dtype=float))
    if x1.size * x2.size != data["u"].size:
        raise ConfigError("solution CSV does not cover a complete lattice")
    u = np.asarray(data["u"], dtype=float).reshape(x1.size, x2.size)
    return make_grid_solution(dom, u)


def _a_values(args, cfg, m: int):
    if args.a is not None:
        return [float(x) for x in args.a.split(",")]
    return identity_a_values(cfg, m)


def cmd_verify(args) -> int:
    cfg = load_run_config(args.config)
    kind, built = build_problem(cfg)
    supplied = args.solution is not None
    reports = []
    energy = None

    if kind == "radial":
        prob = built
        scfg = build_shooting_config(cfg)
        if supplied:
            sol = _load_radial_csv(args.solution, prob.n, prob.R)
            if (sol.kind == "pair") != (prob.kind == "pair"):
                raise ConfigError("solution file does not match the problem kind")
        else:
            sol = shoot_scalar(prob, scfg) if prob.kind == "scalar" else shoot_pair(prob, scfg)
        if prob.kind == "scalar":
            reports.append(scalar_identity_radial(sol, prob.f))
            energy = energy_identities(sol, prob.f)
        else:
            for a in _a_values(args, cfg, 1):
                reports.append(pair_identity_radial(sol, prob.f, prob.g, a=a))
            energy = energy_identities(sol, prob.f, prob.g)
    elif kind == "rect":
        dom, f = built
        if supplied:
            sol = _load_rect_csv(args.solution, dom)
        else:
            sol = solve_scalar_grid(dom, f, build_newton_config(cfg))
        reports.append(scalar_identity_grid(sol, f))
        energy = energy_identities(sol, f)
    else:
        info = built
        if supplied:
            raise ConfigError("general verification solves its decoupled "
                              "pairs; --solution is not supported")
        if not info["pairs"]:
            raise ConfigError("general verification requires problem.pairs")
        scfg = build_shooting_config(cfg)
        sols = [shoot_pair(p, scfg) for p in info["pairs"]]
        a = _a_values(args, cfg, info["m"])
        if len(a) == 1 and info["m"] > 1:
            a = a * info["m"]
        reports.append(general_identity(sols, info["H"], a))

    max_rel = max(r.rel_residual for r in reports)
    flagged = any("EquationResidualHigh" in r.flags for r in reports)
    payload = {"reports": [r.to_json_dict() for r in reports],
               "gate": args.gate, "max_rel_residual": max_rel}
    if energy is not None:
        payload["energy"] = energy.to_json_dict()
    text = "\n\n".join(r.to_text() for r in reports)
    if energy is not None:
        text += "\n\nenergy identities: " + json.dumps(energy.to_json_dict(),
                                                       sort_keys=True)
    _emit(payload, args.format, text)
    if args.out:
        (path,) = _ensure_out(args, "verify_report.json")
        path.write_text(json.dumps(payload, sort_keys=True, indent=2))
    if supplied and flagged:
        print("equation residual exceeds the gate: the supplied data does "
              "not solve the configured problem", file=sys.stderr)
        return EXIT_EQUATION
    if max_rel > args.gate:
        print(f"identity residual {max_rel:.3e} exceeds gate {args.gate:g}",
              file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _run_check(item: dict, n: int, sampler, kw) -> dict:
    kind = item["type"]
    if kind == "hyperbola":
        classification, verdict = classify_hyperbola(PowerSpec(item["p"], item["q"], n))
        out = verdict.to_json_dict()
        out["classification"] = classification
        return out
    if kind == "scalar":
        return scalar_supercritical(item["p"], n).to_json_dict()
    if kind == "biharmonic":
        return biharmonic_check(item["q"], n).to_json_dict()
    if kind == "mitidieri":
        H = parse_expr(item["H"], {"u", "v"})
        return mitidieri_condition(H, n, **kw).to_json_dict()
    if kind == "theorem2":
        symbols = {"u", "r", "x1", "x2"} | {f"x{i}" for i in range(1, n + 1)}
        g = parse_expr(item["g"], symbols)
        t_kw = {k: v for k, v in kw.items() if k in ("sample_range", "sample_count")}
        return theorem2_condition(g, item["p"], n, sampler=sampler, **t_kw).to_json_dict()
    if kind == "general":
        m = item["m"]
        us, vs = pair_symbol_names(m)
        symbols = set(us) | set(vs) | {"r"} | {f"x{i}" for i in range(1, n + 1)}
        H = parse_expr(item["H"], symbols)
        g_kw = {k: v for k, v in kw.items() if k in ("search", "sample_range")}
        return general_condition(H, n, m=m, sampler=sampler, **g_kw).to_json_dict()
    raise ConfigError(f"unknown check type {kind!r}")


def cmd_check(args) -> int:
    cfg = load_check_config(args.config)
    n = cfg["n"]
    if "checks" in cfg:
        items = cfg["checks"]
        sampler = build_sampler(cfg)
        kw = criteria_kwargs(cfg)
    elif "scalar_p" in cfg:
        items = [{"type": "scalar", "p": cfg["scalar_p"]}]
        sampler, kw = build_sampler({}), {}
    elif "biharmonic_q" in cfg:
        items = [{"type": "biharmonic", "q": cfg["biharmonic_q"]}]
        sampler, kw = build_sampler({}), {}
    else:
        items = [{"type": "hyperbola", "p": cfg["p"], "q": cfg["q"]}]
        sampler, kw = build_sampler({}), {}
    verdicts = [_run_check(item, n, sampler, kw) for item in items]
    payload = {"verdicts": verdicts}
    text = "\n".join(json.dumps(v, sort_keys=True) for v in verdicts)
    _emit(payload, args.format, text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep and convergence
# ---------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    spec = SweepSpec(n=cfg["n"],
                     p_range=tuple(cfg["p_range"]), q_range=tuple(cfg["q_range"]),
                     p_count=cfg["p_count"], q_count=cfg["q_count"],
                     action=cfg.get("action", "criteria"),
                     R=cfg.get("R", 1.0),
                     gate=cfg.get("gate", defaults.VERIFY_GATE),
                     jobs=args.jobs)
    csv_path, svg_path = _ensure_out(args, "sweep.csv", "sweep.svg")
    rows, summary = run_sweep(spec)
    write_sweep_csv(rows, csv_path)
    from .plots import sweep_scatter_figure

    sweep_scatter_figure(rows, spec.n, svg_path)
    if args.format == "csv":
        print(csv_path.read_text(), end="")
    else:
        _emit(summary, args.format,
              "\n".join(f"{k}: {v}" for k, v in sorted(summary.items())))
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = load_run_config(args.config)
    kind, built = build_problem(cfg)
    levels = None
    if args.levels:
        levels = [int(x) for x in args.levels.split(",")]
    csv_path, svg_path = _ensure_out(args, "convergence.csv", "convergence.svg")
    if kind == "radial":
        prob = built
        scfg = build_shooting_config(cfg)
        sol = shoot_scalar(prob, scfg) if prob.kind == "scalar" else shoot_pair(prob, scfg)
        if levels is None:
            levels = [257, 513, 1025]
        try:
            rows = convergence_study_radial(sol, prob.f, prob.g, levels=levels)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    elif kind == "rect":
        dom, f = built
        if levels is None:
            levels = [65, 129, 257]
        method = cfg.get("solver", {}).get("method", "direct")
        try:
            rows = convergence_study_grid(dom, f, node_levels=levels, method=method)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    else:
        raise ConfigError("convergence studies support scalar and pair problems")
    write_study_csv(rows, csv_path)
    from .plots import convergence_figure

    convergence_figure(rows, svg_path, ylabel=rows[0].metric)
    payload = {"rows": [{"level": r.level, "h": r.h, "metric": r.metric,
                         "value": r.value, "order": r.order} for r in rows],
               "richardson_limit": richardson_limit(rows)}
    _emit(payload, args.format,
          "\n".join(f"level {r.level}: h={r.h:.3e} {r.metric}={r.value:.6e} "
                    f"order={r.order}" for r in rows))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve": cmd_solve, "verify": cmd_verify, "check": cmd_check,
                "sweep": cmd_sweep, "convergence": cmd_convergence}
    try:
        return handlers[args.command](args)
    except SystemExit as err:
        return int(err.code) if err.code is not None else EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        failure_report = {"failure": type(err).__name__, "reason": str(err)}
        if getattr(args, "out", None):
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "solve_report.json").write_text(
                json.dumps(failure_report, sort_keys=True, indent=2))
        print(json.dumps(failure_report, sort_keys=True))
        return EXIT_SOLVER
    except IdentityError as err:
        print(f"identity error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except PohozaevError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
