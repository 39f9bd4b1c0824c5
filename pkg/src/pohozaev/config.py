"""Config loading and validation.

Configs are JSON, validated against the published schemas in
pohozaev/schemas before any computation; unknown keys are rejected there.
This module also maps validated dictionaries onto problem and solver
objects.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .criteria import DomainSampler
from .errors import ConfigError, ExprError
from .expr import parse
from .radial import RadialProblem, ShootingConfig
from .rect import NewtonConfig, RectDomain
from . import defaults


def _load_schema(name: str) -> dict:
    with resources.files("pohozaev.schemas").joinpath(name).open() as fh:
        return json.load(fh)


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"malformed JSON in {path}: {err.msg} at line {err.lineno} "
            f"column {err.colno}") from None


def _validate(data: dict, schema_name: str) -> dict:
    schema = _load_schema(schema_name)
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {err.message}") from None
    return data


def load_run_config(path) -> dict:
    return _validate(load_json(path), "run_config.json")


def load_check_config(path) -> dict:
    return _validate(load_json(path), "check_config.json")


def load_sweep_config(path) -> dict:
    return _validate(load_json(path), "sweep_config.json")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _parse_expr(text: str, symbols, what: str):
    try:
        return parse(text, symbols)
    except ExprError as err:
        raise ConfigError(f"invalid expression for {what}: {err}") from None


def pair_symbol_names(m: int):
    if m == 1:
        return ["u"], ["v"]
    return [f"u{k}" for k in range(1, m + 1)], [f"v{k}" for k in range(1, m + 1)]


def build_problem(cfg: dict):
    """Returns ("radial", RadialProblem) or ("rect", (RectDomain, f)) or
    ("general", dict with H, pairs, m)."""
    n = cfg["n"]
    dom = cfg["domain"]
    prob = cfg["problem"]
    if dom["type"] == "ball":
        R = dom["radius"]
        if prob["type"] == "scalar":
            f = _parse_expr(prob["f"], {"r", "u"}, "f")
            return "radial", RadialProblem(n=n, R=R, f=f)
        if prob["type"] == "pair":
            f = _parse_expr(prob["f"], {"r", "v"}, "f")
            g = _parse_expr(prob["g"], {"r", "u"}, "g")
            return "radial", RadialProblem(n=n, R=R, f=f, g=g)
        m = prob["m"]
        us, vs = pair_symbol_names(m)
        symbols = set(us) | set(vs) | {"r"} | {f"x{i}" for i in range(1, n + 1)}
        H = _parse_expr(prob["H"], symbols, "H")
        pairs = []
        for k, item in enumerate(prob.get("pairs", [])):
            f = _parse_expr(item["f"], {"r", "v"}, f"pairs[{k}].f")
            g = _parse_expr(item["g"], {"r", "u"}, f"pairs[{k}].g")
            pairs.append(RadialProblem(n=n, R=R, f=f, g=g))
        if pairs and len(pairs) != m:
            raise ConfigError(f"problem.m = {m} but {len(pairs)} pairs given")
        return "general", {"H": H, "pairs": pairs, "m": m, "n": n, "R": R}
    # rectangle
    if prob["type"] != "scalar":
        raise ConfigError("rectangle domains support scalar problems only")
    a1, a2 = dom["half_widths"]
    f = _parse_expr(prob["f"], {"x1", "x2", "u"}, "f")
    return "rect", (RectDomain(a1, a2), f)


def build_shooting_config(cfg: dict) -> ShootingConfig:
    s = cfg.get("solver", {})
    kwargs = {}
    for key in ("rtol", "atol", "radius_tol", "boundary_tol", "resample_points"):
        if key in s:
            kwargs[key] = s[key]
    if "max_newton" in s:
        kwargs["max_newton"] = s["max_newton"]
    return ShootingConfig(**kwargs)


def build_newton_config(cfg: dict) -> NewtonConfig:
    s = cfg.get("solver", {})
    kwargs = {}
    if "grid_n" in s:
        kwargs["N1"] = s["grid_n"]
        kwargs["N2"] = s["grid_n"]
    if "newton_tol" in s:
        kwargs["tol"] = s["newton_tol"]
    if "method" in s:
        kwargs["method"] = s["method"]
    return NewtonConfig(**kwargs)


def identity_a_values(cfg: dict, m: int = 1) -> list:
    a = cfg.get("identity", {}).get("a", 1.0)
    if isinstance(a, (int, float)):
        return [float(a)] * max(m, 1)
    values = [float(x) for x in a]
    if m > 1 and len(values) != m:
        raise ConfigError(f"identity.a must have {m} entries for m = {m}")
    return values


def build_sampler(cfg: dict) -> DomainSampler:
    dom = cfg.get("domain")
    if dom is None:
        return DomainSampler()
    if dom["type"] == "ball":
        return DomainSampler("ball", radius=dom["radius"], n=cfg["n"])
    return DomainSampler("rectangle", half_widths=tuple(dom["half_widths"]),
                         n=cfg["n"])


def criteria_kwargs(cfg: dict) -> dict:
    c = cfg.get("criteria", {})
    out = {}
    if "alpha_range" in c:
        out["search"] = tuple(c["alpha_range"])
    if "alpha_count" in c:
        out["search_count"] = c["alpha_count"]
    if "sample_range" in c:
        out["sample_range"] = tuple(c["sample_range"])
    if "sample_count" in c:
        out["sample_count"] = c["sample_count"]
    return out
