"""Figure rendering for reports.

All figures are written to files (SVG by default) next to the delimited
output; nothing is shown interactively.  Output is kept deterministic by
pinning the SVG hash salt and dropping the date metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .criteria import hyperbola_gap  # noqa: E402
from . import defaults  # noqa: E402

plt.rcParams["svg.hashsalt"] = "pohozaev"

_CLASS_STYLE = {
    "Subcritical": dict(marker="o", color="#2166ac", label="Subcritical"),
    "Critical": dict(marker="s", color="#4d4d4d", label="Critical"),
    "Supercritical": dict(marker="^", color="#b2182b", label="Supercritical"),
    "Inconclusive": dict(marker="x", color="#999999", label="Inconclusive"),
}

_SAVE_KW = dict(metadata={"Date": None}, format="svg")


def _square_figure():
    # 800 x 800 SVG viewport (matplotlib emits 72 pt per inch)
    return plt.subplots(figsize=(800 / 72, 800 / 72))


def sweep_scatter_figure(rows, n: int, path) -> None:
    """Flat (p, q)-plane scatter, one marker per class, with the critical
    hyperbola overlaid as a polyline."""
    fig, ax = _square_figure()
    by_class = {}
    for row in rows:
        by_class.setdefault(row.classification, []).append((row.p, row.q))
    for cls, pts in sorted(by_class.items()):
        arr = np.asarray(pts)
        style = _CLASS_STYLE.get(cls, dict(marker=".", color="k", label=cls))
        ax.scatter(arr[:, 0], arr[:, 1], s=36, **style)
    ps = [row.p for row in rows]
    qs = [row.q for row in rows]
    p_lo, p_hi = min(ps), max(ps)
    q_lo, q_hi = min(qs), max(qs)
    if n >= 3:
        curve_p, curve_q = _hyperbola_polyline(n, p_lo, p_hi, q_lo, q_hi)
        if curve_p.size:
            ax.plot(curve_p, curve_q, "-", color="#222222", linewidth=1.2,
                    label="critical hyperbola")
    ax.set_xlabel("p")
    ax.set_ylabel("q")
    ax.set_title(f"critical hyperbola map, n = {n}")
    ax.legend(loc="upper right")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def _hyperbola_polyline(n: int, p_lo, p_hi, q_lo, q_hi):
    # q(p) = 1 / ((n-2)/n - 1/(p+1)) - 1 where the denominator is positive
    ps = np.linspace(p_lo, p_hi, defaults.SWEEP_HYPERBOLA_SAMPLES)
    den = (n - 2) / n - 1.0 / (ps + 1.0)
    qs = np.where(den > 1e-12, 1.0 / np.where(den > 1e-12, den, 1.0) - 1.0, np.nan)
    mask = np.isfinite(qs) & (qs >= q_lo) & (qs <= q_hi)
    return ps[mask], qs[mask]


def radial_profile_figure(sol, path) -> None:
    """Solution profile u(r) (and v(r) for pairs)."""
    fig, ax = plt.subplots(figsize=(640 / 72, 480 / 72))
    ax.plot(sol.r, sol.u, "-", color="#2166ac", label="u")
    if sol.kind == "pair":
        ax.plot(sol.r, sol.v, "--", color="#b2182b", label="v")
    ax.axhline(0.0, color="#888888", linewidth=0.6)
    ax.set_xlabel("r")
    ax.set_ylabel("value")
    ax.legend()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def grid_heatmap_figure(sol, path) -> None:
    """Nodal field on the rectangle."""
    fig, ax = plt.subplots(figsize=(640 / 72, 520 / 72))
    im = ax.pcolormesh(sol.x1, sol.x2, sol.u.T, shading="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label="u")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_aspect("equal")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def convergence_figure(rows, path, ylabel="residual") -> None:
    """Log-log refinement plot with a slope-2 guide."""
    hs = np.asarray([row.h for row in rows])
    vals = np.asarray([row.value for row in rows])
    fig, ax = plt.subplots(figsize=(640 / 72, 480 / 72))
    ax.loglog(hs, vals, "o-", color="#2166ac", label=ylabel)
    positive = vals > 0
    if np.any(positive):
        ref = vals[positive][0] * (hs / hs[positive][0]) ** 2
        ax.loglog(hs, ref, "--", color="#888888", label="order 2")
    ax.set_xlabel("h")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
