"""Matplotlib figures for the ``report`` command, drawn from the written CSV/JSON."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .functionals import prefix_extrema, segment_areas  # noqa: E402

PNG_META = {"Software": None}


def _save(fig, path) -> str:
    fig.savefig(path, dpi=110, metadata=PNG_META)
    plt.close(fig)
    return Path(path).name


def plot_curves(snaps: list[dict], path, view: float = 3.0) -> str:
    fig, ax = plt.subplots(figsize=(6, 6))
    cmap = plt.get_cmap("viridis")
    for i, s in enumerate(snaps):
        ax.plot(s["x"], s["y"], color=cmap(i / max(len(snaps) - 1, 1)), lw=0.9)
    sm = plt.cm.ScalarMappable(cmap=cmap, norm=plt.Normalize(snaps[0]["t"][0], snaps[-1]["t"][0]))
    fig.colorbar(sm, ax=ax, label="t", shrink=0.8)
    ax.set_aspect("equal")
    ax.set_xlim(-view, view)
    ax.set_ylim(-view, view)
    ax.set_title("recorded curves")
    return _save(fig, path)


def plot_functionals(snaps: list[dict], path) -> str:
    """Total swept area and the extremes of ``A - t Psi`` over all pairs, against time."""
    ts, total, h_hi, h_lo = [], [], [], []
    for s in snaps:
        t = float(s["t"][0])
        pts = np.column_stack([s["x"], s["y"]])
        S = np.concatenate([[0.0], np.cumsum(segment_areas(pts))])
        hi, _, lo, _ = prefix_extrema(S - t * s["psi"])
        ts.append(t)
        total.append(S[-1])
        h_hi.append(hi)
        h_lo.append(lo)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
    a1.plot(ts, total, "o-", ms=3)
    a1.set_xlabel("t")
    a1.set_ylabel("A(first, last, t)")
    a1.set_title("total swept area")
    a2.plot(ts, h_hi, "o-", ms=3, label="max H")
    a2.plot(ts, h_lo, "o-", ms=3, label="min H")
    a2.axhline(h_hi[0], color="gray", ls="--", lw=0.8, label="A+ and A-")
    a2.axhline(h_lo[0], color="gray", ls="--", lw=0.8)
    a2.set_xlabel("t")
    a2.set_title("H = A - t Psi over all pairs")
    a2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_curvature(snaps: list[dict], path) -> str:
    """``kappa sqrt(t)`` against the tangent angle, one line per recorded time."""
    fig, ax = plt.subplots(figsize=(6, 4))
    cmap = plt.get_cmap("plasma")
    for i, s in enumerate(snaps):
        t = float(s["t"][0])
        if t <= 0:
            continue
        psi = s["psi"] - s["psi"][0]
        ax.plot(psi, s["kappa"] * math.sqrt(t), color=cmap(i / max(len(snaps) - 1, 1)), lw=0.8)
    ax.set_xlabel("psi")
    ax.set_ylabel("kappa sqrt(t)")
    ax.set_title("scaled curvature")
    fig.tight_layout()
    return _save(fig, path)


def plot_checks(report: list[dict], path) -> str:
    colors = {"pass": "tab:green", "fail": "tab:red", "inconclusive": "tab:gray"}
    names = [r["check_id"] for r in report]
    ratio = []
    for r in report:
        tol = r["tolerance"]
        v = r["max_violation"]
        ratio.append(0.0 if r["status"] == "inconclusive" else (v / tol if tol > 0 else (0.0 if v == 0 else 2.0)))
    fig, ax = plt.subplots(figsize=(7, 0.4 * len(names) + 1.2))
    ax.barh(names, np.minimum(ratio, 2.0), color=[colors[r["status"]] for r in report])
    ax.axvline(1.0, color="black", lw=0.8)
    ax.set_xlim(0, 2.05)
    ax.set_xlabel("max violation / tolerance (clipped at 2)")
    ax.invert_yaxis()
    fig.tight_layout()
    return _save(fig, path)


def render_report(directory, snaps: list[dict], report: list[dict] | None = None) -> list[str]:
    d = Path(directory)
    files = [
        plot_curves(snaps, d / "curves.png"),
        plot_functionals(snaps, d / "functionals.png"),
        plot_curvature(snaps, d / "curvature.png"),
    ]
    if report:
        files.append(plot_checks(report, d / "checks.png"))
    return files
