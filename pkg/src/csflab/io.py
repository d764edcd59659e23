"""Scene files, trace tables, SVG frames, manifests and check reports.

All numeric output is deterministic: CSV floats use 17 significant digits
(round-trip exact), JSON is written with sorted keys and no timestamps, and
SVG coordinates use a fixed number of decimals.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .curve import InitialCurveSpec, PlanarCurve, arclengths
from .flow import FlowConfig, FlowTrace, Snapshot

CSV_COLUMNS = ("t", "node_index", "u", "x", "y", "psi", "kappa", "s")
DEFAULT_RECORDS = 20


class SceneError(ValueError):
    """A scene file that does not parse or validate; carries a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1, source: str = "<scene>"):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Scene:
    version: int
    initial: InitialCurveSpec
    flow: dict
    checks: tuple = ()
    directory: str = "out"
    formats: tuple = ("csv", "svg", "json")
    raw: dict = field(default_factory=dict, compare=False)
    source: str = "<scene>"
    text: str = field(default="", compare=False, repr=False)

    def error(self, message: str, path=()) -> SceneError:
        """A :class:`SceneError` pointing at ``path`` inside this scene's text."""
        line, col = _locate(self.text, list(path)) if self.text else (1, 1)
        return SceneError(message, line, col, self.source)

    @property
    def check_ids(self) -> list[str]:
        return [c for c, _ in self.checks]

    @property
    def overrides(self) -> dict:
        return {c: tol for c, tol in self.checks if tol is not None}

    @property
    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()


def load_schema(name: str) -> dict:
    text = resources.files("csflab").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _locate(text: str, path) -> tuple[int, int]:
    """Best-effort line and column of the JSON element at ``path``."""
    keys = [p for p in path if isinstance(p, str)]
    pos = 0
    for key in keys:
        m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(text, pos)
        if m is None:
            break
        pos = m.start()
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, column


def parse_scene(text: str, source: str = "<scene>") -> Scene:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(exc.msg, exc.lineno, exc.colno, source) from exc
    validator = jsonschema.Draft202012Validator(load_schema("scene"))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        line, col = _locate(text, list(err.absolute_path))
        raise SceneError(f"{where}: {err.message}", line, col, source)
    ini = raw["initial"]
    spec_kwargs = {k: ini[k] for k in ("n", "angle_a", "angle_b", "pin_radius", "seed") if k in ini}
    initial = InitialCurveSpec(ini["generator"], params=dict(ini.get("params", {})), **spec_kwargs)
    flow = dict(raw["flow"])
    if "dt" in flow and "dt_factor" in flow:
        line, col = _locate(text, ["flow", "dt_factor"])
        raise SceneError("flow: give either dt or dt_factor, not both", line, col, source)
    rt = flow.get("record_times", [])
    if any(b <= a for a, b in zip(rt, rt[1:])):
        line, col = _locate(text, ["flow", "record_times"])
        raise SceneError("flow/record_times must be strictly increasing", line, col, source)
    checks = []
    for c in raw.get("checks", []):
        checks.append((c, None) if isinstance(c, str) else (c["id"], c.get("tolerance")))
    out = raw.get("outputs", {})
    return Scene(
        version=raw["version"],
        initial=initial,
        flow=flow,
        checks=tuple(checks),
        directory=out.get("directory", "out"),
        formats=tuple(out.get("formats", ("csv", "svg", "json"))),
        raw=raw,
        source=source,
        text=text,
    )


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SceneError(f"cannot read scene: {exc.strerror}", 1, 1, str(path)) from exc
    return parse_scene(text, str(path))


def flow_config(scene: Scene, curve: PlanarCurve, refine: int = 0) -> FlowConfig:
    """FlowConfig for ``curve``; ``dt`` defaults to ``dt_factor h^2`` with ``h`` the median spacing."""
    f = scene.flow
    h = float(np.median(curve.segment_lengths))
    if "dt" in f:
        dt = float(f["dt"]) / 4 ** refine
    else:
        dt = float(f.get("dt_factor", 1.0)) * h * h
    t_end = float(f["t_end"])
    records = f.get("record_times")
    if records is None:
        records = [t_end * (i + 1) / DEFAULT_RECORDS for i in range(DEFAULT_RECORDS)] if t_end > 0 else []
    kwargs = {k: f[k] for k in ("scheme", "resample_every", "smooth_corner", "accuracy") if k in f}
    return FlowConfig(dt=dt, n_nodes=curve.n, t_end=t_end, pin_radius=scene.initial.pin_radius,
                      record_times=tuple(records), **kwargs)


# ---------------------------------------------------------------------------
# JSON


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf`` and ``nan``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(canonical_json(obj))


def report_payload(reports) -> list:
    payload = to_jsonable([r.to_dict() for r in reports])
    jsonschema.validate(payload, load_schema("report"))
    return payload


def write_report(reports, path) -> None:
    write_json(report_payload(reports), path)


def read_report(path) -> list:
    payload = json.loads(Path(path).read_text())
    jsonschema.validate(payload, load_schema("report"))
    return payload


# ---------------------------------------------------------------------------
# CSV


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def snapshot_rows(snap: Snapshot) -> np.ndarray:
    c = snap.curve
    n = c.n
    return np.column_stack([
        np.full(n, snap.t), np.arange(n), c.params, c.points[:, 0], c.points[:, 1],
        snap.lift.psi, snap.curvature.kappa, arclengths(c),
    ])


def write_trace_csv(trace: FlowTrace, path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for snap in trace.snapshots:
        for row in snapshot_rows(snap):
            cells = [_fmt(v) for v in row]
            cells[1] = str(int(row[1]))
            lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> list[dict]:
    """Snapshots as dicts of column arrays, in recorded order."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    out = []
    if data.size == 0:
        return out
    ts = data[:, 0]
    breaks = np.flatnonzero(np.diff(ts) != 0) + 1
    for block in np.split(data, breaks):
        out.append({name: block[:, i] for i, name in enumerate(CSV_COLUMNS)})
    return out


def write_table_csv(columns: dict, path) -> None:
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    lines = [",".join(names)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# SVG


def svg_frame(snap: Snapshot, view: float | None = None, size: int = 600) -> str:
    """One frame: the curve as a polyline path plus the two end rays (if any)."""
    c = snap.curve
    pts = c.points
    em = c.end_meta
    if view is None:
        view = em.pin_radius if em is not None else float(np.max(np.abs(pts))) * 1.1
    scale = size / (2 * view)

    def xy(p):
        return f"{(p[0] + view) * scale:.4f},{(view - p[1]) * scale:.4f}"

    d = "M " + " L ".join(xy(p) for p in pts)
    if c.closed:
        d += " Z"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if em is not None:
        for ang in (em.angle_a, em.angle_b):
            tip = (em.pin_radius * math.cos(ang), em.pin_radius * math.sin(ang))
            parts.append(f'<path d="M {xy((0.0, 0.0))} L {xy(tip)}" stroke="#bbbbbb" '
                         f'stroke-width="1" stroke-dasharray="4 3" fill="none"/>')
    parts.append(f'<path d="{d}" stroke="black" stroke-width="1.2" fill="none"/>')
    parts.append(f'<text x="8" y="20" font-family="monospace" font-size="14">t = {snap.t:.6g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg_frames(trace: FlowTrace, directory) -> list[str]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, snap in enumerate(trace.snapshots):
        name = f"frame_{i:04d}.svg"
        (d / name).write_text(svg_frame(snap))
        names.append(name)
    return names
