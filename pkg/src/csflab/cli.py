"""The ``csf`` command line: ``simulate``, ``verify``, ``oracle`` and ``report``.

Exit codes: 0 success, 1 a check failed, 2 unreadable or invalid input,
3 the flow could not be integrated (partial outputs are written), 4 a
check was inconclusive under ``--strict``.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .curve import CurveError, build_initial_curve
from .exact import OracleError, ShrinkingCircle, angenent_oval, grim_reaper, wedge_profile
from .flow import FlowError, FlowTrace, run
from .io import (
    Scene,
    SceneError,
    flow_config,
    load_scene,
    read_report,
    read_trace_csv,
    write_json,
    write_report,
    write_svg_frames,
    write_table_csv,
    write_trace_csv,
)
from .verify import CHECKS, CheckReport, check_heat_residuals, refinement_windows, run_checks

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_STEP, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
HEAT_BASE_NODES = 501


def _refined_n(n: int, k: int) -> int:
    return (n - 1) * 2 ** k + 1


def _build(scene: Scene, seed: int | None, refine: int):
    spec = scene.initial
    if seed is not None:
        spec = replace(spec, seed=seed)
    spec = replace(spec, n=_refined_n(spec.n, refine))
    try:
        curve = build_initial_curve(spec)
    except (CurveError, ValueError, KeyError, TypeError) as exc:
        raise scene.error(f"initial: {exc}", ["initial"]) from exc
    try:
        config = flow_config(scene, curve, refine)
        if curve.end_meta is not None and config.pin_radius < config.t_end + 6:
            raise ValueError("pin_radius must be at least t_end + 6")
    except ValueError as exc:
        raise scene.error(f"flow: {exc}", ["flow"]) from exc
    return spec, curve, config


def simulate_into(scene: Scene, out: Path, seed: int | None = None, refine: int = 0):
    """Run one scene and write its outputs; returns ``(exit code, trace, spec)``."""
    spec, curve, config = _build(scene, seed, refine)
    out.mkdir(parents=True, exist_ok=True)
    status, message = "ok", ""
    try:
        trace = run(curve, config, provenance=scene.digest)
    except FlowError as exc:
        trace = exc.trace if exc.trace is not None else FlowTrace([], config, scene.digest)
        status, message = "failed", str(exc)
    files = []
    if "csv" in scene.formats and trace.snapshots:
        write_trace_csv(trace, out / "trace.csv")
        files.append("trace.csv")
    if "svg" in scene.formats and trace.snapshots:
        files += [f"frames/{n}" for n in write_svg_frames(trace, out / "frames")]
    manifest = {
        "csflab_version": __version__,
        "scene_sha256": scene.digest,
        "generator": spec.generator,
        "seed": spec.seed,
        "n_nodes": curve.n,
        "dt": config.dt,
        "t_end": config.t_end,
        "refine": refine,
        "recorded_times": [s.t for s in trace.snapshots],
        "files": files,
        "status": status,
        "message": message,
    }
    write_json(manifest, out / "manifest.json")
    if status != "ok":
        print(f"step failure: {message}", file=sys.stderr)
        return EXIT_STEP, trace, spec
    return EXIT_OK, trace, spec


def _render(out: Path) -> list:
    from .plotting import render_report

    snaps = read_trace_csv(out / "trace.csv")
    report = read_report(out / "report.json") if (out / "report.json").exists() else None
    return render_report(out, snaps, report)


def _maybe_render(scene: Scene, out: Path, code: int) -> int:
    """Render PNGs when the scene asks for them and a trace was written."""
    if "png" in scene.formats and (out / "trace.csv").exists():
        _render(out)
    return code


def cmd_simulate(args) -> int:
    scene = load_scene(args.scene)
    out = Path(args.out or scene.directory)
    if args.refine == 0:
        return _maybe_render(scene, out, simulate_into(scene, out, args.seed)[0])
    from .curve import hausdorff_distance

    finals, hs = [], []
    for k in range(args.refine + 1):
        code, trace, _ = simulate_into(scene, out / f"level_{k}", args.seed, k)
        if code != EXIT_OK:
            return code
        finals.append(trace.snapshots[-1].curve)
        hs.append(float(np.median(trace.snapshots[0].curve.segment_lengths)))
    diffs = [hausdorff_distance(a.points, b.points, a.closed, b.closed) for a, b in zip(finals, finals[1:])]
    orders = [math.log(d0 / d1) / math.log(2) for d0, d1 in zip(diffs, diffs[1:]) if d0 > 0 and d1 > 0]
    write_json({"h": hs, "successive_hausdorff": diffs, "observed_order": orders}, out / "convergence.json")
    return EXIT_OK


def _heat_report(scene: Scene, spec, refine: int) -> CheckReport:
    t_end = float(scene.flow["t_end"])
    if t_end <= 0:
        return CheckReport("heat_residuals", "inconclusive", 0.0, 0.0, None, "needs t_end > 0")
    levels = [_refined_n(HEAT_BASE_NODES, j) for j in range(max(refine, 2) + 1)]
    base = replace(spec, n=HEAT_BASE_NODES)
    windows = refinement_windows(base, t0=min(0.5 * t_end, 0.5), levels=levels)
    return check_heat_residuals(windows)


def verify_into(scene: Scene, out: Path, seed=None, refine: int = 0, strict: bool = False) -> int:
    if not scene.checks:
        raise scene.error("verify needs a non-empty checks list")
    code, trace, spec = simulate_into(scene, out, seed)
    if code != EXIT_OK:
        return code
    ids = scene.check_ids
    trace_ids = [c for c in ids if c in CHECKS]
    by_id = {r.check_id: r for r in run_checks(trace, trace_ids, scene.overrides)}
    if "heat_residuals" in ids:
        rep = _heat_report(scene, spec, refine)
        tol = scene.overrides.get("heat_residuals")
        if tol is not None and rep.status != "inconclusive":
            rep.tolerance = float(tol)
            rep.status = "pass" if rep.max_violation <= rep.tolerance else "fail"
        by_id["heat_residuals"] = rep
    reports = [by_id[c] for c in ids]
    write_report(reports, out / "report.json")
    for r in reports:
        print(f"{r.check_id:18s} {r.status:12s} max_violation={r.max_violation:.3e} tolerance={r.tolerance:.3e}")
    if any(r.status == "fail" for r in reports):
        return EXIT_FAIL
    if strict and any(r.status == "inconclusive" for r in reports):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_verify(args) -> int:
    scene = load_scene(args.scene)
    out = Path(args.out or scene.directory)
    return _maybe_render(scene, out, verify_into(scene, out, args.seed, args.refine, args.strict))


def cmd_oracle(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        if args.kind == "oval":
            c = angenent_oval(args.a, args.t, args.n)
            write_table_csv({"x": c.points[:, 0], "y": c.points[:, 1]}, out)
        elif args.kind == "circle":
            c = ShrinkingCircle(args.R).curve(args.t, args.n)
            write_table_csv({"x": c.points[:, 0], "y": c.points[:, 1]}, out)
        elif args.kind == "reaper":
            x_max = args.x_max if args.x_max is not None else args.t + 10.0
            x, y = grim_reaper(args.t, x_max, args.n)
            anchor = args.t + math.log(2.0)
            if x[0] < anchor < x[-1] and not np.any(x == anchor):
                i = int(np.searchsorted(x, anchor))
                x = np.insert(x, i, anchor)
                y = np.insert(y, i, math.asin(0.5))
            write_table_csv({"x": x, "y": y}, out)
        else:
            if args.beta is None:
                raise OracleError("wedge needs --beta")
            if not 0 < args.beta < math.pi:
                raise OracleError("beta must lie in (0, pi)")
            p = wedge_profile(args.beta)
            write_table_csv({"psi": p.psis, "kappa_beta": p.kappa_beta, "x": p.gamma_beta[:, 0],
                             "y": p.gamma_beta[:, 1], "D_beta": p.D_beta}, out)
    except (OracleError, CurveError, ValueError) as exc:
        print(f"invalid oracle parameters: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_report(args) -> int:
    code = EXIT_OK
    if args.scene:
        scene = load_scene(args.scene)
        scene = replace(scene, formats=tuple(sorted(set(scene.formats) | {"csv", "json"})))
        out = Path(args.out or scene.directory)
        if scene.checks:
            code = verify_into(scene, out, args.seed, args.refine, args.strict)
        else:
            code = simulate_into(scene, out, args.seed)[0]
    elif args.out:
        out = Path(args.out)
    else:
        print("report needs --scene or --out pointing at existing outputs", file=sys.stderr)
        return EXIT_INPUT
    csv_path = out / "trace.csv"
    if not csv_path.exists():
        print(f"no trace.csv in {out}", file=sys.stderr)
        return code if code != EXIT_OK else EXIT_INPUT
    for name in _render(out):
        print(out / name)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csf", description="Curve shortening flow lab with radial ends.")
    parser.add_argument("--version", action="version", version=f"csf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scene_args(p, scene_required=True):
        p.add_argument("--scene", required=scene_required, help="scene JSON file")
        p.add_argument("--out", help="output directory (overrides outputs.directory)")
        p.add_argument("--seed", type=int, help="override the generator seed")
        p.add_argument("--refine", type=int, default=0, metavar="K",
                       help="number of h-halvings in refinement studies")

    p = sub.add_parser("simulate", help="run a scene and write trace, frames and manifest")
    scene_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a scene and its checks, write report.json")
    scene_args(p)
    p.add_argument("--strict", action="store_true", help="exit 4 if any check is inconclusive")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="export an exact solution or the wedge profile as CSV")
    p.add_argument("kind", choices=["oval", "reaper", "wedge", "circle"])
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--a", type=float, default=5.0, help="oval parameter")
    p.add_argument("--t", type=float, default=0.0, help="time")
    p.add_argument("--n", type=int, default=400, help="number of samples")
    p.add_argument("--beta", type=float, help="wedge opening angle in (0, pi)")
    p.add_argument("--x-max", type=float, dest="x_max", help="right end of the reaper samples")
    p.add_argument("--R", type=float, default=1.0, help="initial circle radius")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="render PNG figures next to the CSV/JSON outputs")
    scene_args(p, scene_required=False)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "refine", 0) < 0:
        print("--refine must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except SceneError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
