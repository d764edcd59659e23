import math
from functools import lru_cache

import numpy as np
import pytest

from csflab.curve import InitialCurveSpec, build_initial_curve
from csflab.flow import FlowConfig, run

CORPUS = {
    "wedge": InitialCurveSpec("wedge"),
    "bent_line": InitialCurveSpec("bent_line", params={"round_radius": 0.5}),
    "spiral": InitialCurveSpec("spiral", params={"turns": 3, "r_out": 0.4, "r_in": 0.04}),
    "zigzag": InitialCurveSpec("zigzag", params={"k": 4, "amplitude": 0.15}),
    "random_wiggle": InitialCurveSpec("random_wiggle", params={"modes": 6, "amplitude": 0.25}, seed=20240917),
}
RECORD_TIMES = tuple(round(0.1 * (i + 1), 10) for i in range(20))


def corpus_spec(name: str, n: int, beta: float = math.pi / 2) -> InitialCurveSpec:
    from dataclasses import replace

    return replace(CORPUS[name], n=n, angle_a=math.pi, angle_b=math.pi - beta)


@lru_cache(maxsize=None)
def corpus_trace(name: str, n: int = 601, t_end: float = 2.0, beta: float = math.pi / 2):
    """Flow of a corpus curve with dt = h^2, recorded every 0.1 (cached per session)."""
    curve = build_initial_curve(corpus_spec(name, n, beta))
    h = float(np.median(curve.segment_lengths))
    records = tuple(t for t in RECORD_TIMES if t <= t_end)
    return run(curve, FlowConfig(dt=h * h, n_nodes=n, t_end=t_end, record_times=records))


@pytest.fixture(scope="session")
def traces():
    return corpus_trace


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; they are repeated in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
