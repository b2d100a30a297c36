import itertools
import re
import math

import numpy as np
import pytest

from geodist.grid import INF_SENTINEL, ScalarGrid


def f32_up(x):
    """Round doubles up to float32, matching how the engines store distances."""
    x = np.asarray(x, dtype=np.float64)
    v = x.astype(np.float32)
    low = v.astype(np.float64) < x
    return np.where(low, np.nextafter(v, np.float32(np.inf)), v).astype(np.float32)


def grid(values, spacing=None):
    values = np.asarray(values, dtype=np.float32)
    if spacing is None:
        spacing = (1.0,) * values.ndim
    return ScalarGrid(values, tuple(spacing))


def seed_init(shape, *cells, spacing=None):
    """Distance grid with 0 at the given cells and INF_SENTINEL elsewhere."""
    d = np.full(shape, INF_SENTINEL, dtype=np.float32)
    for c in cells:
        d[c] = 0.0
    return grid(d, spacing)


def random_instance(rng, shape, n_seeds=None):
    image = grid(rng.random(shape, dtype=np.float32))
    n = n_seeds if n_seeds is not None else int(rng.integers(1, 4))
    flat = rng.choice(int(np.prod(shape)), size=n, replace=False)
    cells = [np.unravel_index(int(f), shape) for f in flat]
    return image, seed_init(shape, *cells)


def bellman_ford(image, init, lam):
    """Exhaustive edge relaxation to a fixpoint, in double precision.

    Deliberately naive: no priority queue, no stencils from the package.
    """
    shape = init.dims
    spacing = init.spacing
    img = image.data.astype(np.float64)
    d = init.data.astype(np.float64).copy()
    cells = list(itertools.product(*[range(n) for n in shape]))
    deltas = [dl for dl in itertools.product((-1, 0, 1), repeat=len(shape)) if any(dl)]
    changed = True
    while changed:
        changed = False
        for c in cells:
            for dl in deltas:
                q = tuple(ci + di for ci, di in zip(c, dl))
                if not all(0 <= qi < n for qi, n in zip(q, shape)):
                    continue
                rho2 = sum((di * s) ** 2 for di, s in zip(dl, spacing))
                cost = math.sqrt((1 - lam) * rho2 + lam * (img[c] - img[q]) ** 2)
                if d[q] + cost < d[c] - 1e-12:
                    d[c] = d[q] + cost
                    changed = True
    return d


def spiral_wall(n=15):
    """0-valued square-spiral corridor inside 1-valued walls; the corridor starts at the center."""
    img = np.ones((n, n), dtype=np.float32)
    r = c = n // 2
    img[r, c] = 0
    dirs = [(0, 1), (1, 0), (0, -1), (-1, 0)]
    step, k = 2, 0
    while True:
        for _ in range(2):
            dr, dc = dirs[k % 4]
            for _ in range(step):
                nr, nc = r + dr, c + dc
                if not (0 <= nr < n and 0 <= nc < n):
                    return img
                r, c = nr, nc
                img[r, c] = 0
            k += 1
        step += 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {
    "A1": "parallel fixpoint vs Dijkstra oracle",
    "A2": "serial vs parallel fixpoint agreement",
    "A3": "bitwise determinism across worker counts",
    "A4": "pass structure and stencil unions",
    "A5": "Euclidean chamfer ratio bound",
    "A6": "benchmark agreement and speedup",
    "A7": "transform algebra",
    "A8": "FGD1 format fidelity",
    "A9": "monotonicity of every pass",
}
_acceptance_reports = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_(a\d)_", report.nodeid)
    if not m:
        return
    if report.when != "call" and not (report.failed or report.skipped):
        return
    detail = dict(report.user_properties).get("detail", "")
    outcome = "FAIL" if report.failed else "SKIP" if report.skipped else "PASS"
    if report.skipped and isinstance(report.longrepr, tuple):
        reason = report.longrepr[2].removeprefix("Skipped: ")
        detail = f"{detail}; skipped: {reason}" if detail else reason
    _acceptance_reports.setdefault(m.group(1).upper(), []).append((outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_reports:
        return
    terminalreporter.section("acceptance criteria")
    for key, label in ACCEPTANCE.items():
        parts = _acceptance_reports.get(key)
        if not parts:
            continue
        outcomes = {o for o, _ in parts}
        verdict = "FAIL" if "FAIL" in outcomes else "PASS" if "PASS" in outcomes else "SKIP"
        if verdict == "PASS" and "SKIP" in outcomes:
            verdict = "PASS (partial)"
        details = " | ".join(f"{o}: {d}" if len(parts) > 1 else d for o, d in parts if d)
        terminalreporter.write_line(f"{key} {verdict:<14} {label}: {details}")
