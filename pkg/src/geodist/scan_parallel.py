"""Directional-pass raster scan whose per-row/per-plane updates are independent.

A pass walks one axis sequentially. Every cell of the current row (2D) or
plane (3D) is relaxed only from the previous, already final, row/plane and
its own prior value, so the cells of one row/plane can be split across
threads. The kernels release the GIL; a thread pool fans out contiguous
chunks and joins before the sweep advances.

Kernels work on a "sweep-major" copy of the grid: the swept axis first, the
two cross axes after it (2D grids get a singleton cross axis). Both
directions along one axis share the copy.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np
from numba import njit

from .grid import INF_SENTINEL, ScalarGrid, TransformParams, check_same_geometry
from .metric import PassDirection, pass_directions, pass_neighbor_offsets
from .scan_serial import round_up_f32, serial_scan

DEFAULT_FIXPOINT_TOL = 1e-6


@njit(nogil=True, cache=True, fastmath={"nnan", "ninf"})
def _relax_plane(dist, image, i, prev, rho2, lam, start, stop):
    # Relax cells [start, stop) of plane i (flattened over the cross axes)
    # from plane prev. rho2[da + 1, db + 1] holds (1 - lam) * rho**2.
    na = dist.shape[1]
    nb = dist.shape[2]
    best = np.empty(nb, dtype=np.float64)
    e = start
    while e < stop:
        a = e // nb
        b0 = e - a * nb
        b1 = min(nb, b0 + (stop - e))
        cur = dist[i, a]
        cur_img = image[i, a]
        for b in range(b0, b1):
            best[b] = cur[b]
        for aa in range(max(a - 1, 0), min(a + 1, na - 1) + 1):
            src = dist[prev, aa]
            src_img = image[prev, aa]
            for db in range(-1, 2):
                lo = max(b0, -db)
                hi = min(b1, nb - db)
                if hi <= lo:
                    continue
                r2 = rho2[aa - a + 1, db + 1]
                out = best[lo:hi]
                ci = cur_img[lo:hi]
                sd = src[lo + db:hi + db]
                si = src_img[lo + db:hi + db]
                if lam == 1.0:
                    for k in range(hi - lo):
                        cand = np.float64(sd[k]) + abs(np.float64(ci[k]) - np.float64(si[k]))
                        out[k] = min(out[k], cand)
                else:
                    for k in range(hi - lo):
                        di = np.float64(ci[k]) - np.float64(si[k])
                        cand = np.float64(sd[k]) + np.sqrt(r2 + lam * di * di)
                        out[k] = min(out[k], cand)
        for b in range(b0, b1):
            if best[b] < cur[b]:
                stored = round_up_f32(best[b])
                if stored < cur[b]:
                    cur[b] = stored
        e += b1 - b0


@njit(nogil=True, cache=True)
def _sweep(dist, image, rho2, lam, orientation):
    n = dist.shape[1] * dist.shape[2]
    planes = dist.shape[0]
    for s in range(1, planes):
        if orientation > 0:
            _relax_plane(dist, image, s, s - 1, rho2, lam, 0, n)
        else:
            _relax_plane(dist, image, planes - 1 - s, planes - s, rho2, lam, 0, n)


def _axis_view(a: np.ndarray, axis: int) -> np.ndarray:
    """View of ``a`` with ``axis`` first; writes go through to ``a``."""
    v = np.moveaxis(a, axis, 0)
    if v.ndim == 2:
        v = v[:, np.newaxis, :]
    return v


def _stencil_table(direction: PassDirection, ndim: int, spacing, lam: float) -> np.ndarray:
    """3x3 table of (1 - lam) * rho**2 indexed by the offset in the two cross axes."""
    table = np.zeros((3, 3), dtype=np.float64)
    for off in pass_neighbor_offsets(direction, ndim, spacing):
        cross = [d for axis, d in enumerate(off.delta) if axis != direction.axis]
        da, db = (0, cross[0]) if ndim == 2 else cross
        table[da + 1, db + 1] = (1.0 - lam) * off.rho * off.rho
    return table


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(s), int(e)) for s, e in zip(bounds[:-1], bounds[1:]) if e > s]


def _copy(dst: np.ndarray, src: np.ndarray, pool, workers: int) -> None:
    if pool is None or workers == 1 or dst.shape[0] < 2:
        dst[...] = src
        return

    def part(s, e):
        dst[s:e] = src[s:e]

    for f in [pool.submit(part, s, e) for s, e in _chunks(dst.shape[0], workers)]:
        f.result()


class _SweepBuffer:
    """Sweep-major working copy of a distance array along one axis."""

    def __init__(self, dist_arr: np.ndarray, axis: int, pool, workers: int):
        self.view = _axis_view(dist_arr, axis)
        self.in_place = self.view.flags.c_contiguous
        self.pool = pool
        self.workers = workers
        if self.in_place:
            self.work = self.view
        else:
            self.work = np.empty(self.view.shape, dtype=self.view.dtype)
            _copy(self.work, self.view, pool, workers)

    def write_back(self) -> None:
        if not self.in_place:
            _copy(self.view, self.work, self.pool, self.workers)


def _sweep_image(image_arr: np.ndarray, axis: int) -> np.ndarray:
    return np.ascontiguousarray(_axis_view(image_arr, axis))


def _run_sweep(work, image_sw, direction, spacing, ndim, lam, pool, workers) -> None:
    rho2 = _stencil_table(direction, ndim, spacing, lam)
    if pool is None or workers == 1:
        _sweep(work, image_sw, rho2, lam, direction.orientation)
        return
    planes = work.shape[0]
    chunks = _chunks(work.shape[1] * work.shape[2], workers)
    for s in range(1, planes):
        if direction.orientation > 0:
            i, prev = s, s - 1
        else:
            i, prev = planes - 1 - s, planes - s
        futures = [
            pool.submit(_relax_plane, work, image_sw, i, prev, rho2, lam, a, b) for a, b in chunks
        ]
        for f in futures:
            f.result()


def _check_workers(workers: int) -> int:
    if int(workers) != workers or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers}")
    return int(workers)


def directional_pass(
    dist: ScalarGrid,
    image: ScalarGrid,
    direction: PassDirection,
    params: TransformParams,
    workers: int = 1,
) -> ScalarGrid:
    check_same_geometry(image, dist)
    if not 0 <= direction.axis < dist.ndim:
        raise ValueError(f"direction axis {direction.axis} invalid for a {dist.ndim}D grid")
    workers = _check_workers(workers)
    out = dist.copy()
    lam = float(params.lam)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        buf = _SweepBuffer(out.data, direction.axis, pool, workers)
        img = _sweep_image(image.data, direction.axis)
        _run_sweep(buf.work, img, direction, dist.spacing, dist.ndim, lam, pool, workers)
        buf.write_back()
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def parallel_scan(
    image: ScalarGrid, dist: ScalarGrid, params: TransformParams, workers: int = 1
) -> ScalarGrid:
    """Run ``params.iterations`` rounds of all directional passes.

    Pass order per round: (front-back, back-front,) top-bottom, bottom-top,
    left-right, right-left.
    """
    check_same_geometry(image, dist)
    workers = _check_workers(workers)
    out = dist.copy()
    np.minimum(out.data, INF_SENTINEL, out=out.data)
    lam = float(params.lam)
    directions = pass_directions(dist.ndim)
    images = {axis: _sweep_image(image.data, axis) for axis in range(dist.ndim)}
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for _ in range(params.iterations):
            buf, buf_axis = None, -1
            for d in directions:
                if d.axis != buf_axis:
                    if buf is not None:
                        buf.write_back()
                    buf, buf_axis = _SweepBuffer(out.data, d.axis, pool, workers), d.axis
                _run_sweep(buf.work, images[d.axis], d, dist.spacing, dist.ndim, lam, pool, workers)
            buf.write_back()
    finally:
        if pool is not None:
            pool.shutdown()
    return out


class FixpointResult(NamedTuple):
    grid: ScalarGrid
    rounds_used: int
    converged: bool
    last_change: float


def scan_to_fixpoint(
    image: ScalarGrid,
    dist: ScalarGrid,
    params: TransformParams,
    engine: str = "parallel",
    max_rounds: int = 100,
    tol: float = DEFAULT_FIXPOINT_TOL,
    workers: int = 1,
) -> FixpointResult:
    """Repeat single-iteration rounds until a round changes no cell by more than ``tol``.

    ``converged`` is False when ``max_rounds`` ran out first.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if engine not in ("serial", "parallel"):
        raise ValueError(f"engine must be 'serial' or 'parallel', got {engine!r}")
    one = TransformParams(lam=params.lam, nu=params.nu, iterations=1)
    current = dist
    change = float("inf")
    for rounds in range(1, max_rounds + 1):
        if engine == "serial":
            nxt = serial_scan(image, current, one)
        else:
            nxt = parallel_scan(image, current, one, workers)
        change = float(
            np.max(np.abs(nxt.data.astype(np.float64) - np.minimum(current.data, INF_SENTINEL)))
        )
        current = nxt
        if change <= tol:
            return FixpointResult(current, rounds, True, change)
    return FixpointResult(current, max_rounds, False, change)
