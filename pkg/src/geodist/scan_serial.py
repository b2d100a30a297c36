"""Single-threaded two-phase raster scan over the full causal neighborhood.

Each round makes a forward pass in raster order using the causal half of
the 8-/26-neighborhood, then a backward pass in reverse order using the
mirrored half. This is the serial baseline the parallel engine is measured
against.

Relaxation runs in double precision; results are stored in float32 rounded
upward, so a stored distance is never below the cost of a real path.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .grid import INF_SENTINEL, ScalarGrid, TransformParams, check_same_geometry
from .metric import offset_arrays, serial_neighbor_offsets


@njit(inline="always")
def round_up_f32(x):
    """Round a double up to the nearest float32 so stored distances never undershoot."""
    v = np.float32(x)
    if np.float64(v) < x:
        v = np.nextafter(v, np.float32(np.inf))
    return v


@njit(nogil=True, cache=True)
def _raster_phase(dist, image, deltas, rho2, lam, forward):
    depth, height, width = dist.shape
    k = rho2.shape[0]
    for zi in range(depth):
        z = zi if forward else depth - 1 - zi
        for yi in range(height):
            y = yi if forward else height - 1 - yi
            for xi in range(width):
                x = xi if forward else width - 1 - xi
                best = np.float64(dist[z, y, x])
                p = np.float64(image[z, y, x])
                for j in range(k):
                    zz = z + deltas[j, 0]
                    yy = y + deltas[j, 1]
                    xx = x + deltas[j, 2]
                    if zz < 0 or zz >= depth or yy < 0 or yy >= height or xx < 0 or xx >= width:
                        continue
                    dq = np.float64(dist[zz, yy, xx])
                    if dq >= best:
                        continue
                    di = p - np.float64(image[zz, yy, xx])
                    if lam == 1.0:
                        cand = dq + abs(di)
                    else:
                        cand = dq + np.sqrt(rho2[j] + lam * di * di)
                    if cand < best:
                        best = cand
                if best < dist[z, y, x]:
                    stored = round_up_f32(best)
                    if stored < dist[z, y, x]:
                        dist[z, y, x] = stored


def _volume(a: np.ndarray) -> np.ndarray:
    return a if a.ndim == 3 else a[np.newaxis]


def _phase_arrays(ndim: int, phase: str, spacing, lam: float):
    deltas, rhos = offset_arrays(serial_neighbor_offsets(ndim, phase, spacing))
    if ndim == 2:
        deltas = np.hstack([np.zeros((len(deltas), 1), dtype=np.int64), deltas])
    return np.ascontiguousarray(deltas), (1.0 - lam) * rhos * rhos


def serial_phase(image: ScalarGrid, dist: ScalarGrid, lam: float, phase: str) -> ScalarGrid:
    """Run one forward or backward raster pass and return the updated copy."""
    check_same_geometry(image, dist)
    out = dist.copy()
    deltas, rho2 = _phase_arrays(dist.ndim, phase, dist.spacing, lam)
    _raster_phase(_volume(out.data), _volume(image.data), deltas, rho2, float(lam), phase == "forward")
    return out


def serial_scan(image: ScalarGrid, dist: ScalarGrid, params: TransformParams) -> ScalarGrid:
    check_same_geometry(image, dist)
    if not isinstance(params, TransformParams):
        raise TypeError("params must be a TransformParams")
    out = dist.copy()
    np.minimum(out.data, INF_SENTINEL, out=out.data)
    lam = float(params.lam)
    fwd = _phase_arrays(dist.ndim, "forward", dist.spacing, lam)
    bwd = _phase_arrays(dist.ndim, "backward", dist.spacing, lam)
    vol, img = _volume(out.data), _volume(image.data)
    for _ in range(params.iterations):
        _raster_phase(vol, img, fwd[0], fwd[1], lam, True)
        _raster_phase(vol, img, bwd[0], bwd[1], lam, False)
    return out
