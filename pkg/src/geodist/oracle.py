"""Exact multi-source shortest paths on the full 8-/26-connected grid graph.

Label-setting Dijkstra in double precision. Slow, but independent of the
raster engines; used as the reference they are validated against.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .grid import INF_SENTINEL, InvalidParamsError, ScalarGrid, check_same_geometry
from .metric import full_neighborhood


class NoSourceError(ValueError):
    pass


def dijkstra_exact(image: ScalarGrid, init_dist: ScalarGrid, lam: float) -> ScalarGrid:
    check_same_geometry(image, init_dist)
    if not 0.0 <= lam <= 1.0:
        raise InvalidParamsError(f"lambda must be in [0, 1], got {lam}")
    dims = init_dist.dims
    if len(dims) == 2:
        dims = (1, *dims)
        offsets = [((0, *o.delta), o.rho) for o in full_neighborhood(2, init_dist.spacing)]
    else:
        offsets = [(o.delta, o.rho) for o in full_neighborhood(3, init_dist.spacing)]
    depth, height, width = dims
    plane = height * width
    edges = [(dz, dy, dx, dz * plane + dy * width + dx, (1.0 - lam) * rho * rho) for (dz, dy, dx), rho in offsets]

    intensity = image.flat.astype(np.float64).tolist()
    dist = init_dist.flat.astype(np.float64).tolist()
    heap = [(d, i) for i, d in enumerate(dist) if d < INF_SENTINEL]
    if not heap:
        raise NoSourceError("no finite source cell in the initial distance grid")
    heapq.heapify(heap)
    done = [False] * len(dist)

    while heap:
        d, i = heapq.heappop(heap)
        if done[i] or d > dist[i]:
            continue
        done[i] = True
        z, rem = divmod(i, plane)
        y, x = divmod(rem, width)
        p = intensity[i]
        for dz, dy, dx, step, rho2 in edges:
            zz, yy, xx = z + dz, y + dy, x + dx
            if not (0 <= zz < depth and 0 <= yy < height and 0 <= xx < width):
                continue
            j = i + step
            if done[j]:
                continue
            di = p - intensity[j]
            cand = d + math.sqrt(rho2 + lam * di * di)
            if cand < dist[j]:
                dist[j] = cand
                heapq.heappush(heap, (cand, j))

    out = np.minimum(np.array(dist, dtype=np.float64), INF_SENTINEL)
    return init_dist.like(out.reshape(init_dist.dims))
