"""Distance transforms and geodesic morphology built on the scan engines.

Every transform takes ``engine`` ("serial", "parallel" or "oracle") and a
``workers`` count for the parallel engine. By default the engines run
``params.iterations`` rounds; ``fixpoint=True`` iterates until no cell
changes instead (the oracle is always exact).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import (
    DTYPE,
    INF_SENTINEL,
    MASK_THRESHOLD,
    GsfParams,
    ScalarGrid,
    TransformParams,
    check_intensity,
    check_mask,
    check_same_geometry,
    threshold_mask,
)
from .oracle import dijkstra_exact
from .scan_parallel import scan_to_fixpoint, parallel_scan
from .scan_serial import serial_scan

ENGINES = ("serial", "parallel", "oracle")
FIXPOINT_MAX_ROUNDS = 100


class EmptySeedError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def relax(
    image: ScalarGrid,
    init: ScalarGrid,
    params: TransformParams,
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> ScalarGrid:
    """Relax an initial distance grid with the chosen engine."""
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    check_same_geometry(image, init)
    if engine == "oracle":
        return dijkstra_exact(image, init, params.lam)
    if fixpoint:
        res = scan_to_fixpoint(image, init, params, engine, FIXPOINT_MAX_ROUNDS, workers=workers)
        if not res.converged:
            raise ConvergenceError(
                f"no fixpoint after {res.rounds_used} rounds (last change {res.last_change:g})"
            )
        return res.grid
    if engine == "serial":
        return serial_scan(image, init, params)
    return parallel_scan(image, init, params, workers)


def init_hard_seeds(seed_mask: ScalarGrid) -> ScalarGrid:
    check_mask(seed_mask)
    seeds = seed_mask.data >= MASK_THRESHOLD
    if not seeds.any():
        raise EmptySeedError("seed mask has no element >= 0.5")
    return seed_mask.like(np.where(seeds, 0.0, INF_SENTINEL))


def geodesic_distance(
    image: ScalarGrid,
    seed_mask: ScalarGrid,
    params: TransformParams = TransformParams(),
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> ScalarGrid:
    check_same_geometry(image, seed_mask)
    check_intensity(image)
    return relax(image, init_hard_seeds(seed_mask), params, engine, workers, fixpoint)


def euclidean_distance(
    seed_mask: ScalarGrid,
    spacing: Sequence[float] | None = None,
    iterations: int = 2,
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> ScalarGrid:
    """Chamfer (8-/26-connected) Euclidean distance to the seed cells.

    ``spacing`` overrides the mask's own spacing when given.
    """
    if spacing is not None:
        seed_mask = ScalarGrid(seed_mask.data, tuple(spacing))
    flat = seed_mask.like(np.zeros(seed_mask.dims, dtype=DTYPE))
    params = TransformParams(lam=0.0, iterations=iterations)
    return geodesic_distance(flat, seed_mask, params, engine, workers, fixpoint)


def generalized_geodesic(
    image: ScalarGrid,
    soft_mask: ScalarGrid,
    params: TransformParams = TransformParams(),
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> ScalarGrid:
    """Distance seeded by a soft prior: min over y of nu * M(y) + d(y, x)."""
    check_same_geometry(image, soft_mask)
    check_intensity(image)
    check_mask(soft_mask)
    init = np.minimum(params.nu * soft_mask.data.astype(np.float64), INF_SENTINEL)
    return relax(image, soft_mask.like(init), params, engine, workers, fixpoint)


def signed_geodesic(
    image: ScalarGrid,
    mask: ScalarGrid,
    params: TransformParams = TransformParams(),
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> ScalarGrid:
    """Distance to the mask minus distance to its complement (negative inside)."""
    check_same_geometry(image, mask)
    check_mask(mask)
    inside = threshold_mask(mask)
    if not inside.data.any():
        raise EmptySeedError("mask is empty")
    if inside.data.all():
        raise EmptySeedError("mask complement is empty")
    outside = inside.like(1.0 - inside.data)
    d_in = geodesic_distance(image, inside, params, engine, workers, fixpoint)
    d_out = geodesic_distance(image, outside, params, engine, workers, fixpoint)
    return mask.like(d_in.data - d_out.data)


@dataclass
class MorphologyResult:
    """A binary mask plus the distance map it was thresholded from.

    ``empty_source`` is set when there were no source cells to measure from.
    """

    mask: ScalarGrid
    distance: ScalarGrid
    empty_source: bool = False


def geodesic_dilate(
    image: ScalarGrid,
    mask: ScalarGrid,
    theta: float,
    params: TransformParams = TransformParams(),
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> MorphologyResult:
    """Cells within ``theta`` of the thresholded mask, measured with a soft prior.

    Sources are the mask cells; the prior ``1 - mask`` charges every other
    cell ``nu`` as a starting cost.
    """
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    check_mask(mask)
    m0 = threshold_mask(mask)
    empty = not m0.data.any()
    dist = generalized_geodesic(image, m0.like(1.0 - m0.data), params, engine, workers, fixpoint)
    out = m0.like((dist.data.astype(np.float64) <= theta).astype(DTYPE))
    return MorphologyResult(out, dist, empty)


def geodesic_erode(
    image: ScalarGrid,
    mask: ScalarGrid,
    theta: float,
    params: TransformParams = TransformParams(),
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> MorphologyResult:
    """Mask cells farther than ``theta`` from the complement of the mask."""
    check_mask(mask)
    m0 = threshold_mask(mask)
    grown = geodesic_dilate(image, m0.like(1.0 - m0.data), theta, params, engine, workers, fixpoint)
    out = m0.like(1.0 - grown.mask.data)
    return MorphologyResult(out, grown.distance, grown.empty_source)


@dataclass
class GsfResult:
    mask: ScalarGrid
    dilated: MorphologyResult
    eroded: MorphologyResult


def gsf(
    image: ScalarGrid,
    soft_mask: ScalarGrid,
    params: GsfParams,
    engine: str = "parallel",
    workers: int = 1,
    fixpoint: bool = False,
) -> GsfResult:
    """Geodesic symmetric filtering as a geodesic closing of the thresholded mask.

    Gaps narrower than about twice ``theta`` in the image metric are filled
    while large structures are kept.
    """
    check_mask(soft_mask)
    m0 = threshold_mask(soft_mask)
    dil = geodesic_dilate(image, m0, params.theta, params, engine, workers, fixpoint)
    ero = geodesic_erode(image, dil.mask, params.theta, params, engine, workers, fixpoint)
    return GsfResult(ero.mask, dil, ero)
