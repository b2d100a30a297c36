"""Local step cost and the neighbor stencils used by the scan engines."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import InvalidParamsError


@dataclass(frozen=True)
class NeighborOffset:
    delta: tuple[int, ...]
    rho: float

    @classmethod
    def from_delta(cls, delta: Sequence[int], spacing: Sequence[float]) -> NeighborOffset:
        if len(delta) != len(spacing):
            raise ValueError("offset and spacing rank differ")
        if not any(delta) or any(d not in (-1, 0, 1) for d in delta):
            raise ValueError(f"invalid neighbor offset {tuple(delta)}")
        rho = math.sqrt(sum((d * s) ** 2 for d, s in zip(delta, spacing)))
        return cls(tuple(int(d) for d in delta), rho)


@dataclass(frozen=True)
class PassDirection:
    """A sweep along ``axis`` in increasing (+1) or decreasing (-1) index order."""

    axis: int
    orientation: int
    name: str = ""

    def __post_init__(self) -> None:
        if self.orientation not in (1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {self.orientation}")


def pass_directions(ndim: int) -> list[PassDirection]:
    """Directions of one parallel round, in execution order."""
    if ndim == 2:
        names = [("top-bottom", "bottom-top"), ("left-right", "right-left")]
    elif ndim == 3:
        names = [("front-back", "back-front"), ("top-bottom", "bottom-top"), ("left-right", "right-left")]
    else:
        raise ValueError(f"ndim must be 2 or 3, got {ndim}")
    out = []
    for axis, (fwd, bwd) in enumerate(names):
        out.append(PassDirection(axis, 1, fwd))
        out.append(PassDirection(axis, -1, bwd))
    return out


def direction_by_name(name: str, ndim: int) -> PassDirection:
    for d in pass_directions(ndim):
        if d.name == name:
            return d
    raise ValueError(f"no direction {name!r} for a {ndim}D grid")


def step_cost(intensity_p: float, intensity_q: float, offset: NeighborOffset, lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise InvalidParamsError(f"lambda must be in [0, 1], got {lam}")
    di = float(intensity_p) - float(intensity_q)
    return math.sqrt((1.0 - lam) * offset.rho * offset.rho + lam * di * di)


def pass_neighbor_offsets(
    direction: PassDirection, ndim: int, spacing: Sequence[float]
) -> list[NeighborOffset]:
    """Offsets from a cell into the previous row (2D) or plane (3D) of a sweep."""
    if ndim not in (2, 3) or len(spacing) != ndim:
        raise ValueError(f"bad rank {ndim} for spacing {tuple(spacing)}")
    if not 0 <= direction.axis < ndim:
        raise ValueError(f"direction axis {direction.axis} invalid for a {ndim}D grid")
    others = [a for a in range(ndim) if a != direction.axis]
    offsets = []
    for window in itertools.product((-1, 0, 1), repeat=len(others)):
        delta = [0] * ndim
        delta[direction.axis] = -direction.orientation
        for a, w in zip(others, window):
            delta[a] = w
        offsets.append(NeighborOffset.from_delta(delta, spacing))
    return offsets


def serial_neighbor_offsets(ndim: int, phase: str, spacing: Sequence[float]) -> list[NeighborOffset]:
    """Causal half-neighborhood for the forward phase, mirrored for backward.

    The forward half holds every offset that precedes the cell in
    lexicographic (raster) order.
    """
    if ndim not in (2, 3) or len(spacing) != ndim:
        raise ValueError(f"bad rank {ndim} for spacing {tuple(spacing)}")
    if phase not in ("forward", "backward"):
        raise ValueError(f"phase must be 'forward' or 'backward', got {phase!r}")
    sign = 1 if phase == "forward" else -1
    offsets = []
    for delta in itertools.product((-1, 0, 1), repeat=ndim):
        if delta < (0,) * ndim:
            offsets.append(NeighborOffset.from_delta([sign * d for d in delta], spacing))
    return offsets


def full_neighborhood(ndim: int, spacing: Sequence[float]) -> list[NeighborOffset]:
    return [
        NeighborOffset.from_delta(delta, spacing)
        for delta in itertools.product((-1, 0, 1), repeat=ndim)
        if any(delta)
    ]


def offset_arrays(offsets: Sequence[NeighborOffset]) -> tuple[np.ndarray, np.ndarray]:
    """Pack offsets as an ``(k, ndim)`` int64 delta array and a float64 rho array."""
    deltas = np.array([o.delta for o in offsets], dtype=np.int64)
    rhos = np.array([o.rho for o in offsets], dtype=np.float64)
    return deltas, rhos
