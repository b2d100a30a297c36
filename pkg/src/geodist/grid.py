"""Dense 2D/3D scalar grids shared by every engine.

Axes are ordered ``(depth,) height, width`` with width varying fastest, so a
grid's ``data`` array is C-contiguous and its flat view is row-major.
Storage is single precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INF_SENTINEL = 1.0e10
"""Marker for unvisited cells in distance grids.

Finite so that sentinel + step cost stays ordered, and exactly representable
in float32.
"""

DTYPE = np.float32
MASK_THRESHOLD = 0.5


class GridError(ValueError):
    """Base class for invalid grid construction or usage."""


class DimensionMismatchError(GridError):
    pass


class NonPositiveExtentError(GridError):
    pass


class NonPositiveSpacingError(GridError):
    pass


class ShapeMismatchError(GridError):
    pass


class InvalidValuesError(GridError):
    pass


class InvalidParamsError(ValueError):
    pass


def _normalize_spacing(spacing: Sequence[float]) -> tuple[float, ...]:
    # spacing is stored at float32 precision so FGD1 round trips are exact
    return tuple(float(DTYPE(s)) for s in spacing)


@dataclass
class ScalarGrid:
    """A scalar field on a 2D or 3D lattice with per-axis physical spacing."""

    data: np.ndarray
    spacing: tuple[float, ...]

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=DTYPE)
        if data.ndim not in (2, 3):
            raise DimensionMismatchError(f"grids must be 2D or 3D, got ndim={data.ndim}")
        if len(self.spacing) != data.ndim:
            raise DimensionMismatchError(
                f"spacing has {len(self.spacing)} components for a {data.ndim}D grid"
            )
        if any(n < 1 for n in data.shape):
            raise NonPositiveExtentError(f"all extents must be >= 1, got {data.shape}")
        spacing = _normalize_spacing(self.spacing)
        if not all(s > 0 and np.isfinite(s) for s in spacing):
            raise NonPositiveSpacingError(f"spacing must be positive, got {tuple(self.spacing)}")
        self.data = data
        self.spacing = spacing

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def flat(self) -> np.ndarray:
        """Row-major flat view of the data (no copy)."""
        return self.data.reshape(-1)

    def flat_index(self, *coord: int) -> int:
        if len(coord) != self.ndim:
            raise DimensionMismatchError(f"expected {self.ndim} coordinates, got {len(coord)}")
        idx = 0
        for c, n in zip(coord, self.dims):
            if not 0 <= c < n:
                raise IndexError(f"coordinate {coord} outside grid {self.dims}")
            idx = idx * n + c
        return idx

    def copy(self) -> ScalarGrid:
        return ScalarGrid(self.data.copy(), self.spacing)

    def like(self, data: np.ndarray) -> ScalarGrid:
        """New grid with this grid's spacing and the given data."""
        data = np.asarray(data)
        if data.shape != self.dims:
            raise ShapeMismatchError(f"shape mismatch: {data.shape} vs {self.dims}")
        return ScalarGrid(data, self.spacing)


def create_grid(
    ndim: int, dims: Sequence[int], spacing: Sequence[float], fill: float = 0.0
) -> ScalarGrid:
    if ndim not in (2, 3):
        raise DimensionMismatchError(f"ndim must be 2 or 3, got {ndim}")
    if len(dims) != ndim or len(spacing) != ndim:
        raise DimensionMismatchError(
            f"ndim={ndim} but got {len(dims)} dims and {len(spacing)} spacing components"
        )
    if any(int(n) < 1 for n in dims):
        raise NonPositiveExtentError(f"all extents must be >= 1, got {tuple(dims)}")
    if any(not s > 0 for s in spacing):
        raise NonPositiveSpacingError(f"spacing must be positive, got {tuple(spacing)}")
    data = np.full(tuple(int(n) for n in dims), fill, dtype=DTYPE)
    return ScalarGrid(data, tuple(spacing))


def from_array(data, spacing: Sequence[float] | None = None) -> ScalarGrid:
    """Wrap an array as a grid, defaulting to unit spacing."""
    data = np.asarray(data)
    if spacing is None:
        spacing = (1.0,) * data.ndim
    return ScalarGrid(data, tuple(spacing))


def grids_approx_equal(a: ScalarGrid, b: ScalarGrid, tol: float) -> bool:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if a.dims != b.dims or a.spacing != b.spacing:
        return False
    x = a.data.astype(np.float64)
    y = b.data.astype(np.float64)
    x_inf = x >= INF_SENTINEL
    y_inf = y >= INF_SENTINEL
    if not np.array_equal(x_inf, y_inf):
        return False
    finite = ~x_inf
    if not finite.any():
        return True
    return bool(np.max(np.abs(x[finite] - y[finite])) <= tol)


def check_same_geometry(a: ScalarGrid, b: ScalarGrid) -> None:
    if a.dims != b.dims:
        raise ShapeMismatchError(f"shape mismatch: {a.dims} vs {b.dims}")
    if a.spacing != b.spacing:
        raise ShapeMismatchError(f"spacing mismatch: {a.spacing} vs {b.spacing}")


def check_intensity(grid: ScalarGrid) -> None:
    if not np.all(np.isfinite(grid.data)):
        raise InvalidValuesError("intensity grid contains NaN or infinite values")


def check_mask(grid: ScalarGrid) -> None:
    d = grid.data
    if not np.all(np.isfinite(d)) or d.min() < 0 or d.max() > 1:
        raise InvalidValuesError("mask values must lie in [0, 1]")


def check_distance(grid: ScalarGrid) -> None:
    d = grid.data
    if not np.all(np.isfinite(d)) or d.min() < 0 or d.max() > INF_SENTINEL:
        raise InvalidValuesError(f"distance values must lie in [0, {INF_SENTINEL:g}]")


def threshold_mask(grid: ScalarGrid) -> ScalarGrid:
    """Binarize a mask at 0.5 (values >= 0.5 become 1)."""
    return grid.like((grid.data >= MASK_THRESHOLD).astype(DTYPE))


@dataclass(frozen=True)
class TransformParams:
    """Parameters shared by every transform.

    ``lam`` blends the spatial and intensity terms of the step cost: 0 is
    pure Euclidean, 1 is pure geodesic on intensity. ``nu`` scales a soft
    mask into initial distances. ``iterations`` counts full scan rounds.
    """

    lam: float = 1.0
    nu: float = INF_SENTINEL
    iterations: int = 2

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidParamsError(f"lambda must be in [0, 1], got {self.lam}")
        if not self.nu >= 0.0:
            raise InvalidParamsError(f"nu must be >= 0, got {self.nu}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise InvalidParamsError(f"iterations must be a positive integer, got {self.iterations}")


@dataclass(frozen=True)
class GsfParams(TransformParams):
    theta: float = field(default=0.0)

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.theta >= 0.0:
            raise InvalidParamsError(f"theta must be >= 0, got {self.theta}")
