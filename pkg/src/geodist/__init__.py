"""Geodesic, Euclidean and hybrid distance transforms on 2D/3D grids.

Two raster-scan engines are provided: a serial two-phase scan and a
directional-pass scan whose row/plane updates run on a thread pool. An
exact Dijkstra reference is available for validation.
"""

from .grid import (
    INF_SENTINEL,
    GsfParams,
    ScalarGrid,
    TransformParams,
    create_grid,
    from_array,
    grids_approx_equal,
)
from .metric import (
    NeighborOffset,
    PassDirection,
    pass_directions,
    pass_neighbor_offsets,
    serial_neighbor_offsets,
    step_cost,
)
from .oracle import dijkstra_exact
from .scan_parallel import FixpointResult, directional_pass, parallel_scan, scan_to_fixpoint
from .scan_serial import serial_scan
from .transforms import (
    euclidean_distance,
    generalized_geodesic,
    geodesic_dilate,
    geodesic_distance,
    geodesic_erode,
    gsf,
    init_hard_seeds,
    signed_geodesic,
)

__all__ = [
    "INF_SENTINEL", "GsfParams", "ScalarGrid", "TransformParams", "create_grid", "from_array",
    "grids_approx_equal", "NeighborOffset", "PassDirection", "pass_directions",
    "pass_neighbor_offsets", "serial_neighbor_offsets", "step_cost", "dijkstra_exact",
    "FixpointResult", "directional_pass", "parallel_scan", "scan_to_fixpoint", "serial_scan",
    "euclidean_distance", "generalized_geodesic", "geodesic_dilate", "geodesic_distance",
    "geodesic_erode", "gsf", "init_hard_seeds", "signed_geodesic",
]
