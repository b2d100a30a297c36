import math

import numpy as np
import pytest

from geodist.grid import INF_SENTINEL, ShapeMismatchError, TransformParams
from geodist.metric import PassDirection, direction_by_name, pass_directions, pass_neighbor_offsets
from geodist.oracle import dijkstra_exact
from geodist.scan_parallel import directional_pass, parallel_scan, scan_to_fixpoint
from geodist.scan_serial import serial_scan

from conftest import f32_up, grid, random_instance, seed_init, spiral_wall

SQ2 = math.sqrt(2)
CHAMFER_3x3 = f32_up([[SQ2, 1, SQ2], [1, 0, 1], [SQ2, 1, SQ2]])


def shadow_pass(dist, image, direction, lam):
    """Plane-at-a-time reference: snapshot the previous row/plane, then update.

    Shares only the stencil definition with the engine.
    """
    d = np.moveaxis(dist.data.astype(np.float32).copy(), direction.axis, 0)
    img = np.moveaxis(image.data, direction.axis, 0).astype(np.float64)
    n = d.shape[0]
    order = range(1, n) if direction.orientation > 0 else range(n - 2, -1, -1)
    offsets = pass_neighbor_offsets(direction, dist.ndim, dist.spacing)
    for i in order:
        j = i - direction.orientation
        prev = d[j].astype(np.float64).copy()
        prev_img = img[j]
        best = d[i].astype(np.float64)
        for o in offsets:
            cross = [dl for ax, dl in enumerate(o.delta) if ax != direction.axis]
            cand = np.full(best.shape, np.inf)
            src = [slice(None)] * best.ndim
            dst = [slice(None)] * best.ndim
            for ax, dl in enumerate(cross):
                n_ax = best.shape[ax]
                dst[ax] = slice(max(0, -dl), n_ax - max(0, dl))
                src[ax] = slice(max(0, dl), n_ax - max(0, -dl))
            di = img[i][tuple(dst)] - prev_img[tuple(src)]
            cand[tuple(dst)] = prev[tuple(src)] + np.sqrt((1 - lam) * o.rho**2 + lam * di * di)
            best = np.minimum(best, cand)
        d[i] = np.minimum(d[i], f32_up(best))
    return np.moveaxis(d, 0, direction.axis)


def test_top_bottom_pass_example():
    init = seed_init((3, 3), (1, 1))
    out = directional_pass(init, grid(np.zeros((3, 3))), direction_by_name("top-bottom", 2), TransformParams(lam=0))
    np.testing.assert_array_equal(out.data[:2], init.data[:2])
    np.testing.assert_array_equal(out.data[2], CHAMFER_3x3[2])


def test_uniform_image_zero_distances_unchanged():
    image = grid(np.full((5, 6), 0.3))
    zeros = grid(np.zeros((5, 6)))
    for d in pass_directions(2):
        out = directional_pass(zeros, image, d, TransformParams(lam=1.0))
        np.testing.assert_array_equal(out.data, zeros.data)


def test_round_is_exact_chamfer_on_3x3():
    out = parallel_scan(grid(np.zeros((3, 3))), seed_init((3, 3), (1, 1)), TransformParams(lam=0, iterations=1))
    np.testing.assert_array_equal(out.data, CHAMFER_3x3)


def test_rejects_bad_direction_and_shapes():
    init = seed_init((3, 3), (1, 1))
    with pytest.raises(ValueError):
        directional_pass(init, grid(np.zeros((3, 3))), PassDirection(2, 1), TransformParams())
    with pytest.raises(ShapeMismatchError):
        directional_pass(init, grid(np.zeros((3, 4))), PassDirection(0, 1), TransformParams())
    with pytest.raises(ValueError):
        parallel_scan(grid(np.zeros((3, 3))), init, TransformParams(), workers=0)


@pytest.mark.parametrize("shape, spacing", [((9, 11), (1, 1)), ((5, 6, 7), (1, 1, 1)), ((6, 4, 5), (1.5, 0.5, 2.0)), ((1, 8), (1, 1))])
@pytest.mark.parametrize("lam", [0.0, 0.4, 1.0])
def test_pass_matches_shadow(rng, shape, spacing, lam):
    image, init = random_instance(rng, shape)
    image, init = grid(image.data, spacing), grid(init.data, spacing)
    # start from a partially relaxed state so every pass has work to do
    dist = serial_scan(image, init, TransformParams(lam=lam, iterations=1))
    dist = dist.like(dist.data + rng.random(shape, dtype=np.float32))
    for d in pass_directions(len(shape)):
        out = directional_pass(dist, image, d, TransformParams(lam=lam), workers=3)
        np.testing.assert_array_equal(out.data, shadow_pass(dist, image, d, lam))


@pytest.mark.parametrize("shape", [(8, 8), (7, 9, 6), (33, 5)])
def test_worker_count_invariance(rng, shape):
    image, init = random_instance(rng, shape)
    p = TransformParams(lam=0.7, iterations=2)
    ref = parallel_scan(image, init, p, workers=1)
    for w in (2, 4, 8):
        np.testing.assert_array_equal(parallel_scan(image, init, p, workers=w).data, ref.data)


def test_iterations_compose(rng):
    image, init = random_instance(rng, (10, 12))
    one = TransformParams(lam=0.9, iterations=1)
    two = parallel_scan(image, init, TransformParams(lam=0.9, iterations=2), workers=2)
    np.testing.assert_array_equal(two.data, parallel_scan(image, parallel_scan(image, init, one), one).data)


def test_pass_and_round_monotone(rng):
    image, init = random_instance(rng, (6, 7, 8))
    p = TransformParams(lam=0.5, iterations=1)
    d = init
    for _ in range(2):
        start = d
        for direction in pass_directions(3):
            nxt = directional_pass(d, image, direction, p)
            assert np.all(nxt.data <= d.data)
            d = nxt
        assert np.all(d.data <= start.data)


def test_fixpoint_uniform_confirms_immediately():
    image = grid(np.full((6, 6), 0.25))
    res = scan_to_fixpoint(image, grid(np.zeros((6, 6))), TransformParams(lam=1.0), "parallel")
    assert res.rounds_used == 1 and res.converged


@pytest.mark.parametrize("engine", ["serial", "parallel"])
def test_fixpoint_3x3(engine):
    res = scan_to_fixpoint(grid(np.zeros((3, 3))), seed_init((3, 3), (1, 1)), TransformParams(lam=0), engine)
    assert res.converged and res.rounds_used <= 2
    np.testing.assert_array_equal(res.grid.data, CHAMFER_3x3)


@pytest.mark.parametrize("engine", ["serial", "parallel"])
def test_fixpoint_spiral(engine):
    image = grid(spiral_wall(15))
    init = seed_init((15, 15), (7, 7))
    res = scan_to_fixpoint(image, init, TransformParams(lam=1.0), engine)
    assert res.converged and res.rounds_used >= 2
    np.testing.assert_allclose(res.grid.data, dijkstra_exact(image, init, 1.0).data, atol=1e-4)


def test_fixpoint_reports_non_convergence():
    image = grid(spiral_wall(15))
    res = scan_to_fixpoint(image, seed_init((15, 15), (7, 7)), TransformParams(lam=1.0), "parallel", max_rounds=2)
    assert not res.converged
    assert res.rounds_used == 2 and res.last_change > 0


@pytest.mark.parametrize("shape", [(16, 16), (8, 8, 8), (13, 4)])
@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_fixpoint_matches_serial_and_oracle(rng, shape, lam):
    image, init = random_instance(rng, shape)
    p = TransformParams(lam=lam)
    par = scan_to_fixpoint(image, init, p, "parallel", workers=2)
    ser = scan_to_fixpoint(image, init, p, "serial")
    ref = dijkstra_exact(image, init, lam)
    np.testing.assert_allclose(par.grid.data, ref.data, atol=1e-4)
    np.testing.assert_allclose(par.grid.data, ser.grid.data, atol=1e-4)


@pytest.mark.parametrize("n", [3, 5, 9])
def test_single_round_exact_for_euclidean(n):
    image = grid(np.zeros((n, n)))
    for cell in np.ndindex(n, n):
        init = seed_init((n, n), cell)
        out = parallel_scan(image, init, TransformParams(lam=0.0, iterations=1))
        ref = dijkstra_exact(image, init, 0.0)
        np.testing.assert_allclose(out.data, ref.data, atol=1e-5, err_msg=str(cell))


def test_sentinel_never_produces_finite_from_nothing():
    out = parallel_scan(grid(np.zeros((4, 4))), grid(np.full((4, 4), INF_SENTINEL)), TransformParams(), 2)
    assert np.all(out.data == np.float32(INF_SENTINEL))
