"""Command-line front end: ``geodist compute | benchmark | compare``.

Exit codes: 0 success, 1 compare found differences above tolerance,
2 argument errors, 3 I/O or format errors, 4 computation errors.
Diagnostics go to stderr as one line; results go to stdout.
"""

from __future__ import annotations

import argparse
import csv
import os
import statistics
import sys
import time

import numpy as np

from .grid import (
    INF_SENTINEL,
    GridError,
    GsfParams,
    InvalidParamsError,
    ScalarGrid,
    TransformParams,
    check_same_geometry,
)
from .io import FormatError, RankError, load_grid, save_grid, write_pgm_preview
from .scan_parallel import parallel_scan
from .scan_serial import serial_scan
from .transforms import (
    ConvergenceError,
    EmptySeedError,
    euclidean_distance,
    generalized_geodesic,
    geodesic_distance,
    gsf,
    init_hard_seeds,
    signed_geodesic,
)

EXIT_OK = 0
EXIT_DIFFERENT = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_COMPUTE = 4

THREADS_ENV = "GEODIST_THREADS"
BENCH_COLUMNS = [
    "ndim", "size", "engine", "threads", "iterations",
    "wall_ms", "speedup_vs_serial", "max_dev_vs_serial", "rng_seed",
]
BENCH_AGREEMENT_TOL = 1e-3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(code: int, message: str) -> int:
    print(f"geodist: error: {message}", file=sys.stderr)
    return code


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geodist", description="Geodesic and Euclidean distance transforms.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compute", help="compute a transform on files")
    c.add_argument("--input", required=True, help="intensity grid (FGD1 or PGM)")
    c.add_argument("--seeds", required=True, help="seed/soft mask grid, same shape as input")
    c.add_argument("--mode", required=True, choices=["geodesic", "euclidean", "generalized", "signed", "gsf"])
    c.add_argument("--lambda", dest="lam", type=float, default=1.0)
    c.add_argument("--v", dest="nu", type=float, default=INF_SENTINEL, help="soft-mask scaling")
    c.add_argument("--theta", type=float, help="GSF margin (gsf mode only)")
    c.add_argument("--iterations", type=_positive_int, default=2)
    c.add_argument("--engine", choices=["serial", "parallel", "oracle"], default="parallel")
    c.add_argument("--threads", type=_positive_int, help=f"worker threads (default: ${THREADS_ENV} or CPU count)")
    c.add_argument("--fixpoint", action="store_true", help="iterate to convergence (at most 100 rounds)")
    c.add_argument("--output", required=True, help="result grid (FGD1)")
    c.add_argument("--preview", help="optional PGM preview")
    c.add_argument("--slice", type=int, help="depth index for previews of 3D results")

    b = sub.add_parser("benchmark", help="time serial vs parallel engines")
    b.add_argument("--dims", type=int, choices=[2, 3], default=3)
    b.add_argument("--sizes", type=_int_list, default=[64])
    b.add_argument("--threads-list", type=_int_list, default=[1, 2, 4])
    b.add_argument("--iterations", type=_positive_int, default=2)
    b.add_argument("--lambda", dest="lam", type=float, default=1.0)
    b.add_argument("--repeats", type=_positive_int, default=5)
    b.add_argument("--seed", type=int, default=0, help="RNG seed for the synthetic image")
    b.add_argument("--csv", help="write CSV here instead of stdout")

    m = sub.add_parser("compare", help="compare two FGD1 grids")
    m.add_argument("--a", required=True)
    m.add_argument("--b", required=True)
    m.add_argument("--tol", type=float, default=1e-4)
    return parser


def _threads(args) -> int:
    return args.threads if args.threads is not None else default_threads()


def cmd_compute(args) -> int:
    try:
        params = (
            GsfParams(lam=args.lam, nu=args.nu, iterations=args.iterations, theta=args.theta)
            if args.mode == "gsf"
            else TransformParams(lam=args.lam, nu=args.nu, iterations=args.iterations)
        )
    except (InvalidParamsError, TypeError) as exc:
        raise UsageError(str(exc))
    if args.mode == "gsf" and args.theta is None:
        raise UsageError("--theta is required for --mode gsf")
    threads = _threads(args)

    try:
        image = load_grid(args.input)
        seeds = load_grid(args.seeds)
    except (OSError, FormatError, GridError) as exc:
        return _fail(EXIT_IO, str(exc))
    try:
        check_same_geometry(image, seeds)
    except GridError as exc:
        raise UsageError(str(exc))

    common = dict(engine=args.engine, workers=threads, fixpoint=args.fixpoint)
    start = time.perf_counter()
    try:
        if args.mode == "geodesic":
            result = geodesic_distance(image, seeds, params, **common)
        elif args.mode == "euclidean":
            result = euclidean_distance(seeds, iterations=params.iterations, **common)
        elif args.mode == "generalized":
            result = generalized_geodesic(image, seeds, params, **common)
        elif args.mode == "signed":
            result = signed_geodesic(image, seeds, params, **common)
        else:
            result = gsf(image, seeds, params, **common).mask
    except (EmptySeedError, ConvergenceError, GridError, ValueError) as exc:
        return _fail(EXIT_COMPUTE, str(exc))
    elapsed = time.perf_counter() - start

    try:
        save_grid(result, args.output)
        if args.preview:
            preview = result
            if result.ndim == 3:
                z = result.dims[0] // 2 if args.slice is None else args.slice
                if not 0 <= z < result.dims[0]:
                    raise UsageError(f"--slice {z} outside depth {result.dims[0]}")
                preview = ScalarGrid(result.data[z], result.spacing[1:])
            with open(args.preview, "wb") as f:
                write_pgm_preview(preview, f)
    except (OSError, RankError) as exc:
        return _fail(EXIT_IO, str(exc))

    rounds = "fixpoint" if args.fixpoint else str(params.iterations)
    if args.engine == "oracle":
        rounds = "exact"
    size = "x".join(str(n) for n in result.dims)
    print(
        f"mode={args.mode} size={size} engine={args.engine} threads={threads} "
        f"wall_ms={elapsed * 1e3:.3f} rounds={rounds}"
    )
    return EXIT_OK


def phantom(shape: tuple[int, ...], rng: np.random.Generator, n_boxes: int = 12) -> np.ndarray:
    """Zero background with axis-aligned boxes of random size, position and intensity.

    White noise is a poor benchmark input: its geodesic paths wind so much
    that a couple of rounds leave the two engines far from each other and
    from the fixpoint, and the agreement check would reject every run.
    """
    img = np.zeros(shape, dtype=np.float32)
    for _ in range(n_boxes):
        lo = [int(rng.integers(0, max(1, n - n // 8))) for n in shape]
        ext = [int(rng.integers(n // 16 + 1, max(n // 4, n // 16 + 2))) for n in shape]
        box = tuple(slice(l, min(l + e, n)) for l, e, n in zip(lo, ext, shape))
        img[box] = rng.random()
    return img


def benchmark_inputs(ndim: int, size: int, rng_seed: int) -> tuple[ScalarGrid, ScalarGrid]:
    """Deterministic phantom intensity grid and a single-center-seed distance grid."""
    rng = np.random.default_rng(rng_seed)
    shape = (size,) * ndim
    image = ScalarGrid(phantom(shape, rng), (1.0,) * ndim)
    seeds = np.zeros(shape, dtype=np.float32)
    seeds[(size // 2,) * ndim] = 1.0
    return image, init_hard_seeds(image.like(seeds))


def _time(fn, repeats: int) -> tuple[float, ScalarGrid]:
    result = fn()  # warmup, also triggers JIT compilation
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times) * 1e3, result


def run_benchmark(
    ndim: int,
    sizes: list[int],
    threads_list: list[int],
    iterations: int,
    lam: float,
    repeats: int,
    rng_seed: int = 0,
) -> list[dict]:
    """Time serial and parallel engines; each row's max deviation is measured against serial."""
    params = TransformParams(lam=lam, iterations=iterations)
    rows = []
    for size in sizes:
        image, init = benchmark_inputs(ndim, size, rng_seed)
        serial_ms, ref = _time(lambda: serial_scan(image, init, params), repeats)
        rows.append(dict(
            ndim=ndim, size=size, engine="serial", threads=1, iterations=iterations,
            wall_ms=serial_ms, speedup_vs_serial=1.0, max_dev_vs_serial=0.0, rng_seed=rng_seed,
        ))
        for threads in threads_list:
            ms, out = _time(lambda: parallel_scan(image, init, params, threads), repeats)
            dev = float(np.max(np.abs(out.data.astype(np.float64) - ref.data)))
            rows.append(dict(
                ndim=ndim, size=size, engine="parallel", threads=threads, iterations=iterations,
                wall_ms=ms, speedup_vs_serial=serial_ms / ms if ms > 0 else float("inf"),
                max_dev_vs_serial=dev, rng_seed=rng_seed,
            ))
    return rows


def _format_row(row: dict) -> dict:
    out = dict(row)
    out["wall_ms"] = f"{row['wall_ms']:.3f}"
    out["speedup_vs_serial"] = f"{row['speedup_vs_serial']:.3f}"
    out["max_dev_vs_serial"] = f"{row['max_dev_vs_serial']:.6g}"
    return out


def cmd_benchmark(args) -> int:
    if not 0.0 <= args.lam <= 1.0:
        raise UsageError(f"--lambda must be in [0, 1], got {args.lam}")
    rows = run_benchmark(
        args.dims, args.sizes, args.threads_list, args.iterations, args.lam, args.repeats, args.seed
    )
    try:
        if args.csv:
            with open(args.csv, "w", newline="") as f:
                _write_csv(rows, f)
        else:
            _write_csv(rows, sys.stdout)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    worst = max(r["max_dev_vs_serial"] for r in rows)
    if worst > BENCH_AGREEMENT_TOL:
        return _fail(
            EXIT_COMPUTE, f"engines disagree: max deviation {worst:g} > {BENCH_AGREEMENT_TOL:g}"
        )
    return EXIT_OK


def _write_csv(rows, stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(_format_row(row))


def cmd_compare(args) -> int:
    if args.tol < 0:
        raise UsageError(f"--tol must be >= 0, got {args.tol}")
    try:
        a = load_grid(args.a)
        b = load_grid(args.b)
    except (OSError, FormatError, GridError) as exc:
        return _fail(EXIT_IO, str(exc))
    if a.dims != b.dims:
        raise UsageError(f"shape mismatch: {a.dims} vs {b.dims}")
    diff = np.abs(a.data.astype(np.float64) - b.data.astype(np.float64))
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    max_diff = float(diff[idx])
    n_diff = int(np.count_nonzero(diff > 0))
    n_over = int(np.count_nonzero(diff > args.tol))
    coord = ",".join(str(int(i)) for i in idx)
    print(
        f"max_abs_diff={max_diff:.9g} at=({coord}) differing_cells={n_diff} "
        f"cells_over_tol={n_over} tol={args.tol:g}"
    )
    if a.spacing != b.spacing:
        print(f"geodist: warning: spacing differs: {a.spacing} vs {b.spacing}", file=sys.stderr)
    return EXIT_OK if max_diff <= args.tol else EXIT_DIFFERENT


COMMANDS = {"compute": cmd_compute, "benchmark": cmd_benchmark, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))


if __name__ == "__main__":
    sys.exit(main())
