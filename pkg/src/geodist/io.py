"""FGD1 binary grid container and binary PGM (P5) import/export.

FGD1 layout, little-endian::

    b"FGD1" | u32 ndim | u32 dims[ndim] | f32 spacing[ndim] | f32 data[prod(dims)]

dims and spacing are in ``(depth,) height, width`` order; data is row-major
with width fastest.
"""

from __future__ import annotations

import re
import struct
from typing import BinaryIO

import numpy as np

from .grid import DTYPE, INF_SENTINEL, ScalarGrid

FGD1_MAGIC = b"FGD1"


class FormatError(ValueError):
    """Malformed grid or image stream. ``offset`` is the byte where parsing failed."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class BadMagicError(FormatError):
    pass


class BadRankError(FormatError):
    pass


class BadDimsError(FormatError):
    pass


class InvalidSpacingError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    def __init__(self, expected: int, actual: int, offset: int):
        super().__init__(f"truncated payload: expected {expected} bytes, got {actual}", offset)
        self.expected = expected
        self.actual = actual


class TrailingDataError(FormatError):
    pass


class UnsupportedFormatError(FormatError):
    pass


class MalformedHeaderError(FormatError):
    pass


class PayloadSizeError(FormatError):
    pass


class RankError(ValueError):
    pass


def fgd1_bytes(grid: ScalarGrid) -> bytes:
    header = FGD1_MAGIC + struct.pack(
        f"<I{grid.ndim}I{grid.ndim}f", grid.ndim, *grid.dims, *grid.spacing
    )
    return header + grid.data.astype("<f4", copy=False).tobytes(order="C")


def write_grid_fgd1(grid: ScalarGrid, sink: BinaryIO) -> int:
    payload = fgd1_bytes(grid)
    written = sink.write(payload)
    if written is not None and written != len(payload):
        raise OSError(f"short write: {written} of {len(payload)} bytes")
    return len(payload)


def parse_fgd1(buf: bytes) -> ScalarGrid:
    if len(buf) < 4 or buf[:4] != FGD1_MAGIC:
        raise BadMagicError(f"bad magic {bytes(buf[:4])!r}, expected {FGD1_MAGIC!r}", 0)
    if len(buf) < 8:
        raise TruncatedPayloadError(8, len(buf), len(buf))
    (ndim,) = struct.unpack_from("<I", buf, 4)
    if ndim not in (2, 3):
        raise BadRankError(f"rank must be 2 or 3, got {ndim}", 4)
    header_len = 8 + 8 * ndim
    if len(buf) < header_len:
        raise TruncatedPayloadError(header_len, len(buf), len(buf))
    dims = struct.unpack_from(f"<{ndim}I", buf, 8)
    for axis, n in enumerate(dims):
        if n < 1:
            raise BadDimsError(f"extent of axis {axis} must be >= 1, got {n}", 8 + 4 * axis)
    spacing = struct.unpack_from(f"<{ndim}f", buf, 8 + 4 * ndim)
    for axis, s in enumerate(spacing):
        if not (s > 0 and np.isfinite(s)):
            raise InvalidSpacingError(
                f"spacing of axis {axis} must be positive, got {s}", 8 + 4 * ndim + 4 * axis
            )
    count = int(np.prod(dims, dtype=np.int64))
    expected = header_len + 4 * count
    if len(buf) < expected:
        raise TruncatedPayloadError(expected, len(buf), len(buf))
    if len(buf) > expected:
        raise TrailingDataError(
            f"{len(buf) - expected} unexpected trailing bytes after payload", expected
        )
    data = np.frombuffer(buf, dtype="<f4", count=count, offset=header_len)
    return ScalarGrid(data.astype(DTYPE).reshape(dims), tuple(spacing))


def read_grid_fgd1(source: BinaryIO) -> ScalarGrid:
    return parse_fgd1(source.read())


_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_header(buf: bytes) -> tuple[list[bytes], int]:
    """Return the four header tokens and the offset of the first sample byte."""
    tokens = []
    pos = 0
    for _ in range(4):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise MalformedHeaderError("incomplete PGM header", pos)
        tokens.append(m.group(1))
        pos = m.end()
        if len(tokens) == 1 and tokens[0] != b"P5":
            raise UnsupportedFormatError(f"unsupported format {tokens[0]!r}, expected P5", 0)
    if pos >= len(buf) or buf[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise MalformedHeaderError("expected a single whitespace byte after maxval", pos)
    return tokens, pos + 1


def parse_pgm(buf: bytes) -> ScalarGrid:
    if buf[:2] != b"P5":
        raise UnsupportedFormatError(f"unsupported format {bytes(buf[:2])!r}, expected P5", 0)
    tokens, start = _pgm_header(buf)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeaderError(f"non-integer header fields {tokens[1:]!r}", 2) from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad PGM size {width}x{height}", 2)
    if not 1 <= maxval <= 65535:
        raise MalformedHeaderError(f"maxval must be in [1, 65535], got {maxval}", 2)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    actual = len(buf) - start
    if actual != expected:
        raise PayloadSizeError(f"PGM payload is {actual} bytes, expected {expected}", start)
    samples = np.frombuffer(buf, dtype=dtype, count=width * height, offset=start)
    values = np.minimum(samples.astype(np.float64) / maxval, 1.0)
    return ScalarGrid(values.reshape(height, width), (1.0, 1.0))


def read_pgm(source: BinaryIO) -> ScalarGrid:
    return parse_pgm(source.read())


def preview_pixels(grid: ScalarGrid) -> np.ndarray:
    """Min-max normalize finite values to 0..255 (round half up); sentinel cells become 255."""
    d = grid.data.astype(np.float64)
    inf = d >= INF_SENTINEL
    out = np.full(d.shape, 255, dtype=np.uint8)
    finite = d[~inf]
    if finite.size:
        lo, hi = finite.min(), finite.max()
        if hi > lo:
            scaled = np.floor((d[~inf] - lo) / (hi - lo) * 255.0 + 0.5)
            out[~inf] = np.clip(scaled, 0, 255).astype(np.uint8)
        else:
            out[~inf] = 0
    return out


def write_pgm_preview(grid: ScalarGrid, sink: BinaryIO) -> int:
    if grid.ndim != 2:
        raise RankError(f"PGM previews need a 2D grid, got {grid.ndim}D; select a slice first")
    pixels = preview_pixels(grid)
    h, w = pixels.shape
    payload = f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()
    sink.write(payload)
    return len(payload)


def write_pgm(pixels: np.ndarray, sink: BinaryIO, maxval: int = 255) -> int:
    """Write raw integer samples as a P5 image."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise RankError("PGM images are 2D")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = pixels.shape
    payload = f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + pixels.astype(dtype).tobytes()
    sink.write(payload)
    return len(payload)


def load_grid(path) -> ScalarGrid:
    """Read an FGD1 or PGM file, chosen by its magic bytes."""
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] == FGD1_MAGIC:
        return parse_fgd1(buf)
    if buf[:1] == b"P":
        return parse_pgm(buf)
    raise BadMagicError(f"{path}: neither FGD1 nor PGM", 0)


def save_grid(grid: ScalarGrid, path) -> int:
    with open(path, "wb") as f:
        return write_grid_fgd1(grid, f)
