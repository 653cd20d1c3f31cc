"""Image arrays, resampling, and binary image file I/O.

Grayscale images are 2-D float64 arrays in [0, 1], row-major, indexed
``[y, x]``.  Color images are ``(H, W, 3)`` arrays of interleaved RGB.

Supported file formats:

* binary PGM (``P5``) and PPM (``P6``), 8-bit, maxval 255;
* a raw float format: one ASCII header line ``SKVR1 <width> <height>\\n``
  followed by ``width*height`` little-endian float32 values, row-major.

All functions are pure; none mutate their inputs.
"""

from __future__ import annotations

import math
import os

import numpy as np

RAW_MAGIC = b"SKVR1"

_PNM_WHITESPACE = b" \t\n\r\x0b\x0c"


class ImageFormatError(ValueError):
    """Raised for malformed, truncated, or unsupported image files."""


def require_gray(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate a grayscale image array and return it as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D array with positive dimensions, got shape {arr.shape}")
    return arr


def to_grayscale(color: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) RGB image to grayscale with Rec.601 weights.

    gray = 0.299 R + 0.587 G + 0.114 B, clamped to [0, 1].  Written in
    delta-from-blue form so pixels with equal channels pass through exactly.
    """
    arr = np.asarray(color, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) color image, got shape {arr.shape}")
    r, g, b = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
    gray = b + 0.299 * (r - b) + 0.587 * (g - b)
    return np.clip(gray, 0.0, 1.0)


def _area_spans(n_in: int, n_out: int) -> list[tuple[int, np.ndarray]]:
    """Per output cell: (first input index, normalized overlap weights).

    Output cell j covers the source interval [j*s, (j+1)*s) with s = n_in/n_out;
    weights are the exact overlap lengths of that interval with each unit
    source cell, normalized to sum to 1.
    """
    scale = n_in / n_out
    spans = []
    for j in range(n_out):
        a = j * scale
        b = (j + 1) * scale
        lo = int(math.floor(a))
        hi = min(int(math.ceil(b)), n_in)
        w = np.array([min(b, t + 1.0) - max(a, float(t)) for t in range(lo, hi)], dtype=np.float64)
        spans.append((lo, w / w.sum()))
    return spans


def _reduce_axis(arr: np.ndarray, spans: list[tuple[int, np.ndarray]], axis: int) -> np.ndarray:
    # fixed left-to-right accumulation keeps results bit-reproducible
    n_out = len(spans)
    if axis == 1:
        out = np.empty((arr.shape[0], n_out), dtype=np.float64)
        for j, (lo, w) in enumerate(spans):
            acc = w[0] * arr[:, lo]
            for t in range(1, w.size):
                acc = acc + w[t] * arr[:, lo + t]
            out[:, j] = acc
    else:
        out = np.empty((n_out, arr.shape[1]), dtype=np.float64)
        for j, (lo, w) in enumerate(spans):
            acc = w[0] * arr[lo, :]
            for t in range(1, w.size):
                acc = acc + w[t] * arr[lo + t, :]
            out[j, :] = acc
    return out


def resize_area(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Downsample by exact area averaging (anti-aliased).

    Each output pixel is the overlap-weighted mean of the source pixels its
    (possibly fractional) source rectangle covers.  Only downscaling or the
    identity size is allowed; use :func:`resize_bilinear` to upscale.
    """
    arr = require_gray(img)
    h_in, w_in = arr.shape
    if width < 1 or height < 1:
        raise ValueError("output dimensions must be >= 1")
    if width > w_in or height > h_in:
        raise ValueError(
            f"resize_area cannot upscale ({w_in}x{h_in} -> {width}x{height}); use resize_bilinear"
        )
    if width == w_in and height == h_in:
        return arr.copy()
    out = _reduce_axis(arr, _area_spans(w_in, width), axis=1)
    out = _reduce_axis(out, _area_spans(h_in, height), axis=0)
    return out


def resize_bilinear(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Resize by bilinear interpolation with edge-aligned corners.

    Output corner samples coincide with input corner samples; a
    single-row/column output samples the input midline.  Output values never
    leave the [min, max] range of the input.
    """
    arr = require_gray(img)
    h_in, w_in = arr.shape
    if width < 1 or height < 1:
        raise ValueError("output dimensions must be >= 1")
    if width == w_in and height == h_in:
        return arr.copy()
    xs = np.array([(w_in - 1) / 2.0]) if width == 1 else np.linspace(0.0, w_in - 1.0, width)
    ys = np.array([(h_in - 1) / 2.0]) if height == 1 else np.linspace(0.0, h_in - 1.0, height)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w_in - 1)
    y1 = np.minimum(y0 + 1, h_in - 1)
    fx = xs - x0
    fy = ys - y0
    top = arr[np.ix_(y0, x0)] * (1.0 - fx) + arr[np.ix_(y0, x1)] * fx
    bot = arr[np.ix_(y1, x0)] * (1.0 - fx) + arr[np.ix_(y1, x1)] * fx
    return top * (1.0 - fy)[:, None] + bot * fy[:, None]


def _parse_pnm(data: bytes, path: str) -> np.ndarray:
    channels = 1 if data[:2] == b"P5" else 3
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and (data[pos] in _PNM_WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                nl = data.find(b"\n", pos)
                if nl < 0:
                    raise ImageFormatError(f"{path}: unterminated comment in header")
                pos = nl + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos] not in _PNM_WHITESPACE:
            pos += 1
        token = data[start:pos]
        if not token:
            raise ImageFormatError(f"{path}: truncated header")
        try:
            fields.append(int(token))
        except ValueError:
            raise ImageFormatError(f"{path}: non-numeric header field {token!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval} (only 255 is supported)")
    pos += 1  # exactly one whitespace byte separates the header from the raster
    need = width * height * channels
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise ImageFormatError(f"{path}: truncated raster (expected {need} bytes, got {len(raster)})")
    arr = np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / 255.0
    if channels == 1:
        return arr.reshape(height, width)
    return arr.reshape(height, width, 3)


def _parse_rawf32(data: bytes, path: str) -> np.ndarray:
    nl = data.find(b"\n")
    if nl < 0:
        raise ImageFormatError(f"{path}: missing raw-float header line")
    parts = data[:nl].split()
    if len(parts) != 3 or parts[0] != RAW_MAGIC:
        raise ImageFormatError(f"{path}: malformed raw-float header {data[:nl]!r}")
    try:
        width, height = int(parts[1]), int(parts[2])
    except ValueError:
        raise ImageFormatError(f"{path}: non-numeric raw-float dimensions") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid dimensions {width}x{height}")
    need = 4 * width * height
    raster = data[nl + 1 :]
    if len(raster) < need:
        raise ImageFormatError(f"{path}: truncated raster (expected {need} bytes, got {len(raster)})")
    if len(raster) > need:
        raise ImageFormatError(f"{path}: {len(raster) - need} trailing bytes after raster")
    return np.frombuffer(raster, dtype="<f4").astype(np.float64).reshape(height, width)


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a PGM (P5), PPM (P6), or raw-float (SKVR1) image.

    Returns a 2-D array for grayscale input and an (H, W, 3) array for PPM.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    spath = os.fspath(path)
    if data[:2] in (b"P5", b"P6"):
        return _parse_pnm(data, spath)
    if data[: len(RAW_MAGIC)] == RAW_MAGIC:
        return _parse_rawf32(data, spath)
    raise ImageFormatError(f"{spath}: unrecognized format (expected P5, P6, or SKVR1)")


def save_image(img: np.ndarray, path: str | os.PathLike, fmt: str = "rawf32") -> None:
    """Write a grayscale image as 8-bit PGM (``pgm8``) or raw float (``rawf32``).

    pgm8 quantizes with round-half-up on v*255; rawf32 is lossless at
    float32 precision.
    """
    arr = require_gray(img)
    h, w = arr.shape
    if fmt == "pgm8":
        levels = np.clip(np.floor(arr * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)
        payload = f"P5\n{w} {h}\n255\n".encode("ascii") + levels.tobytes()
    elif fmt == "rawf32":
        payload = RAW_MAGIC + f" {w} {h}\n".encode("ascii") + np.ascontiguousarray(arr, dtype="<f4").tobytes()
    else:
        raise ValueError(f"unknown format {fmt!r} (expected 'pgm8' or 'rawf32')")
    with open(path, "wb") as fh:
        fh.write(payload)
