"""High-frequency indicators for decoded step images.

Two complementary measurements drive acceleration decisions:

* ``hf_diff``: mean absolute difference between the Sobel gradient-magnitude
  maps of two consecutive decoded images; small values mean the fine detail
  has stabilized between steps.
* ``hf_ratio``: fraction of total Fourier magnitude outside a centered disc
  of normalized radius rho in the shifted spectrum; small values mean the
  image carries little fine detail to begin with.

The forward transform is an unnormalized 2-D DFT: a radix-2 FFT along
power-of-two axes and a direct matrix DFT otherwise.  Every reduction runs
in a fixed order so repeated calls are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import require_gray, resize_area


@dataclass(frozen=True)
class HFParams:
    """Mask radius and stabilizer for the spectral ratio.

    rho is a normalized radius in (0, 1): bin distance from the spectrum
    center is divided by min(H, W)/2 before comparison.  epsilon keeps the
    ratio finite on all-zero images.
    """

    rho: float = 0.25
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class Spectrum:
    """Complex DFT coefficients plus the quadrant-shift flag."""

    width: int
    height: int
    coeffs: np.ndarray
    shifted: bool


def sobel_magnitude(img: np.ndarray) -> np.ndarray:
    """Per-pixel gradient magnitude from 3x3 Sobel kernels.

    Uses replicate border padding; the output is not clamped and may
    exceed 1.
    """
    arr = require_gray(img)
    if arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ValueError(f"sobel_magnitude needs at least a 3x3 image, got {arr.shape}")
    p = np.pad(arr, 1, mode="edge")
    gx = (
        (p[:-2, 2:] - p[:-2, :-2])
        + 2.0 * (p[1:-1, 2:] - p[1:-1, :-2])
        + (p[2:, 2:] - p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] - p[:-2, :-2])
        + 2.0 * (p[2:, 1:-1] - p[:-2, 1:-1])
        + (p[2:, 2:] - p[:-2, 2:])
    )
    return np.sqrt(gx * gx + gy * gy)


def hf_diff(i_n: np.ndarray, i_prev: np.ndarray, analysis_size: int) -> float:
    """Mean absolute difference of Sobel maps at a common analysis size.

    Both images are area-resized to analysis_size x analysis_size first, so
    the value is comparable across steps with different native resolutions.
    The mean (not the sum) keeps thresholds independent of the analysis
    resolution.
    """
    if analysis_size < 3:
        raise ValueError(f"analysis_size must be >= 3, got {analysis_size}")
    a = resize_area(require_gray(i_n, "i_n"), analysis_size, analysis_size)
    b = resize_area(require_gray(i_prev, "i_prev"), analysis_size, analysis_size)
    return float(np.mean(np.abs(sobel_magnitude(a) - sobel_magnitude(b))))


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_pow2_last_axis(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    out = a[..., _bit_reverse_indices(n)].astype(np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp((-2j * np.pi / size) * np.arange(half))
        v = out.reshape(out.shape[:-1] + (n // size, size))
        even = v[..., :half]
        odd = v[..., half:] * tw
        s = even + odd
        d = even - odd
        v[..., :half] = s
        v[..., half:] = d
        size *= 2
    return out


def _dft_direct_last_axis(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    k = np.arange(n)
    w = np.exp((-2j * np.pi / n) * np.outer(k, k))
    return np.einsum("kn,...n->...k", w, a.astype(np.complex128))


def _transform_last_axis(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    if n >= 2 and (n & (n - 1)) == 0:
        return _fft_pow2_last_axis(a)
    return _dft_direct_last_axis(a)


def dft2(img: np.ndarray, shifted: bool = False) -> Spectrum:
    """Unnormalized forward 2-D DFT of a grayscale image.

    With shifted=True the quadrants are rolled so the DC coefficient sits at
    (H//2, W//2).
    """
    arr = require_gray(img)
    h, w = arr.shape
    coeffs = _transform_last_axis(arr.astype(np.complex128))
    coeffs = np.swapaxes(_transform_last_axis(np.swapaxes(coeffs, 0, 1)), 0, 1)
    if shifted:
        coeffs = np.roll(coeffs, (h // 2, w // 2), axis=(0, 1))
    return Spectrum(width=w, height=h, coeffs=coeffs, shifted=shifted)


def hf_ratio(img: np.ndarray, params: HFParams = HFParams()) -> float:
    """Share of spectral magnitude beyond normalized radius rho.

    ratio = sum_{bins outside the disc} |F| / (sum over all bins |F| + eps)
    computed on the shifted spectrum; always in [0, 1).
    """
    arr = require_gray(img)
    h, w = arr.shape
    mag = np.abs(dft2(arr, shifted=True).coeffs)
    cy, cx = h // 2, w // 2
    yy = np.arange(h)[:, None] - cy
    xx = np.arange(w)[None, :] - cx
    dist = np.sqrt(yy * yy + xx * xx) / (min(h, w) / 2.0)
    high = mag[dist > params.rho]
    return float(high.sum() / (mag.sum() + params.epsilon))
