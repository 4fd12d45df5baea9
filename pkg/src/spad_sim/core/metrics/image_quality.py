"""
Image-quality measures on the normalized [0, 1] view of an IntensityImage:
RMS contrast, gray-level entropy, variance-of-Laplacian sharpness,
multi-scale SSIM and PSNR.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy import signal, stats

from spad_sim.core.metrics.intensity_image import IntensityImage
from spad_sim.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)

LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def _require_pixels(img: IntensityImage) -> None:
    if img.samples.size == 0:
        raise DomainError("image is empty")


def _require_same_shape(a: IntensityImage, b: IntensityImage) -> None:
    if a.samples.shape != b.samples.shape:
        raise DimensionMismatchError(f"image shapes differ: {a.samples.shape} vs {b.samples.shape}")


def rms_contrast(img: IntensityImage) -> float:
    _require_pixels(img)
    return float(np.std(img.normalized))


def entropy(img: IntensityImage) -> float:
    """Base-2 Shannon entropy of the histogram over all 2^d gray levels."""
    _require_pixels(img)
    histogram = np.bincount(img.samples.ravel(), minlength=img.max_level + 1)
    return float(stats.entropy(histogram, base=2))


def sharpness(img: IntensityImage) -> float:
    if img.width < 3 or img.height < 3:
        raise DomainError(f"sharpness needs at least 3x3 pixels, got {img.width}x{img.height}")
    response = signal.convolve2d(img.normalized, LAPLACIAN, mode="valid")
    return float(np.var(response))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_terms(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> Tuple[float, float]:
    """Mean luminance and contrast-structure terms over valid window positions."""

    def blur(a):
        return signal.convolve2d(a, window, mode="valid")

    mu_x, mu_y = blur(x), blur(y)
    mu_xy = mu_x * mu_y
    var_x = blur(x * x) - mu_x * mu_x
    var_y = blur(y * y) - mu_y * mu_y
    cov = blur(x * y) - mu_xy

    luminance = (2.0 * mu_xy + SSIM_C1) / (mu_x * mu_x + mu_y * mu_y + SSIM_C1)
    cs = (2.0 * cov + SSIM_C2) / (var_x + var_y + SSIM_C2)
    return float(luminance.mean()), float(cs.mean())


def _downsample(a: np.ndarray) -> np.ndarray:
    h, w = (a.shape[0] // 2) * 2, (a.shape[1] // 2) * 2
    a = a[:h, :w]
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


def ms_ssim_scales(height: int, width: int) -> int:
    """Largest scale count (up to 5) whose coarsest level still fits one window."""
    smallest = min(height, width)
    if smallest < SSIM_WINDOW:
        raise DomainError(f"MS-SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {width}x{height}")
    scales = 1
    while scales < len(MS_SSIM_WEIGHTS) and smallest >= SSIM_WINDOW * 2**scales:
        scales += 1
    return scales


def ms_ssim_with_scales(test: IntensityImage, reference: IntensityImage) -> Tuple[float, int]:
    """
    Multi-scale SSIM and the number of scales used.

    Images too small for five dyadic levels use fewer, with the leading
    weights renormalized to sum to one. Negative contrast-structure terms are
    clamped to zero so the product stays in [0, 1].
    """
    _require_same_shape(test, reference)
    scales = ms_ssim_scales(test.height, test.width)
    weights = np.array(MS_SSIM_WEIGHTS[:scales])
    weights /= weights.sum()
    if scales < len(MS_SSIM_WEIGHTS):
        logger.debug(f"MS-SSIM on {test.width}x{test.height} uses {scales} scale(s)")

    window = gaussian_window()
    x, y = test.normalized, reference.normalized
    value = 1.0
    for level in range(scales):
        luminance, cs = _ssim_terms(x, y, window)
        cs = max(cs, 0.0)
        if level == scales - 1:
            value *= max(luminance * cs, 0.0) ** weights[level]
        else:
            value *= cs ** weights[level]
            x, y = _downsample(x), _downsample(y)
    return float(min(value, 1.0)), scales


def ms_ssim(test: IntensityImage, reference: IntensityImage) -> float:
    return ms_ssim_with_scales(test, reference)[0]


def psnr(test: IntensityImage, reference: IntensityImage) -> float:
    """PSNR in dB on the normalized views; identical images give +inf."""
    _require_same_shape(test, reference)
    _require_pixels(test)
    mse = float(np.mean((test.normalized - reference.normalized) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
