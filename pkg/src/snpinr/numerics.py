"""Array helpers shared by every other module.

Images are plain ``float64`` arrays of shape ``(H, W, C)`` with values in
``[0, 1]``; coordinate grids are ``(rows*cols, 2)`` arrays in ``[-1, 1]``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import ndimage

PSNR_CAP = 200.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a generator fully determined by ``(seed, stream)``.

    Distinct streams give statistically independent sequences, so concurrent
    jobs can draw without coordinating.
    """
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(seq))


def as_image(data, *, name: str = "image") -> np.ndarray:
    """Validate and return ``data`` as an ``(H, W, C)`` float64 image."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"{name} must have shape (H, W, 1|3), got {img.shape}")
    if img.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return img


def make_coord_grid(rows: int, cols: int) -> np.ndarray:
    """Coordinates of a ``rows x cols`` lattice, row-major, shape ``(rows*cols, 2)``.

    Column 0 runs along the rows (vertical axis), column 1 along the columns.
    Each axis is spaced linearly over ``[-1, 1]`` inclusive; an axis with a
    single sample sits at 0.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be >= 1, got ({rows}, {cols})")

    def axis(n):
        return np.zeros(1) if n == 1 else np.linspace(-1.0, 1.0, n)

    r, c = np.meshgrid(axis(rows), axis(cols), indexing="ij")
    return np.stack([r.ravel(), c.ravel()], axis=1)


def spectrum2d(img: np.ndarray) -> np.ndarray:
    """Per-channel 2-D DFT of an ``(H, W, C)`` array."""
    return np.fft.fft2(img, axes=(0, 1))


def inverse_spectrum2d(spec: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(spec, axes=(0, 1)).real


class RadialSpectrum(NamedTuple):
    radius: np.ndarray
    amplitude: np.ndarray
    log_amplitude: np.ndarray
    slope: float
    degenerate: bool


def radial_power_spectrum(img) -> RadialSpectrum:
    """Radially averaged amplitude spectrum and its log-log slope.

    Radii are integer bins of the frequency magnitude in cycles per image,
    excluding DC. The slope is a least-squares line through
    ``log(amplitude)`` against ``log(mean bin radius)`` for radii in
    ``[2, min(H, W) / 4]``. Multi-channel images are transformed per channel
    and the amplitudes averaged.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w = img.shape[:2]
    if h < 16 or w < 16:
        raise ValueError(f"image must be at least 16x16, got {h}x{w}")

    amp = np.abs(spectrum2d(img)).mean(axis=2)
    fy = np.fft.fftfreq(h) * h
    fx = np.fft.fftfreq(w) * w
    rad = np.hypot(fy[:, None], fx[None, :])
    bins = np.rint(rad).astype(int).ravel()
    nbins = bins.max() + 1
    counts = np.bincount(bins, minlength=nbins)
    amp_sum = np.bincount(bins, weights=amp.ravel(), minlength=nbins)
    rad_sum = np.bincount(bins, weights=rad.ravel(), minlength=nbins)

    keep = np.arange(nbins) >= 1
    keep &= counts > 0
    radius = rad_sum[keep] / counts[keep]
    amplitude = amp_sum[keep] / counts[keep]
    # DFT of a constant field leaks ~1e-13 into AC bins
    amplitude = np.where(amplitude < 1e-9 * h * w, 0.0, amplitude)
    with np.errstate(divide="ignore"):
        log_amp = np.log(amplitude)

    idx = np.nonzero(keep)[0]
    fit = (idx >= 2) & (idx <= min(h, w) / 4)
    if np.any(amplitude[fit] <= 0.0):
        return RadialSpectrum(radius, amplitude, log_amp, 0.0, True)
    slope = np.polyfit(np.log(radius[fit]), log_amp[fit], 1)[0]
    return RadialSpectrum(radius, amplitude, log_amp, float(slope), False)


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB, capped at ``PSNR_CAP`` for identical inputs."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(peak**2 / err), PSNR_CAP))


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    half = len(g) // 2
    out = ndimage.correlate1d(x, g, axis=0, mode="constant")
    out = ndimage.correlate1d(out, g, axis=1, mode="constant")
    return out[half : x.shape[0] - half, half : x.shape[1] - half]


def ssim(a, b, data_range: float = 1.0) -> float:
    """Mean structural similarity, per channel then averaged.

    Uses an 11x11 Gaussian window (sigma 1.5) over valid positions only,
    with K1 = 0.01 and K2 = 0.03.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    g = _gaussian_window()
    vals = []
    for ch in range(a.shape[2]):
        x, y = a[:, :, ch], b[:, :, ch]
        mx, my = _filter_valid(x, g), _filter_valid(y, g)
        sxx = _filter_valid(x * x, g) - mx * mx
        syy = _filter_valid(y * y, g) - my * my
        sxy = _filter_valid(x * y, g) - mx * my
        num = (2 * mx * my + c1) * (2 * sxy + c2)
        den = (mx * mx + my * my + c1) * (sxx + syy + c2)
        vals.append(np.mean(num / den))
    return float(np.mean(vals))
