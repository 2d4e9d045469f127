"""Procedural stand-ins for natural test photos and videos.

A pseudo-photo is a smooth two-color gradient, overlaid with a handful of
soft-edged occluding shapes, a faint 1/f^2 texture, and rows of small dark
"glyph" rectangles. Videos translate such a scene across frames.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .noise import NoiseSpec, gen_dead_leaves, spectrum_field
from .numerics import make_rng

PHOTO_STREAM_BASE = 10_000
VIDEO_STREAM_BASE = 20_000


def _scene(height: int, width: int, channels: int, rng: np.random.Generator,
           margin: int = 0) -> np.ndarray:
    H, W = height + 2 * margin, width + 2 * margin
    yy, xx = np.meshgrid(np.linspace(0, 1, H), np.linspace(0, 1, W), indexing="ij")
    theta = rng.uniform(0, 2 * np.pi)
    ramp = (np.cos(theta) * yy + np.sin(theta) * xx)
    ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)
    c0, c1 = rng.uniform(0.15, 0.85, size=(2, channels))
    img = c0 + ramp[..., None] * (c1 - c0)

    # occluders: a sparse dead-leaves layer composited over the gradient
    leaves = gen_dead_leaves(
        NoiseSpec(family="dead_leaves_mixed", height=H, width=W, channels=channels,
                  seed=int(rng.integers(2**31))),
        variant="mixed", shape_count=int(rng.integers(8, 16)), size_exponent=2.0,
        size_range=(max(H, W) / 16, max(H, W) / 4))
    mask = np.any(leaves != 0.5, axis=2).astype(float)
    mask = ndimage.gaussian_filter(mask, 0.8)[..., None]
    leaves = ndimage.gaussian_filter(leaves, (0.8, 0.8, 0))
    img = (1 - mask) * img + mask * leaves

    tex = spectrum_field(H, W, 2.0, rng)
    tex /= max(np.abs(tex).max(), 1e-12)
    img = img + 0.08 * tex[..., None]

    # glyph rows
    n_rows = int(rng.integers(1, 3))
    for _ in range(n_rows):
        y0 = int(rng.integers(2, H - 6))
        x = int(rng.integers(2, W // 3))
        ink = rng.uniform(0.0, 0.15, size=channels)
        while x < W - 4:
            gw, gh = int(rng.integers(1, 3)), int(rng.integers(3, 6))
            img[y0:y0 + gh, x:x + gw] = ink
            x += gw + int(rng.integers(1, 3))
            if rng.uniform() < 0.15:
                x += 3
    return np.clip(img, 0.0, 1.0)


def pseudo_photo(height: int = 64, width: int = 64, channels: int = 3, seed: int = 0,
                 index: int = 0) -> np.ndarray:
    rng = make_rng(seed, PHOTO_STREAM_BASE + index)
    return _scene(height, width, channels, rng)


def pseudo_photos(n: int, height: int = 64, width: int = 64, channels: int = 3,
                  seed: int = 0) -> list[np.ndarray]:
    return [pseudo_photo(height, width, channels, seed, i) for i in range(n)]


def moving_video(frames: int = 8, height: int = 64, width: int = 64, channels: int = 3,
                 seed: int = 0, index: int = 0, speed: float = 2.0) -> np.ndarray:
    """``(T, H, W, C)`` clip of a pseudo-photo panning along a random direction."""
    rng = make_rng(seed, VIDEO_STREAM_BASE + index)
    margin = int(np.ceil(speed * frames)) + 2
    scene = _scene(height, width, channels, rng, margin=margin)
    ang = rng.uniform(0, 2 * np.pi)
    vy, vx = speed * np.sin(ang), speed * np.cos(ang)
    out = []
    for t in range(frames):
        dy = margin + vy * (t - (frames - 1) / 2)
        dx = margin + vx * (t - (frames - 1) / 2)
        shifted = ndimage.shift(scene, (-(dy - margin), -(dx - margin), 0), order=1,
                                mode="nearest")
        out.append(shifted[margin:margin + height, margin:margin + width])
    return np.clip(np.stack(out), 0.0, 1.0)
