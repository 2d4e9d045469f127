"""PNG reading and writing for ``[0, 1]`` float images."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .numerics import as_image


class UnsupportedImage(ValueError):
    pass


def load_image(path) -> np.ndarray:
    """Read an 8- or 16-bit grayscale or RGB PNG as ``(H, W, C)`` in ``[0, 1]``."""
    path = Path(path)
    try:
        im = Image.open(path)
    except OSError as exc:
        raise UnsupportedImage(f"{path}: {exc}") from None
    with im:
        if im.format != "PNG":
            raise UnsupportedImage(f"{path}: only PNG is supported, got {im.format}")
        mode = im.mode
        if mode in ("L", "RGB"):
            arr = np.asarray(im, dtype=np.float64) / 255.0
        elif mode in ("I;16", "I;16B", "I;16L", "I"):
            raw = np.asarray(im)
            if raw.max(initial=0) > 65535 or raw.min(initial=0) < 0:
                raise UnsupportedImage(f"{path}: 32-bit integer PNGs are not supported")
            arr = raw.astype(np.float64) / 65535.0
        else:
            raise UnsupportedImage(f"{path}: unsupported PNG mode {mode!r} "
                                   "(need 1 or 3 channels, 8 or 16 bit)")
    return as_image(arr)


def save_image(img, path, bits: int = 8) -> None:
    """Quantize with round-to-nearest and write a PNG."""
    img = as_image(img)
    if bits == 8:
        q = np.rint(img * 255.0).astype(np.uint8)
        im = Image.fromarray(q[:, :, 0], "L") if q.shape[2] == 1 else Image.fromarray(q, "RGB")
    elif bits == 16:
        if img.shape[2] != 1:
            raise UnsupportedImage("16-bit output is only supported for grayscale images")
        q = np.rint(img[:, :, 0] * 65535.0).astype(np.uint16)
        im = Image.fromarray(q)  # uint16 maps to mode I;16
    else:
        raise ValueError("bits must be 8 or 16")
    # fixed settings keep files byte-identical across runs
    im.save(path, format="PNG", optimize=False, compress_level=6)


def load_video(directory) -> np.ndarray:
    """Stack numbered PNG frames (``frame_000.png``, ``001.png``, ...) in numeric order."""
    directory = Path(directory)
    frames = []
    for p in directory.glob("*.png"):
        m = re.search(r"(\d+)\.png$", p.name)
        if m:
            frames.append((int(m.group(1)), p))
    if not frames:
        raise UnsupportedImage(f"{directory}: no numbered PNG frames found")
    frames.sort()
    imgs = [load_image(p) for _, p in frames]
    if any(i.shape != imgs[0].shape for i in imgs):
        raise UnsupportedImage(f"{directory}: frames differ in shape")
    return np.stack(imgs)


def save_video(video, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t, frame in enumerate(video):
        save_image(frame, directory / f"frame_{t:03d}.png")
