"""Procedural noise images used as pretraining corpora.

Unstructured families draw every pixel independently (``uniform``,
``gaussian``). Structured families carry natural-image statistics: random
phase fields with a power-law amplitude spectrum (``spectrum``) and
occlusion ("dead leaves") composites of opaque shapes.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .numerics import make_rng

UNIFORM = "uniform"
GAUSSIAN = "gaussian"
SPECTRUM = "spectrum"
DL_SQUARES = "dead_leaves_squares"
DL_ORIENTED = "dead_leaves_oriented"
DL_MIXED = "dead_leaves_mixed"

FAMILIES = (UNIFORM, GAUSSIAN, SPECTRUM, DL_SQUARES, DL_ORIENTED, DL_MIXED)
DEAD_LEAVES = {DL_SQUARES: "squares", DL_ORIENTED: "oriented", DL_MIXED: "mixed"}

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class NoiseSpec:
    family: str = UNIFORM
    height: int = 64
    width: int = 64
    channels: int = 3
    seed: int = 0
    gaussian_mean: float = 0.5
    gaussian_std: float = 0.2
    alpha_range: tuple[float, float] = (0.5, 3.5)
    shape_count: int = 500
    size_exponent: float = 3.0
    # radius range in pixels (half-side for squares)
    size_range: tuple[float, float] = (4.0, 64.0)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.height < 16 or self.width < 16:
            raise ValueError("noise images must be at least 16x16")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        # tuples survive a JSON round trip as lists
        object.__setattr__(self, "alpha_range", tuple(float(a) for a in self.alpha_range))
        object.__setattr__(self, "size_range", tuple(float(s) for s in self.size_range))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)


def gen_uniform(spec: NoiseSpec, stream: int = 0) -> np.ndarray:
    return make_rng(spec.seed, stream).uniform(0.0, 1.0, size=spec.shape)


def gen_gaussian(spec: NoiseSpec, stream: int = 0) -> np.ndarray:
    rng = make_rng(spec.seed, stream)
    x = rng.normal(spec.gaussian_mean, spec.gaussian_std, size=spec.shape)
    return np.clip(x, 0.0, 1.0)


def spectrum_field(height: int, width: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean real field whose amplitude spectrum is exactly ``|f|^-alpha``.

    Phases are taken from the DFT of white Gaussian noise, which makes them
    uniform on ``[0, 2pi)`` and Hermitian-symmetric.
    """
    fy = np.fft.fftfreq(height) * height
    fx = np.fft.fftfreq(width) * width
    rad = np.hypot(fy[:, None], fx[None, :])
    amp = np.zeros_like(rad)
    nz = rad > 0
    amp[nz] = rad[nz] ** (-alpha)
    phase = np.angle(np.fft.fft2(rng.standard_normal((height, width))))
    return np.fft.ifft2(amp * np.exp(1j * phase)).real


def _normalize(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi - lo <= 0:
        return np.full_like(x, 0.5)
    out = (x - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)


def gen_spectrum(spec: NoiseSpec, stream: int = 0, alpha_range=None) -> np.ndarray:
    lo, hi = alpha_range if alpha_range is not None else spec.alpha_range
    if not 0.0 <= lo <= hi <= 4.0:
        raise ValueError(f"alpha range must satisfy 0 <= lo <= hi <= 4, got ({lo}, {hi})")
    rng = make_rng(spec.seed, stream)
    alpha = rng.uniform(lo, hi)
    chans = [_normalize(spectrum_field(spec.height, spec.width, alpha, rng))
             for _ in range(spec.channels)]
    return np.stack(chans, axis=2)


def sample_power_law(rng: np.random.Generator, exponent: float, lo: float, hi: float,
                     size=None):
    """Draw from the density proportional to ``r**-exponent`` on ``[lo, hi]``."""
    u = rng.uniform(size=size)
    if hi == lo:
        return lo + 0.0 * u
    if abs(exponent - 1.0) < 1e-12:
        return lo * (hi / lo) ** u
    k = 1.0 - exponent
    return (lo**k + u * (hi**k - lo**k)) ** (1.0 / k)


def gen_dead_leaves(spec: NoiseSpec, stream: int = 0, variant: str | None = None,
                    shape_count: int | None = None, size_exponent: float | None = None,
                    size_range=None) -> np.ndarray:
    """Back-to-front occlusion composite of opaque squares / rotated squares / discs.

    Each later shape is painted over the earlier ones. Radii follow a power
    law, centers are uniform over the canvas and colors are uniform per
    channel on a 0.5 gray background.
    """
    variant = variant or DEAD_LEAVES.get(spec.family, "squares")
    if variant not in ("squares", "oriented", "mixed"):
        raise ValueError(f"unknown dead-leaves variant {variant!r}")
    count = spec.shape_count if shape_count is None else shape_count
    expo = spec.size_exponent if size_exponent is None else size_exponent
    rmin, rmax = spec.size_range if size_range is None else size_range
    if count < 1:
        raise ValueError("shape_count must be >= 1")
    if not 0 < rmin <= rmax:
        raise ValueError(f"invalid size range ({rmin}, {rmax})")

    h, w, c = spec.shape
    rng = make_rng(spec.seed, stream)
    canvas = np.full((h, w, c), 0.5)
    ys = np.arange(h) + 0.5
    xs = np.arange(w) + 0.5
    for _ in range(count):
        r = float(sample_power_law(rng, expo, rmin, rmax))
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        color = rng.uniform(0.0, 1.0, size=c)
        if variant == "mixed":
            kind = ("square", "oriented", "disc")[rng.integers(3)]
        else:
            kind = "square" if variant == "squares" else "oriented"
        theta = rng.uniform(0.0, math.pi / 2) if kind == "oriented" else 0.0

        reach = r * math.sqrt(2.0) if kind == "oriented" else r
        y0, y1 = max(0, int(cy - reach)), min(h, int(math.ceil(cy + reach)) + 1)
        x0, x1 = max(0, int(cx - reach)), min(w, int(math.ceil(cx + reach)) + 1)
        if y0 >= y1 or x0 >= x1:
            continue
        dy = ys[y0:y1, None] - cy
        dx = xs[None, x0:x1] - cx
        if kind == "square":
            mask = (np.abs(dy) <= r) & (np.abs(dx) <= r)
        elif kind == "oriented":
            ct, st = math.cos(theta), math.sin(theta)
            u = ct * dx + st * dy
            v = -st * dx + ct * dy
            mask = (np.abs(u) <= r) & (np.abs(v) <= r)
        else:
            mask = dx * dx + dy * dy <= r * r
        canvas[y0:y1, x0:x1][mask] = color
    return canvas


GENERATORS = {
    UNIFORM: gen_uniform,
    GAUSSIAN: gen_gaussian,
    SPECTRUM: gen_spectrum,
    DL_SQUARES: gen_dead_leaves,
    DL_ORIENTED: gen_dead_leaves,
    DL_MIXED: gen_dead_leaves,
}


def generate(spec: NoiseSpec, stream: int = 0) -> np.ndarray:
    return GENERATORS[spec.family](spec, stream)


# --- corpora ------------------------------------------------------------------

@dataclass
class Manifest:
    spec: NoiseSpec
    streams: list[int]
    files: list[str] = field(default_factory=list)
    version: int = MANIFEST_VERSION

    def to_dict(self) -> dict:
        return {"version": self.version, "spec": asdict(self.spec),
                "streams": list(self.streams), "files": list(self.files)}

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        if d.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {d.get('version')!r}")
        return cls(NoiseSpec(**d["spec"]), list(d["streams"]), list(d.get("files", [])))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path) -> "Manifest":
        return cls.from_dict(json.loads(Path(path).read_text()))


def gen_corpus(spec: NoiseSpec, n: int) -> tuple[list[np.ndarray], Manifest]:
    """``n`` images from streams ``1..n`` of ``spec.seed``."""
    if n < 1:
        raise ValueError("corpus size must be >= 1")
    streams = list(range(1, n + 1))
    images = [generate(spec, s) for s in streams]
    return images, Manifest(spec, streams)


def regenerate(manifest: Manifest) -> list[np.ndarray]:
    return [generate(manifest.spec, s) for s in manifest.streams]
