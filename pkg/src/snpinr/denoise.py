"""Denoising with a coordinate network as the image prior."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SineMLP
from .numerics import as_image, psnr
from .training import FitConfig, FitTrace, fit

# additive read-out noise, intensity units (PSNR 24 dB on its own)
DEFAULT_READOUT_SIGMA = 0.063
DEFAULT_PHOTONS = 30.0


@dataclass(frozen=True)
class NoiseModel:
    photon_count: float = DEFAULT_PHOTONS
    readout_sigma: float = DEFAULT_READOUT_SIGMA

    def __post_init__(self):
        if not self.photon_count > 0:
            raise ValueError("photon_count must be positive")
        if self.readout_sigma < 0:
            raise ValueError("readout_sigma must be non-negative")


def add_poisson_noise(clean, model: NoiseModel, rng: np.random.Generator,
                      clip: bool = True) -> np.ndarray:
    """Shot noise at ``photon_count`` photons per unit intensity plus Gaussian read-out noise."""
    clean = as_image(clean, name="clean")
    k = rng.poisson(model.photon_count * clean)
    y = k / model.photon_count
    if model.readout_sigma > 0:
        y = y + rng.normal(0.0, model.readout_sigma, size=clean.shape)
    return np.clip(y, 0.0, 1.0) if clip else y


@dataclass
class DenoiseResult:
    best_psnr: float
    best_iteration: int
    trace: FitTrace  # loss against the noisy target, psnr against the clean image
    denoised: np.ndarray

    def summary(self) -> dict:
        return {"best_psnr": self.best_psnr, "best_iteration": self.best_iteration,
                "final_psnr": self.trace.psnr[-1]}


def denoise_fit(init: SineMLP, noisy, clean, config: FitConfig | None = None) -> DenoiseResult:
    """Fit the noisy image and report the peak PSNR against the clean one.

    The clean image is only used as an oracle for choosing the stopping
    iteration; ties go to the earliest iteration.
    """
    noisy = as_image(noisy, name="noisy")
    clean = as_image(clean, name="clean")
    if noisy.shape != clean.shape:
        raise ValueError(f"shape mismatch: {noisy.shape} vs {clean.shape}")
    config = config or FitConfig()
    trace = FitTrace()
    best = {"psnr": -np.inf, "it": 0, "img": None}
    y = noisy.reshape(-1, noisy.shape[2])

    def on_record(it, pred):
        img = pred.reshape(clean.shape)
        p = psnr(img, clean)
        trace.add(it, float(np.mean((pred - y) ** 2)), p)
        if p > best["psnr"]:
            best.update(psnr=p, it=it, img=img.copy())

    fit(init, noisy, config, callback=on_record)
    return DenoiseResult(best["psnr"], best["it"], trace, best["img"])


@dataclass
class TradeoffRow:
    method: str
    fit_psnr: float
    denoise_psnr: float
    n_images: int


def tradeoff_report(fit_psnrs: dict[str, dict[str, float]],
                    denoise_psnrs: dict[str, dict[str, float]]) -> list[TradeoffRow]:
    """One row per initialization: mean fitting PSNR and mean best denoising PSNR.

    Both arguments map ``method -> {image_id: psnr}`` and must cover the same
    methods and the same image ids.
    """
    if set(fit_psnrs) != set(denoise_psnrs):
        raise ValueError("fit and denoise results cover different methods")
    ids = None
    rows = []
    for method in fit_psnrs:
        f, d = fit_psnrs[method], denoise_psnrs[method]
        if set(f) != set(d) or (ids is not None and set(f) != ids):
            raise ValueError(f"image sets differ for method {method!r}")
        ids = set(f)
        keys = sorted(f)
        rows.append(TradeoffRow(method, float(np.mean([f[k] for k in keys])),
                                float(np.mean([d[k] for k in keys])), len(keys)))
    return rows


def best_methods(rows: list[TradeoffRow]) -> tuple[str, str]:
    """``(best fitter, best denoiser)``."""
    return (max(rows, key=lambda r: r.fit_psnr).method,
            max(rows, key=lambda r: r.denoise_psnr).method)
