"""Experiment pipelines: pretraining, fitting, denoising, video, NTK and landscapes.

Every random draw is derived from ``(master seed, fixed stream id)`` so results
do not depend on job scheduling. Methods are named ``"siren"`` (random
init) or ``"snp:<noise family>"``.
"""

from __future__ import annotations

import json
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import model as M
from .analysis import compute_ntk, loss_landscape, ntk_energy_curve
from .config import ExperimentConfig
from .datasets import moving_video, pseudo_photos
from .denoise import NoiseModel, add_poisson_noise, best_methods, denoise_fit, tradeoff_report
from .imageio import load_image, load_video, save_image, save_video
from .noise import NoiseSpec, gen_corpus
from .numerics import make_coord_grid, make_rng, psnr, ssim
from .training import FitConfig, FitTrace, SnpModel, fit, make_test_model, predict_image, pretrain
from .video import (build_resfield, denoise_video, fit_video, mean_final_psnr,
                    shared_from_snp)

log = logging.getLogger(__name__)

# stream ids below are offsets into the master seed's stream space
S_PRETRAIN_INIT = 1
S_CORPUS = 2
S_IMAGE_INIT = 100
S_NOISE = 200
S_VIDEO_INIT = 300
S_VIDEO_NOISE = 400
S_NTK_INIT = 500
S_LANDSCAPE = 600

SENTINEL = "INCOMPLETE"


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def parse_method(method: str) -> str | None:
    """Noise family of an SNP method, or None for random initialization."""
    if method == "siren":
        return None
    if method.startswith("snp:"):
        return method[4:]
    raise ValueError(f"unknown method {method!r}")


# --- reports -------------------------------------------------------------------

@dataclass
class Row:
    method: str
    image: str
    psnr: float
    ssim: float | None = None
    iterations: int = 0
    best_iteration: int | None = None


@dataclass
class RunReport:
    kind: str
    rows: list[Row] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def methods(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def values(self, method: str, attr: str = "psnr") -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.rows if r.method == method], dtype=float)

    def aggregates(self) -> dict:
        out = {}
        for m in self.methods():
            agg = {"n": int(len(self.values(m)))}
            for attr in ("psnr", "ssim", "best_iteration"):
                v = [getattr(r, attr) for r in self.rows if r.method == m]
                if v and all(x is not None for x in v):
                    agg[f"{attr}_mean"] = float(np.mean(v))
                    agg[f"{attr}_std"] = float(np.std(v))
            out[m] = agg
        return out

    def mean(self, method: str, attr: str = "psnr") -> float:
        return float(np.mean(self.values(method, attr)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rows": [asdict(r) for r in self.rows],
                "aggregates": self.aggregates(), "extra": self.extra}

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(d["kind"], [Row(**r) for r in d["rows"]], d.get("extra", {}))

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def table(self) -> str:
        lines = [f"{'method':<24} {'n':>3} {'psnr':>9} {'std':>7}"]
        for m, a in self.aggregates().items():
            lines.append(f"{m:<24} {a['n']:>3} {a['psnr_mean']:>9.3f} {a['psnr_std']:>7.3f}")
        return "\n".join(lines)


# --- plot data -------------------------------------------------------------------

FIT_CURVE_HEADER = "iteration,psnr,method"
NTK_CURVE_HEADER = "percentile,energy,method"


def emit_plotdata(curves: dict[str, tuple], path, header: str = FIT_CURVE_HEADER) -> None:
    """Write ``{method: (x, y)}`` curves as one long-format CSV."""
    if not curves:
        raise ValueError("no curves to write")
    lines = [header]
    for method, (xs, ys) in curves.items():
        for x, y in zip(xs, ys):
            xs_ = str(int(x)) if float(x).is_integer() else repr(float(x))
            lines.append(f"{xs_},{float(y)!r},{method}")
    Path(path).write_text("\n".join(lines) + "\n")


def mean_curve(traces) -> tuple[list[int], list[float]]:
    its = traces[0].iteration
    return its, list(np.mean([t.psnr for t in traces], axis=0))


# --- shared building blocks ---------------------------------------------------------

def image_layout(cfg: ExperimentConfig, channels: int | None = None,
                 depth: int | None = None) -> tuple[int, ...]:
    ch = channels if channels is not None else cfg.data.channels
    return M.default_layout(2, ch, depth or cfg.model.depth, cfg.model.hidden)


def activation(cfg: ExperimentConfig) -> M.Activation:
    return M.Activation(cfg.model.activation, cfg.model.omega)


def noise_spec(cfg: ExperimentConfig, family: str | None = None, height=None, width=None,
               channels=None) -> NoiseSpec:
    n = cfg.noise
    return NoiseSpec(family=family or n.family, height=height or n.height, width=width or n.width,
                     channels=channels or n.channels, seed=cfg.experiment.seed,
                     gaussian_mean=n.gaussian_mean, gaussian_std=n.gaussian_std,
                     alpha_range=tuple(n.alpha_range), shape_count=n.shape_count,
                     size_exponent=n.size_exponent, size_range=tuple(n.size_range))


def pretrain_snp(cfg: ExperimentConfig, family: str, layout, n: int | None = None,
                 height: int | None = None, width: int | None = None,
                 iterations: int | None = None):
    """Pretrain an SNP model on ``n`` noise images of ``family`` sized to the targets."""
    channels = layout[-1]
    spec = noise_spec(cfg, family, height or cfg.data.height, width or cfg.data.width, channels)
    corpus, manifest = gen_corpus(spec, n or cfg.noise.n)
    pc = FitConfig(iterations=iterations or cfg.pretrain.iterations, lr=cfg.pretrain.lr,
                   record_every=cfg.pretrain.record_every)
    model, trace = pretrain(corpus, layout, activation(cfg), pc,
                            make_rng(cfg.experiment.seed, S_PRETRAIN_INIT))
    return model, trace, manifest


class PretrainCache:
    """Memoizes pretrained SNP models by their defining parameters."""

    def __init__(self, directory=None):
        self.models: dict = {}
        self.traces: dict = {}
        self.directory = Path(directory) if directory else None

    @staticmethod
    def _key(cfg, family, layout, n, height, width, iterations):
        return (family, tuple(layout), n or cfg.noise.n, height or cfg.data.height,
               width or cfg.data.width, iterations or cfg.pretrain.iterations, cfg.pretrain.lr,
               cfg.experiment.seed, cfg.model.activation, cfg.model.omega,
               json.dumps(asdict(cfg.noise), sort_keys=True))

    def get(self, cfg: ExperimentConfig, family: str, layout, n=None, height=None, width=None,
            iterations=None) -> SnpModel:
        key = self._key(cfg, family, layout, n, height, width, iterations)
        if key not in self.models:
            model, trace, manifest = pretrain_snp(cfg, family, layout, n, height, width, iterations)
            self.models[key] = model
            self.traces[key] = trace
            if self.directory is not None:
                self.directory.mkdir(parents=True, exist_ok=True)
                stem = f"snp_{family}_n{key[2]}_{'x'.join(map(str, layout))}"
                ckpt.save_checkpoint(model, self.directory / f"{stem}.ckpt", cfg.experiment.seed)
                (self.directory / f"{stem}_trace.csv").write_text(trace.to_csv())
                manifest.write(self.directory / f"{stem}_manifest.json")
        return self.models[key]

    def trace(self, cfg: ExperimentConfig, family: str, layout, n=None, height=None, width=None,
              iterations=None) -> FitTrace:
        """Pretraining trace of a cached model, pretraining it first if needed."""
        self.get(cfg, family, layout, n, height, width, iterations)
        return self.traces[self._key(cfg, family, layout, n, height, width, iterations)]


def test_images(cfg: ExperimentConfig) -> tuple[list[str], list[np.ndarray]]:
    if cfg.data.images:
        imgs = [load_image(p) for p in cfg.data.images]
        return [Path(p).stem for p in cfg.data.images], imgs
    imgs = pseudo_photos(cfg.data.n_images, cfg.data.height, cfg.data.width, cfg.data.channels,
                         seed=cfg.experiment.seed)
    return [f"photo{i:02d}" for i in range(len(imgs))], imgs


def make_init(method: str, cfg: ExperimentConfig, index: int, layout, cache: PretrainCache,
              **pretrain_kw) -> M.SineMLP:
    family = parse_method(method)
    rng = make_rng(cfg.experiment.seed, S_IMAGE_INIT + index)
    if family is None:
        return M.init_siren(layout, activation(cfg), rng)
    return make_test_model(cache.get(cfg, family, layout, **pretrain_kw), rng)


def _pool_map(fn, jobs_args, jobs: int):
    if jobs <= 1 or len(jobs_args) <= 1:
        return [fn(*a) for a in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*jobs_args)))


def _fit_job(init, img, fc):
    params, trace = fit(init, img, fc)
    return trace, predict_image(params, img.shape)


def _denoise_job(init, noisy, clean, fc):
    return denoise_fit(init, noisy, clean, fc)


# --- suites -------------------------------------------------------------------------

@dataclass
class FitSuite:
    report: RunReport
    traces: dict  # method -> list[FitTrace]
    outputs: dict  # method -> list of final images


def fit_suite(cfg: ExperimentConfig, methods=None, cache: PretrainCache | None = None,
              depth: int | None = None, n_pretrain: int | None = None) -> FitSuite:
    methods = methods or cfg.experiment.methods
    cache = cache or PretrainCache()
    ids, imgs = test_images(cfg)
    layout = image_layout(cfg, imgs[0].shape[2], depth)
    fc = FitConfig(iterations=cfg.fit.iterations, lr=cfg.fit.lr,
                   record_every=cfg.fit.record_every)
    report = RunReport("fit")
    traces, outputs = {}, {}
    for m in methods:
        inits = [make_init(m, cfg, i, layout, cache, n=n_pretrain) for i in range(len(imgs))]
        res = _pool_map(_fit_job, [(inits[i], imgs[i], fc) for i in range(len(imgs))],
                        cfg.experiment.jobs)
        traces[m] = [r[0] for r in res]
        outputs[m] = [r[1] for r in res]
        for i, (trace, out) in enumerate(res):
            s = ssim(out, imgs[i]) if cfg.fit.eval_ssim else None
            report.rows.append(Row(m, ids[i], trace.final_psnr, s, cfg.fit.iterations))
            log.info("fit %s %s: %.2f dB", m, ids[i], trace.final_psnr)
    return FitSuite(report, traces, outputs)


@dataclass
class DenoiseSuite:
    report: RunReport
    results: dict  # method -> list[DenoiseResult]
    noisy: list
    input_psnr: list


def noisy_images(cfg: ExperimentConfig, imgs):
    nm = NoiseModel(cfg.denoise.photon_count, cfg.denoise.readout_sigma)
    return [add_poisson_noise(img, nm, make_rng(cfg.experiment.seed, S_NOISE + i))
            for i, img in enumerate(imgs)]


def denoise_suite(cfg: ExperimentConfig, methods=None, cache: PretrainCache | None = None
                  ) -> DenoiseSuite:
    methods = methods or cfg.experiment.methods
    cache = cache or PretrainCache()
    ids, imgs = test_images(cfg)
    noisy = noisy_images(cfg, imgs)
    layout = image_layout(cfg, imgs[0].shape[2])
    fc = FitConfig(iterations=cfg.denoise.iterations, lr=cfg.fit.lr,
                   record_every=cfg.denoise.record_every)
    report = RunReport("denoise")
    results = {}
    for m in methods:
        inits = [make_init(m, cfg, i, layout, cache) for i in range(len(imgs))]
        results[m] = _pool_map(_denoise_job,
                               [(inits[i], noisy[i], imgs[i], fc) for i in range(len(imgs))],
                               cfg.experiment.jobs)
        for i, r in enumerate(results[m]):
            report.rows.append(Row(m, ids[i], r.best_psnr, None, cfg.denoise.iterations,
                                   r.best_iteration))
            log.info("denoise %s %s: %.2f dB @ %d", m, ids[i], r.best_psnr, r.best_iteration)
    inp = [psnr(n, c) for n, c in zip(noisy, imgs)]
    report.extra["input_psnr"] = inp
    report.extra["noise_model"] = asdict(NoiseModel(cfg.denoise.photon_count,
                                                    cfg.denoise.readout_sigma))
    return DenoiseSuite(report, results, noisy, inp)


def test_videos(cfg: ExperimentConfig) -> tuple[list[str], list[np.ndarray]]:
    v = cfg.video
    if v.videos:
        return [Path(p).name for p in v.videos], [load_video(p) for p in v.videos]
    vids = [moving_video(v.frames, v.height, v.width, v.channels, cfg.experiment.seed, i, v.speed)
            for i in range(v.n_videos)]
    return [f"video{i:02d}" for i in range(len(vids))], vids


def video_layout(cfg: ExperimentConfig, channels: int) -> tuple[int, ...]:
    v = cfg.video
    return (3 if v.use_time_input else 2,) + (v.hidden,) * v.hidden_layers + (channels,)


def video_init(method: str, cfg: ExperimentConfig, index: int, video: np.ndarray,
               cache: PretrainCache):
    v = cfg.video
    T, h, w, c = video.shape
    rng = make_rng(cfg.experiment.seed, S_VIDEO_INIT + index)
    family = parse_method(method)
    if family is None:
        shared = M.init_siren(video_layout(cfg, c), activation(cfg), rng)
    else:
        img_layout = (2,) + (v.hidden,) * v.hidden_layers + (c,)
        snp = cache.get(cfg, family, img_layout, height=h, width=w)
        shared = shared_from_snp(snp, c, rng, v.use_time_input)
    return build_resfield(shared, v.rank, T, v.sigma, rng, v.use_time_input)


def _video_fit_job(params, video, fc):
    _, traces = fit_video(params, video, fc)
    return traces


def _video_denoise_job(params, noisy, clean, fc):
    return denoise_video(params, noisy, clean, fc)


def video_config(cfg: ExperimentConfig, denoise: bool = False) -> FitConfig:
    # early stopping needs the finer denoise cadence to locate the peak
    v = cfg.video
    every = cfg.denoise.record_every if denoise else v.record_every
    return FitConfig(iterations=v.iterations, lr=v.lr, record_every=every, schedule="cosine")


def video_fit_suite(cfg: ExperimentConfig, methods=None, cache=None):
    methods = methods or cfg.experiment.methods
    cache = cache or PretrainCache()
    ids, vids = test_videos(cfg)
    report = RunReport("video-fit")
    traces = {}
    for m in methods:
        inits = [video_init(m, cfg, i, vid, cache) for i, vid in enumerate(vids)]
        traces[m] = _pool_map(_video_fit_job, [(inits[i], vids[i], video_config(cfg))
                                               for i in range(len(vids))], cfg.experiment.jobs)
        for i, tr in enumerate(traces[m]):
            report.rows.append(Row(m, ids[i], mean_final_psnr(tr), None, cfg.video.iterations))
            log.info("video-fit %s %s: %.2f dB", m, ids[i], mean_final_psnr(tr))
    return report, traces


def video_denoise_suite(cfg: ExperimentConfig, methods=None, cache=None):
    methods = methods or cfg.experiment.methods
    cache = cache or PretrainCache()
    ids, vids = test_videos(cfg)
    nm = NoiseModel(cfg.denoise.photon_count, cfg.denoise.readout_sigma)
    noisy = [np.stack([add_poisson_noise(f, nm, make_rng(cfg.experiment.seed,
                                                         S_VIDEO_NOISE + 100 * i + t))
                       for t, f in enumerate(vid)]) for i, vid in enumerate(vids)]
    report = RunReport("video-denoise")
    results = {}
    for m in methods:
        inits = [video_init(m, cfg, i, vid, cache) for i, vid in enumerate(vids)]
        results[m] = _pool_map(_video_denoise_job,
                               [(inits[i], noisy[i], vids[i], video_config(cfg, True))
                                for i in range(len(vids))], cfg.experiment.jobs)
        for i, r in enumerate(results[m]):
            report.rows.append(Row(m, ids[i], r.best_psnr, None, cfg.video.iterations,
                                   r.best_iteration))
    return report, results, noisy


def ntk_suite(cfg: ExperimentConfig, methods=None, cache=None):
    """Energy-vs-percentile curves on small grayscale targets, one kernel per method."""
    methods = methods or cfg.experiment.methods
    cache = cache or PretrainCache()
    a = cfg.analysis
    layout = M.default_layout(2, 1, a.depth, a.hidden)
    targets = pseudo_photos(a.n_targets, a.size, a.size, 1, seed=cfg.experiment.seed)
    coords = make_coord_grid(a.size, a.size)
    report = RunReport("ntk")
    curves, spectra = {}, {}
    for m in methods:
        family = parse_method(m)
        rng = make_rng(cfg.experiment.seed, S_NTK_INIT)
        if family is None:
            params = M.init_siren(layout, activation(cfg), rng)
        else:
            snp = cache.get(cfg, family, layout, height=a.size, width=a.size,
                            iterations=a.pretrain_iterations)
            params = make_test_model(snp, rng)
        K = compute_ntk(params, coords)
        specs = [ntk_energy_curve(K, t.ravel()) for t in targets]
        spectra[m] = specs
        pct = np.arange(100, -1, -1, dtype=float)
        curves[m] = (pct, np.mean([s.curve(pct)[1] for s in specs], axis=0))
        for i, s in enumerate(specs):
            report.rows.append(Row(m, f"target{i:02d}", s.energy_at_percentile(90.0)))
    report.extra["metric"] = "energy captured above the 90th eigenvalue percentile"
    return report, curves, spectra


def landscape_suite(cfg: ExperimentConfig, methods=None, cache=None):
    """Fit each method briefly on the first test image, then slice its loss surface."""
    methods = methods or cfg.experiment.methods
    cache = cache or PretrainCache()
    a = cfg.analysis
    ids, imgs = test_images(cfg)
    layout = image_layout(cfg, imgs[0].shape[2])
    slices = {}
    for m in methods:
        init = make_init(m, cfg, 0, layout, cache)
        params, _ = fit(init, imgs[0], FitConfig(iterations=a.landscape_fit_iterations,
                                                 lr=cfg.fit.lr, record_every=a.landscape_fit_iterations))
        slices[m] = loss_landscape(params, imgs[0], a.resolution, a.span,
                                   make_rng(cfg.experiment.seed, S_LANDSCAPE))
    return slices


# --- orchestration ------------------------------------------------------------------

def _write_traces(out: Path, name: str, traces: dict, ids) -> None:
    for m, trs in traces.items():
        d = out / "traces" / name / m.replace(":", "_")
        d.mkdir(parents=True, exist_ok=True)
        for i, tr in zip(ids, trs):
            (d / f"{i}.csv").write_text(tr.to_csv())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_experiment(cfg: ExperimentConfig, out) -> RunReport | None:
    """Run the configured pipeline and write all artifacts under ``out``.

    A ``INCOMPLETE`` sentinel file marks the directory until the run finishes.
    """
    out = Path(out)
    if out.exists():
        shutil.rmtree(out)
    out.mkdir(parents=True)
    (out / SENTINEL).write_text(f"{cfg.kind}\n")
    (out / "config.resolved.cfg").write_text(cfg.dumps())
    kind = cfg.kind
    cache = PretrainCache(out / "pretrained")
    try:
        report = _RUNNERS[kind](cfg, out, cache)
    except Exception as exc:  # noqa: BLE001 - re-raised with stage name
        raise ExperimentError(kind, exc) from exc
    if report is not None:
        report.write(out / "report.json")
    (out / SENTINEL).unlink()
    return report


def _run_gen_noise(cfg, out, cache):
    spec = noise_spec(cfg)
    images, manifest = gen_corpus(spec, cfg.noise.n)
    d = out / "noise"
    d.mkdir()
    for s, img in zip(manifest.streams, images):
        name = f"{spec.family}_{s:04d}.png"
        save_image(img, d / name)
        manifest.files.append(name)
    manifest.write(d / "manifest.json")
    return None


def _run_pretrain(cfg, out, cache):
    layout = M.default_layout(2, cfg.noise.channels, cfg.model.depth, cfg.model.hidden)
    model, trace, manifest = pretrain_snp(cfg, cfg.noise.family, layout,
                                          height=cfg.noise.height, width=cfg.noise.width)
    ckpt.save_checkpoint(model, out / "snp.ckpt", cfg.experiment.seed)
    (out / "pretrain_trace.csv").write_text(trace.to_csv())
    manifest.write(out / "manifest.json")
    return RunReport("pretrain", [], {"final_mean_psnr": trace.final_psnr,
                                      "heads": model.n_heads})


def _run_fit(cfg, out, cache):
    suite = fit_suite(cfg, cache=cache)
    ids = [r.image for r in suite.report.rows if r.method == suite.report.methods()[0]]
    _write_traces(out, "fit", suite.traces, ids)
    emit_plotdata({m: mean_curve(t) for m, t in suite.traces.items()}, out / "fit_curves.csv")
    return suite.report


def _run_denoise(cfg, out, cache):
    suite = denoise_suite(cfg, cache=cache)
    ids = [r.image for r in suite.report.rows if r.method == suite.report.methods()[0]]
    for m, results in suite.results.items():
        d = out / "denoise" / m.replace(":", "_")
        d.mkdir(parents=True, exist_ok=True)
        for i, r in zip(ids, results):
            (d / f"{i}.csv").write_text(r.trace.to_csv())
            _write_json(d / f"{i}.json", dict(r.summary(), noise_model=suite.report.extra["noise_model"]))
            save_image(np.clip(r.denoised, 0, 1), d / f"{i}.png")
    emit_plotdata({m: mean_curve([r.trace for r in rs]) for m, rs in suite.results.items()},
                  out / "denoise_curves.csv")
    return suite.report


def _run_tradeoff(cfg, out, cache):
    fs = fit_suite(cfg, cache=cache)
    ds = denoise_suite(cfg, cache=cache)
    fit_map = {m: {r.image: r.psnr for r in fs.report.rows if r.method == m}
               for m in fs.report.methods()}
    den_map = {m: {r.image: r.psnr for r in ds.report.rows if r.method == m}
               for m in ds.report.methods()}
    rows = tradeoff_report(fit_map, den_map)
    best_fit, best_den = best_methods(rows)
    lines = ["method,fit_psnr,denoise_psnr,n_images"]
    lines += [f"{r.method},{r.fit_psnr!r},{r.denoise_psnr!r},{r.n_images}" for r in rows]
    (out / "tradeoff.csv").write_text("\n".join(lines) + "\n")
    report = RunReport("tradeoff", fs.report.rows)
    report.extra.update(tradeoff=[asdict(r) for r in rows], best_fit=best_fit,
                        best_denoise=best_den, inversion=best_fit != best_den,
                        denoise_rows=[asdict(r) for r in ds.report.rows],
                        input_psnr=ds.input_psnr)
    return report


def _run_video(cfg, out, cache, denoise: bool):
    ids, vids = test_videos(cfg)
    if denoise:
        report, results, _ = video_denoise_suite(cfg, cache=cache)
        for m, rs in results.items():
            d = out / "video-denoise" / m.replace(":", "_")
            d.mkdir(parents=True, exist_ok=True)
            for i, r in zip(ids, rs):
                _write_json(d / f"{i}.json", r.summary())
                for t, fr in enumerate(r.frames):
                    (d / f"{i}_frame{t:03d}.csv").write_text(fr.trace.to_csv())
    else:
        report, traces = video_fit_suite(cfg, cache=cache)
        for m, trs in traces.items():
            d = out / "video-fit" / m.replace(":", "_")
            d.mkdir(parents=True, exist_ok=True)
            for i, per_frame in zip(ids, trs):
                for t, tr in enumerate(per_frame):
                    (d / f"{i}_frame{t:03d}.csv").write_text(tr.to_csv())
                _write_json(d / f"{i}.json", {"mean_final_psnr": mean_final_psnr(per_frame)})
    if not cfg.video.videos:
        for i, v in zip(ids, vids):
            save_video(v, out / "videos" / i)
    return report


def _run_ntk(cfg, out, cache):
    report, curves, spectra = ntk_suite(cfg, cache=cache)
    emit_plotdata(curves, out / "ntk_curves.csv", NTK_CURVE_HEADER)
    for m, specs in spectra.items():
        d = out / "ntk" / m.replace(":", "_")
        d.mkdir(parents=True, exist_ok=True)
        np.savetxt(d / "eigenvalues.csv", specs[0].eigenvalues, delimiter=",", fmt="%.17g")
        np.savetxt(d / "eigenvectors_top8.csv", specs[0].eigenvectors[:, :8], delimiter=",",
                   fmt="%.17g")
        _write_json(d / "meta.json", {"size": cfg.analysis.size, "layout":
                                      list(M.default_layout(2, 1, cfg.analysis.depth,
                                                            cfg.analysis.hidden)),
                                      "max_outputs": 4096, "seed": cfg.experiment.seed})
    return report


def _run_landscape(cfg, out, cache):
    slices = landscape_suite(cfg, cache=cache)
    for m, s in slices.items():
        d = out / "landscape" / m.replace(":", "_")
        d.mkdir(parents=True, exist_ok=True)
        np.savetxt(d / "loss.csv", s.loss, delimiter=",", fmt="%.17g")
        _write_json(d / "meta.json", dict(s.seed_info, seed=cfg.experiment.seed,
                                          stream=S_LANDSCAPE, argmin=list(s.argmin()),
                                          center=list(s.center)))
    return RunReport("landscape", [Row(m, "photo00", float(s.loss[s.center]))
                                   for m, s in slices.items()])


_RUNNERS = {
    "gen-noise": _run_gen_noise,
    "pretrain": _run_pretrain,
    "fit": _run_fit,
    "denoise": _run_denoise,
    "tradeoff": _run_tradeoff,
    "video-fit": lambda c, o, k: _run_video(c, o, k, denoise=False),
    "video-denoise": lambda c, o, k: _run_video(c, o, k, denoise=True),
    "ntk": _run_ntk,
    "landscape": _run_landscape,
}
