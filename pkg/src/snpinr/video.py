"""Video fitting with a shared sine MLP plus per-frame low-rank weight residuals.

At frame ``t`` every hidden-to-hidden layer uses ``W + B_t @ A_t``; the first
and last layers are shared by all frames. ``B_t`` starts at zero so all
frames begin as the plain shared network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model as M
from .denoise import DenoiseResult
from .numerics import as_image, make_coord_grid, psnr
from .training import FitConfig, FitTrace, SnpModel, loss_to_psnr

DEFAULT_SIGMA = 0.02


def as_video(frames) -> np.ndarray:
    v = np.asarray(frames, dtype=np.float64)
    if v.ndim == 3:
        v = v[..., None]
    if v.ndim != 4 or v.shape[0] < 1:
        raise ValueError(f"video must have shape (T, H, W, C), got {v.shape}")
    for f in v:
        as_image(f, name="frame")
    return v


def frame_times(frames: int) -> np.ndarray:
    return np.zeros(1) if frames == 1 else np.linspace(-1.0, 1.0, frames)


@dataclass
class ResFieldParams:
    shared: M.SineMLP
    A: dict[int, np.ndarray]  # layer index -> (frames, rank, in)
    B: dict[int, np.ndarray]  # layer index -> (frames, out, rank)
    rank: int
    use_time_input: bool = True

    @property
    def frames(self) -> int:
        return next(iter(self.A.values())).shape[0] if self.A else self._frames

    @property
    def n_params(self) -> int:
        return self.shared.n_params + sum(a.size for a in self.A.values()) + \
            sum(b.size for b in self.B.values())

    def frame_layers(self, t: int) -> list[M.Layer]:
        layers = []
        for i, l in enumerate(self.shared.layers):
            if i in self.A and self.rank > 0:
                layers.append(M.Layer(l.weights + self.B[i][t] @ self.A[i][t], l.biases))
            else:
                layers.append(l)
        return layers

    def frame_arrays(self, t: int) -> list[np.ndarray]:
        """Views of frame ``t``'s residual factors, in residual-layer order (A, B)."""
        out = []
        for i in sorted(self.A):
            out += [self.A[i][t], self.B[i][t]]
        return out

    def copy(self) -> "ResFieldParams":
        p = ResFieldParams(self.shared.copy(), {k: v.copy() for k, v in self.A.items()},
                           {k: v.copy() for k, v in self.B.items()}, self.rank,
                           self.use_time_input)
        if not self.A:
            p._frames = self._frames
        return p


def residual_layers(layout) -> list[int]:
    """Indices of hidden-to-hidden layers (first and last layers excluded)."""
    return list(range(1, len(layout) - 2))


def build_resfield(shared_init: M.SineMLP, rank: int, frames: int, sigma: float = DEFAULT_SIGMA,
                   rng: np.random.Generator | None = None,
                   use_time_input: bool = True) -> ResFieldParams:
    """Shared branch copied from ``shared_init``; ``A ~ N(0, sigma^2)``, ``B = 0``."""
    if rank < 0 or frames < 1:
        raise ValueError("rank must be >= 0 and frames >= 1")
    layout = shared_init.layout
    expected_in = 3 if use_time_input else 2
    if layout[0] != expected_in:
        raise ValueError(f"shared branch must take {expected_in} inputs, layout is {layout}")
    idx = residual_layers(layout)
    if idx and rank > min(min(layout[i], layout[i + 1]) for i in idx):
        raise ValueError(f"rank {rank} exceeds the narrowest residual layer")
    rng = rng if rng is not None else np.random.default_rng()
    A, B = {}, {}
    if rank > 0:
        for i in idx:
            out_dim, in_dim = shared_init.layers[i].weights.shape
            A[i] = rng.normal(0.0, sigma, size=(frames, rank, in_dim))
            B[i] = np.zeros((frames, out_dim, rank))
    p = ResFieldParams(shared_init.copy(), A, B, rank, use_time_input)
    p._frames = frames
    return p


def shared_from_snp(model: SnpModel, channels: int, rng: np.random.Generator,
                    use_time_input: bool = True) -> M.SineMLP:
    """Video shared branch seeded from an image-pretrained SNP encoder.

    The spatial columns of the first layer and all later encoder layers are
    copied; the time column and the output layer are drawn fresh.
    """
    enc = [l.copy() for l in model.encoder]
    act = model.activation
    width = enc[-1].weights.shape[0]
    if use_time_input:
        first = enc[0]
        fresh = M.init_layer(0, 3, first.weights.shape[0], act, rng)
        w = np.concatenate([first.weights, fresh.weights[:, 2:3]], axis=1)
        enc[0] = M.Layer(w, first.biases)
    head = M.init_layer(len(enc), width, channels, act, rng)
    return M.SineMLP(enc + [head], act)


def video_coords(height: int, width: int, frames: int, use_time_input: bool) -> list[np.ndarray]:
    xy = make_coord_grid(height, width)
    if not use_time_input:
        return [xy] * frames
    return [np.hstack([xy, np.full((xy.shape[0], 1), t)]) for t in frame_times(frames)]


def _frame_grads(params: ResFieldParams, t: int, coords: np.ndarray, target: np.ndarray):
    layers = params.frame_layers(t)
    pred, cache = M.forward_layers(layers, params.shared.activation, coords)
    loss, g = M.mse_grad(pred, target)
    grads, _ = M.backward_layers(layers, cache, g)
    shared = M.layer_arrays(grads)
    factors = []
    for i in sorted(params.A):
        dW = grads[i].weights
        factors += [params.B[i][t].T @ dW, dW @ params.A[i][t].T]
    return loss, shared, factors


def _eval_frames(params: ResFieldParams, coords, frames_flat):
    preds, losses = [], []
    for t in range(len(frames_flat)):
        pred, _ = M.forward_layers(params.frame_layers(t), params.shared.activation, coords[t])
        preds.append(pred)
        losses.append(float(np.mean((pred - frames_flat[t]) ** 2)))
    return preds, losses


def fit_video(params: ResFieldParams, video, config: FitConfig | None = None,
              callback=None) -> tuple[ResFieldParams, list[FitTrace]]:
    """Round-robin single-frame Adam fitting with a cosine learning-rate schedule.

    The shared branch has one Adam state; each frame's factors have their
    own state that only advances when that frame is sampled. All frames are
    evaluated at recorded iterations; ``callback(it, preds)`` receives the
    list of ``(H*W, C)`` predictions.
    """
    config = config or FitConfig(iterations=2000, lr=5e-4, schedule="cosine")
    video = as_video(video)
    T, h, w, c = video.shape
    if T != params.frames:
        raise ValueError(f"video has {T} frames, model has {params.frames}")
    if params.shared.layout[-1] != c:
        raise ValueError("channel count does not match the model output")
    params = params.copy()
    coords = video_coords(h, w, T, params.use_time_input)
    flat = [f.reshape(-1, c) for f in video]
    shared_arrays = params.shared.arrays()
    shared_state = M.AdamState(lr=config.lr)
    frame_states = [M.AdamState(lr=config.lr) for _ in range(T)]
    traces = [FitTrace() for _ in range(T)]

    for it in range(config.iterations + 1):
        if config.records(it):
            preds, losses = _eval_frames(params, coords, flat)
            for t in range(T):
                traces[t].add(it, losses[t], loss_to_psnr(losses[t]))
            if callback is not None:
                callback(it, preds)
        if it == config.iterations:
            break
        t = it % T
        loss, g_shared, g_factors = _frame_grads(params, t, coords[t], flat[t])
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at iteration {it}")
        lr = config.lr_at(it)
        shared_state.lr = lr
        M.adam_step(shared_arrays, g_shared, shared_state)
        if g_factors:
            frame_states[t].lr = lr
            M.adam_step(params.frame_arrays(t), g_factors, frame_states[t])
    return params, traces


def mean_final_psnr(traces: list[FitTrace]) -> float:
    return float(np.mean([tr.final_psnr for tr in traces]))


@dataclass
class VideoDenoiseResult:
    best_psnr: float  # mean over frames at the best common iteration
    best_iteration: int
    frames: list[DenoiseResult]  # per-frame oracle optimum

    @property
    def mean_frame_best(self) -> float:
        return float(np.mean([f.best_psnr for f in self.frames]))

    def summary(self) -> dict:
        return {"best_psnr": self.best_psnr, "best_iteration": self.best_iteration,
                "mean_frame_best_psnr": self.mean_frame_best,
                "frame_best_iterations": [f.best_iteration for f in self.frames]}


def denoise_video(params: ResFieldParams, noisy, clean, config: FitConfig | None = None
                  ) -> VideoDenoiseResult:
    noisy, clean = as_video(noisy), as_video(clean)
    if noisy.shape != clean.shape:
        raise ValueError("noisy and clean videos differ in shape")
    T, h, w, c = clean.shape
    frame_traces = [FitTrace() for _ in range(T)]
    best_frame = [(-np.inf, 0, None)] * T
    best = {"psnr": -np.inf, "it": 0}
    nflat = [f.reshape(-1, c) for f in noisy]

    def on_record(it, preds):
        ps = []
        for t, pred in enumerate(preds):
            img = pred.reshape(h, w, c)
            p = psnr(img, clean[t])
            ps.append(p)
            frame_traces[t].add(it, float(np.mean((pred - nflat[t]) ** 2)), p)
            if p > best_frame[t][0]:
                best_frame[t] = (p, it, img.copy())
        m = float(np.mean(ps))
        if m > best["psnr"]:
            best.update(psnr=m, it=it)

    fit_video(params, noisy, config, callback=on_record)
    frames = [DenoiseResult(b[0], b[1], frame_traces[t], b[2]) for t, b in enumerate(best_frame)]
    return VideoDenoiseResult(best["psnr"], best["it"], frames)
