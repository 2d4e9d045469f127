"""Shared-encoder pretraining and single-signal fitting.

An SNP model is one sine encoder (all layers but the last) feeding ``N``
linear decoder heads. Pretraining fits ``N`` signals jointly; at test time
the encoder is kept, a fresh head is drawn, and the whole network is fitted
to a new signal.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from . import model as M
from .numerics import PSNR_CAP, as_image, make_coord_grid, ssim


@dataclass
class FitConfig:
    iterations: int = 2000
    lr: float = 1e-4
    record_every: int = 10
    loss: str = "l2"
    eval_ssim: bool = False
    schedule: str = "constant"  # or "cosine"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.loss != "l2":
            raise ValueError(f"unsupported loss {self.loss!r}")
        if self.schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr schedule {self.schedule!r}")

    def records(self, it: int) -> bool:
        return it % self.record_every == 0 or it == self.iterations

    def lr_at(self, it: int) -> float:
        if self.schedule == "constant":
            return self.lr
        return cosine_lr(self.lr, it, self.iterations)


def cosine_lr(lr_max: float, it: int, total: int) -> float:
    """Cosine annealing from ``lr_max`` at step 0 to 0 at step ``total``."""
    it = min(max(it, 0), total)
    return 0.5 * lr_max * (1.0 + np.cos(np.pi * it / total))


def loss_to_psnr(loss: float) -> float:
    if loss <= 0.0:
        return PSNR_CAP
    return float(min(-10.0 * np.log10(loss), PSNR_CAP))


@dataclass
class FitTrace:
    iteration: list[int] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    psnr: list[float] = field(default_factory=list)
    ssim: list[float] | None = None
    wall_time: list[float] | None = None

    def add(self, it, loss, psnr, ssim_value=None, wall=None):
        if self.iteration and it <= self.iteration[-1]:
            raise ValueError("trace iterations must increase")
        self.iteration.append(int(it))
        self.loss.append(float(loss))
        self.psnr.append(float(psnr))
        if ssim_value is not None:
            if self.ssim is None:
                self.ssim = []
            self.ssim.append(float(ssim_value))
        if wall is not None:
            if self.wall_time is None:
                self.wall_time = []
            self.wall_time.append(float(wall))

    def __len__(self):
        return len(self.iteration)

    @property
    def final_psnr(self) -> float:
        return self.psnr[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["iteration", "loss", "psnr"] + (["ssim"] if self.ssim is not None else [])
        w.writerow(cols)
        for i in range(len(self)):
            row = [self.iteration[i], repr(self.loss[i]), repr(self.psnr[i])]
            if self.ssim is not None:
                row.append(repr(self.ssim[i]))
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FitTrace":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        tr = cls()
        has_ssim = "ssim" in header
        for r in body:
            tr.add(int(r[0]), float(r[1]), float(r[2]), float(r[3]) if has_ssim else None)
        return tr


def image_targets(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates and flattened ``(H*W, C)`` targets for an image."""
    img = as_image(img)
    h, w, c = img.shape
    return make_coord_grid(h, w), img.reshape(h * w, c)


# --- SNP model ----------------------------------------------------------------

@dataclass
class SnpModel:
    encoder: list[M.Layer]
    decoders: list[M.Layer]
    activation: M.Activation = field(default_factory=M.Activation)

    def __post_init__(self):
        if not self.decoders:
            raise ValueError("an SNP model needs at least one decoder head")
        width = self.encoder[-1].weights.shape[0] if self.encoder else None
        for d in self.decoders:
            if width is not None and d.weights.shape[1] != width:
                raise ValueError("decoder input width does not match encoder output")

    @property
    def layout(self) -> tuple[int, ...]:
        first = self.encoder[0] if self.encoder else self.decoders[0]
        return ((first.weights.shape[1],) + tuple(l.weights.shape[0] for l in self.encoder)
                + (self.decoders[0].weights.shape[0],))

    @property
    def n_heads(self) -> int:
        return len(self.decoders)

    def arrays(self) -> list[np.ndarray]:
        return M.layer_arrays(self.encoder) + M.layer_arrays(self.decoders)

    def head_model(self, i: int) -> M.SineMLP:
        """Full MLP made of the shared encoder and head ``i`` (arrays are shared, not copied)."""
        return M.SineMLP(list(self.encoder) + [self.decoders[i]], self.activation)


def init_snp(layout, n_heads: int, activation: M.Activation | None = None,
             rng: np.random.Generator | None = None) -> SnpModel:
    """Randomly initialized SNP model; head ``i`` is drawn after the encoder, in order."""
    base = M.init_siren(layout, activation, rng)
    layout = base.layout
    rng = rng if rng is not None else np.random.default_rng()
    last = len(layout) - 2
    heads = [base.layers[-1]] + [
        M.init_layer(last, layout[-2], layout[-1], base.activation, rng) for _ in range(n_heads - 1)
    ]
    return SnpModel(base.layers[:-1], heads, base.activation)


def snp_loss_and_grads(model: SnpModel, coords: np.ndarray, targets: list[np.ndarray]):
    """Summed per-head MSE, per-head losses, and gradients in ``model.arrays()`` order."""
    feats, cache = M.forward_layers(model.encoder, model.activation, coords, linear_last=False)
    dfeats = np.zeros_like(feats)
    head_grads, losses = [], []
    for head, y in zip(model.decoders, targets):
        pred = feats @ head.weights.T + head.biases
        loss, g = M.mse_grad(pred, y)
        losses.append(loss)
        head_grads.append(M.Layer(g.T @ feats, g.sum(axis=0)))
        dfeats += g @ head.weights
    enc_grads, _ = M.backward_layers(model.encoder, cache, dfeats, linear_last=False)
    grads = M.layer_arrays(enc_grads) + M.layer_arrays(head_grads)
    return float(sum(losses)), losses, grads


def pretrain(corpus: list[np.ndarray], layout, activation: M.Activation | None = None,
             config: FitConfig | None = None, rng: np.random.Generator | None = None,
             model: SnpModel | None = None):
    """Jointly fit ``len(corpus)`` signals with one encoder and one head each.

    A single Adam state spans encoder and all heads. Returns the trained
    model and a trace whose psnr column is the mean per-head PSNR.
    """
    config = config or FitConfig(iterations=5000)
    imgs = [as_image(c) for c in corpus]
    if not imgs:
        raise ValueError("corpus is empty")
    if any(i.shape != imgs[0].shape for i in imgs):
        raise ValueError("all corpus images must share a shape")
    coords, _ = image_targets(imgs[0])
    targets = [i.reshape(-1, i.shape[2]) for i in imgs]
    if model is None:
        model = init_snp(layout, len(imgs), activation, rng)
    elif model.n_heads != len(imgs):
        raise ValueError("model head count does not match corpus size")
    if model.layout[0] != 2 or model.layout[-1] != imgs[0].shape[2]:
        raise ValueError(f"layout {model.layout} does not fit images of shape {imgs[0].shape}")

    state = M.AdamState(lr=config.lr)
    params = model.arrays()
    trace = FitTrace()
    t0 = time.perf_counter()
    for it in range(config.iterations + 1):
        total, losses, grads = snp_loss_and_grads(model, coords, targets)
        if not np.isfinite(total):
            raise FloatingPointError(f"non-finite pretraining loss at iteration {it}")
        if config.records(it):
            trace.add(it, total, float(np.mean([loss_to_psnr(l) for l in losses])),
                      wall=time.perf_counter() - t0)
        if it == config.iterations:
            break
        state.lr = config.lr_at(it)
        M.adam_step(params, grads, state)
    return model, trace


def make_test_model(model: SnpModel, rng: np.random.Generator) -> M.SineMLP:
    """Pretrained encoder (copied) plus a freshly initialized final layer."""
    layout = model.layout
    last = len(layout) - 2
    head = M.init_layer(last, layout[-2], layout[-1], model.activation, rng)
    return M.SineMLP([l.copy() for l in model.encoder] + [head], model.activation)


def fit(init: M.SineMLP, target: np.ndarray, config: FitConfig | None = None,
        callback=None) -> tuple[M.SineMLP, FitTrace]:
    """Full-batch Adam on the L2 loss, all layers trainable.

    ``callback(it, pred)`` is invoked at every recorded iteration with the
    current ``(H*W, C)`` prediction; the returned trace row is recorded first.
    """
    config = config or FitConfig()
    img = as_image(target, name="target")
    if img.shape[2] != init.layout[-1]:
        raise ValueError(f"target has {img.shape[2]} channels, model outputs {init.layout[-1]}")
    coords, y = image_targets(img)
    params = init.copy()
    arrays = params.arrays()
    state = M.AdamState(lr=config.lr)
    trace = FitTrace()
    h, w, c = img.shape
    t0 = time.perf_counter()
    for it in range(config.iterations + 1):
        pred, cache = M.forward(params, coords)
        loss, g = M.mse_grad(pred, y)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at iteration {it}")
        if config.records(it):
            s = ssim(pred.reshape(h, w, c), img) if config.eval_ssim else None
            trace.add(it, loss, loss_to_psnr(loss), s, wall=time.perf_counter() - t0)
            if callback is not None:
                callback(it, pred)
        if it == config.iterations:
            break
        state.lr = config.lr_at(it)
        M.adam_step(arrays, M.layer_arrays(M.backward(params, cache, g)), state)
    return params, trace


def predict_image(params: M.SineMLP, shape) -> np.ndarray:
    h, w = shape[:2]
    out, _ = M.forward(params, make_coord_grid(h, w))
    return out.reshape(h, w, -1)
