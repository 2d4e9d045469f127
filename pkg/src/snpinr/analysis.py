"""Empirical NTK spectra and filter-normalized loss-landscape slices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model as M
from .numerics import as_image, make_coord_grid

MAX_NTK_OUTPUTS = 4096


def jacobian(params: M.SineMLP, coords: np.ndarray) -> np.ndarray:
    """Exact Jacobian of every output entry w.r.t. every parameter.

    Rows are ordered sample-major (``n * d_out + c``); columns follow
    ``params.arrays()``. One backward pass per output channel yields the
    per-sample gradients for all samples at once.
    """
    out, cache = M.forward(params, coords)
    n, d_out = out.shape
    layers = params.layers
    L = len(layers)
    J = np.empty((n, d_out, params.n_params))
    for c in range(d_out):
        delta = np.zeros((n, d_out))
        delta[:, c] = 1.0
        cols = [None] * (2 * L)
        k = len(cache.pre)
        g = delta
        for i in range(L - 1, -1, -1):
            if i != L - 1:
                k -= 1
                g = g * M._act_grad(cache.pre[k], params.activation)
            a = cache.inputs[i]
            cols[2 * i] = (g[:, :, None] * a[:, None, :]).reshape(n, -1)
            cols[2 * i + 1] = g
            if i > 0:
                g = g @ layers[i].weights
        J[:, c, :] = np.hstack(cols)
    return J.reshape(n * d_out, -1)


def compute_ntk(params: M.SineMLP, coords: np.ndarray) -> np.ndarray:
    """Empirical NTK ``K = J J^T`` over all ``|coords| * d_out`` outputs."""
    coords = np.asarray(coords, dtype=np.float64)
    P = coords.shape[0] * params.layout[-1]
    if P > MAX_NTK_OUTPUTS:
        raise ValueError(f"NTK over {P} outputs exceeds the limit of {MAX_NTK_OUTPUTS}; "
                         "subsample the coordinates")
    J = jacobian(params, coords)
    K = J @ J.T
    return 0.5 * (K + K.T)


@dataclass
class NtkSpectrum:
    kernel: np.ndarray
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, matching eigenvalues
    energy: np.ndarray  # energy[k-1] = fraction captured by the top k eigenvectors

    def energy_at_percentile(self, pct: float) -> float:
        """Energy captured by eigenvectors whose eigenvalue rank is above ``pct``.

        ``pct = 90`` keeps the top 10% of eigenvalues; ``pct = 0`` keeps all.
        """
        k = top_count(len(self.eigenvalues), pct)
        return 0.0 if k == 0 else float(self.energy[k - 1])

    def curve(self, percentiles=None) -> tuple[np.ndarray, np.ndarray]:
        if percentiles is None:
            percentiles = np.arange(100, -1, -1, dtype=float)
        pct = np.asarray(percentiles, dtype=float)
        return pct, np.array([self.energy_at_percentile(p) for p in pct])


def top_count(n: int, pct: float) -> int:
    if not 0 <= pct <= 100:
        raise ValueError("percentile must lie in [0, 100]")
    return int(math.ceil(n * (100.0 - pct) / 100.0 - 1e-9))


def ntk_energy_curve(K: np.ndarray, y) -> NtkSpectrum:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != K.shape[0]:
        raise ValueError(f"target has {y.size} entries, kernel is {K.shape[0]}x{K.shape[0]}")
    norm2 = float(y @ y)
    if norm2 == 0.0:
        raise ValueError("target is identically zero")
    w, V = np.linalg.eigh(K)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    proj = (V.T @ y) ** 2 / norm2
    energy = np.cumsum(proj)
    energy /= energy[-1]
    return NtkSpectrum(K, w, V, energy)


# --- loss landscapes -----------------------------------------------------------

@dataclass
class LandscapeSlice:
    alphas: np.ndarray
    betas: np.ndarray
    loss: np.ndarray  # (R, R), loss[i, j] at (alphas[i], betas[j])
    directions: tuple[list[M.Layer], list[M.Layer]]
    seed_info: dict

    @property
    def center(self) -> tuple[int, int]:
        r = len(self.alphas) // 2
        return r, r

    def argmin(self) -> tuple[int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmin(self.loss), self.loss.shape))


def filter_normalize(direction: list[M.Layer], params: M.SineMLP) -> list[M.Layer]:
    """Scale each weight row (and each bias vector) to the norm of its parameter counterpart."""
    out = []
    for d, p in zip(direction, params.layers):
        dn = np.linalg.norm(d.weights, axis=1, keepdims=True)
        pn = np.linalg.norm(p.weights, axis=1, keepdims=True)
        scale = np.divide(pn, dn, out=np.zeros_like(pn), where=dn > 0)
        w = d.weights * scale
        bn, pbn = np.linalg.norm(d.biases), np.linalg.norm(p.biases)
        b = d.biases * (pbn / bn) if bn > 0 else np.zeros_like(d.biases)
        out.append(M.Layer(w, b))
    return out


def random_direction(params: M.SineMLP, rng: np.random.Generator) -> list[M.Layer]:
    raw = [M.Layer(rng.standard_normal(l.weights.shape), rng.standard_normal(l.biases.shape))
           for l in params.layers]
    return filter_normalize(raw, params)


def loss_landscape(params: M.SineMLP, target, resolution: int = 41, span: float = 1.0,
                   rng: np.random.Generator | None = None, directions=None) -> LandscapeSlice:
    """MSE over ``params + a*d1 + b*d2`` for ``a, b`` on an R x R grid in ``[-span, span]^2``."""
    if resolution % 2 != 1 or not 1 <= resolution <= 101:
        raise ValueError("resolution must be odd and at most 101")
    img = as_image(target, name="target")
    h, w, c = img.shape
    coords = make_coord_grid(h, w)
    y = img.reshape(-1, c)
    if directions is None:
        rng = rng if rng is not None else np.random.default_rng()
        directions = (random_direction(params, rng), random_direction(params, rng))
    d1, d2 = directions
    grid = np.linspace(-span, span, resolution)
    grid[resolution // 2] = 0.0
    loss = np.empty((resolution, resolution))
    for i, a in enumerate(grid):
        for j, b in enumerate(grid):
            layers = [M.Layer(p.weights + a * u.weights + b * v.weights,
                              p.biases + a * u.biases + b * v.biases)
                      for p, u, v in zip(params.layers, d1, d2)]
            pred, _ = M.forward_layers(layers, params.activation, coords)
            loss[i, j] = np.mean((pred - y) ** 2)
    return LandscapeSlice(grid, grid.copy(), loss, (d1, d2),
                          {"resolution": resolution, "span": span, "normalization": "filter"})
