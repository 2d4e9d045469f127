"""Fused float64 sine kernels.

libm's double-precision sin/cos dominate training time, so the sine
activation and its derivative use a Cody-Waite reduction to
``[-pi/4, pi/4]`` followed by the fdlibm minimax polynomials. Agreement
with ``np.sin`` is within a few ulp for ``|x| < 1e5``.
"""

import numpy as np
from numba import njit

_INV_PIO2 = 6.36619772367581382433e-01
_PIO2_1 = 1.57079632673412561417e00
_PIO2_2 = 6.07710050630396597660e-11
_PIO2_2T = 2.02226624879595063154e-21

_S1 = -1.66666666666666324348e-01
_S2 = 8.33333333332248946124e-03
_S3 = -1.98412698298579493134e-04
_S4 = 2.75573137070700676789e-06
_S5 = -2.50507602534068634195e-08
_S6 = 1.58969099521155010221e-10

_C1 = 4.16666666666666019037e-02
_C2 = -1.38888888888741095749e-03
_C3 = 2.48015872894767294178e-05
_C4 = -2.75573143513906633035e-07
_C5 = 2.08757232129817482790e-09
_C6 = -1.13596475577881948265e-11


@njit(inline="always", cache=True)
def _ksin(r):
    z = r * r
    return r + r * z * (_S1 + z * (_S2 + z * (_S3 + z * (_S4 + z * (_S5 + z * _S6)))))


@njit(inline="always", cache=True)
def _kcos(r):
    z = r * r
    return 1.0 - 0.5 * z + z * z * (_C1 + z * (_C2 + z * (_C3 + z * (_C4 + z * (_C5 + z * _C6)))))


@njit(inline="always", cache=True)
def _sin(x):
    n = np.rint(x * _INV_PIO2)
    r = x - n * _PIO2_1
    r = r - n * _PIO2_2
    r = r - n * _PIO2_2T
    q = np.int64(n)
    s = _ksin(r)
    c = _kcos(r)
    v = c if (q & 1) else s
    return -v if (q & 2) else v


@njit(inline="always", cache=True)
def _cos(x):
    n = np.rint(x * _INV_PIO2)
    r = x - n * _PIO2_1
    r = r - n * _PIO2_2
    r = r - n * _PIO2_2T
    q = np.int64(n) + 1
    s = _ksin(r)
    c = _kcos(r)
    v = c if (q & 1) else s
    return -v if (q & 2) else v


@njit(cache=True)
def _sin_scaled(z, omega, out):
    for i in range(z.size):
        out[i] = _sin(omega * z[i])


@njit(cache=True)
def _cos_grad(g, z, omega, out):
    for i in range(z.size):
        out[i] = g[i] * omega * _cos(omega * z[i])


def sin_scaled(z: np.ndarray, omega: float) -> np.ndarray:
    """``sin(omega * z)`` elementwise."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty_like(z)
    _sin_scaled(z.ravel(), float(omega), out.ravel())
    return out


def sine_backprop(g: np.ndarray, z: np.ndarray, omega: float) -> np.ndarray:
    """``g * omega * cos(omega * z)`` elementwise."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    out = np.empty_like(z)
    _cos_grad(g.ravel(), z.ravel(), float(omega), out.ravel())
    return out
