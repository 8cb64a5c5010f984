"""Product integration of sampled signals against an analytic kernel.

The causal convolution ``I(t_i) = int_0^{t_i} K(t_i - s) r(s) ds`` is
evaluated by interpolating ``r`` with local cubics (stencils never cross
a breakpoint) and integrating each cubic against ``K`` exactly up to the
accuracy of a per-panel Gauss-Legendre moment table.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

_GL_ORDER = 10
_FFT_THRESHOLD = 4096


def _gauss_unit(order: int = _GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_moments(kernel, h: float, n_panels: int, degree: int = 3) -> np.ndarray:
    """``M[m, q] = int_{mh}^{(m+1)h} K(tau) y**q dtau`` with ``y = tau/h - m``."""
    y, w = _gauss_unit()
    m = np.arange(n_panels)[:, None]
    tau = (m + y[None, :]) * h
    k_vals = kernel(tau.ravel()).reshape(tau.shape)
    powers = y[None, :, None] ** np.arange(degree + 1)[None, None, :]
    return h * np.einsum("mg,g,mgq->mq", k_vals, w, powers)


def _stencil_matrix(offsets) -> np.ndarray:
    # Maps node values to monomial coefficients in y = 1 - x, where x is the
    # panel-local coordinate (node k at x = 0, node k+1 at x = 1).
    y_nodes = 1.0 - np.asarray(offsets, dtype=float)
    vander = y_nodes[:, None] ** np.arange(len(offsets))[None, :]
    return np.linalg.inv(vander)


def panel_coefficients(values: np.ndarray, breaks) -> np.ndarray:
    """Per-panel polynomial coefficients in ``y`` (shape ``(n-1, 4)``).

    ``breaks`` are node indices where the signal may have a kink; no
    stencil straddles one.
    """
    n = len(values)
    bounds = sorted({0, n - 1, *[int(b) for b in breaks if 0 < b < n - 1]})
    coeffs = np.zeros((n - 1, 4))
    cache: dict[tuple, np.ndarray] = {}
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        size = hi - lo + 1
        width = min(4, size)
        for k in range(lo, hi):
            start = min(max(k - 1, lo), hi - width + 1)
            offsets = tuple(range(start - k, start - k + width))
            mat = cache.get(offsets)
            if mat is None:
                mat = cache[offsets] = _stencil_matrix(offsets)
            coeffs[k, :width] = mat @ values[start:start + width]
    return coeffs


def _causal_conv(a: np.ndarray, b: np.ndarray, n_out: int) -> np.ndarray:
    if len(a) > _FFT_THRESHOLD:
        full = signal.fftconvolve(a, b)
    else:
        full = np.convolve(a, b)
    return full[:n_out]


def convolve_sampled(values: np.ndarray, moments: np.ndarray, breaks=()) -> np.ndarray:
    """Causal product-integration convolution of nodal ``values``.

    ``moments`` comes from :func:`panel_moments` with at least ``n - 1``
    panels. Returns the integral at every node (zero at node 0).
    """
    n = len(values)
    out = np.zeros(n)
    if n < 2:
        return out
    coeffs = panel_coefficients(np.asarray(values, dtype=float), breaks)
    for q in range(4):
        out[1:] += _causal_conv(coeffs[:, q], moments[: n - 1, q], n - 1)
    return out
