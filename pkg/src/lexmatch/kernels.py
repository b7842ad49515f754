"""Hot numeric kernels: same-length 1-D convolution and row scatter-add.

Two interchangeable backends are provided. The numba backend JIT-compiles
tight loops; the numpy backend uses windowed views and ``np.add.at``. Both
produce the same values (up to float summation order).

Selection happens once at import via the ``LEXMATCH_BACKEND`` environment
variable: ``numba`` (default when importable), ``numpy``, or ``auto``.
"""

from __future__ import annotations

import os

import numpy as np


def _windows(xp: np.ndarray, width: int) -> np.ndarray:
    """Return the [L, width*k] view of all width-windows of a padded [L+width-1, k] input."""
    length = xp.shape[0] - (width - 1)
    win = np.lib.stride_tricks.sliding_window_view(xp, width, axis=0)  # [L, k, width]
    return win.transpose(0, 2, 1).reshape(length, width * xp.shape[1])


def conv1d_forward_numpy(xp: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Correlate a padded [L+width-1, k] input with filters [width, k, d_out] -> [L, d_out]."""
    width, k, d_out = w.shape
    return _windows(xp, width) @ w.reshape(width * k, d_out)


def conv1d_backward_numpy(
    xp: np.ndarray, w: np.ndarray, g_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of conv1d_forward w.r.t. the padded input and the filters."""
    width, k, d_out = w.shape
    length = g_out.shape[0]
    win = _windows(xp, width)
    dw = (win.T @ g_out).reshape(width, k, d_out)
    dwin = (g_out @ w.reshape(width * k, d_out).T).reshape(length, width, k)
    dxp = np.zeros_like(xp)
    for t in range(width):
        dxp[t : t + length] += dwin[:, t, :]
    return dxp, dw


def scatter_add_rows_numpy(acc: np.ndarray, ids: np.ndarray, g: np.ndarray) -> None:
    """acc[ids[i]] += g[i] for every row i, with repeated ids accumulating."""
    np.add.at(acc, ids, g)


def _pick_backend() -> str:
    choice = os.environ.get("LEXMATCH_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"LEXMATCH_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _pick_backend()

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _conv1d_forward_nb(xp, w):
        width, k, d_out = w.shape
        length = xp.shape[0] - (width - 1)
        out = np.zeros((length, d_out), dtype=xp.dtype)
        for i in range(length):
            for t in range(width):
                for c in range(k):
                    v = xp[i + t, c]
                    for o in range(d_out):
                        out[i, o] += v * w[t, c, o]
        return out

    @njit(cache=True)
    def _conv1d_backward_nb(xp, w, g_out):
        width, k, d_out = w.shape
        length = g_out.shape[0]
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(w)
        for i in range(length):
            for t in range(width):
                for c in range(k):
                    acc = 0.0
                    v = xp[i + t, c]
                    for o in range(d_out):
                        g = g_out[i, o]
                        dw[t, c, o] += v * g
                        acc += w[t, c, o] * g
                    dxp[i + t, c] += acc
        return dxp, dw

    @njit(cache=True)
    def _scatter_add_rows_nb(acc, ids, g):
        for i in range(ids.shape[0]):
            r = ids[i]
            for c in range(g.shape[1]):
                acc[r, c] += g[i, c]

    def conv1d_forward(xp: np.ndarray, w: np.ndarray) -> np.ndarray:
        return _conv1d_forward_nb(np.ascontiguousarray(xp), np.ascontiguousarray(w))

    def conv1d_backward(xp, w, g_out):
        return _conv1d_backward_nb(
            np.ascontiguousarray(xp),
            np.ascontiguousarray(w),
            np.ascontiguousarray(g_out),
        )

    def scatter_add_rows(acc, ids, g):
        _scatter_add_rows_nb(acc, np.ascontiguousarray(ids), np.ascontiguousarray(g))

else:
    conv1d_forward = conv1d_forward_numpy
    conv1d_backward = conv1d_backward_numpy
    scatter_add_rows = scatter_add_rows_numpy
