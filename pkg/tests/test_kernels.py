"""Both kernel backends must agree; the numpy path is the reference."""

import numpy as np
import numpy.testing as npt
import pytest

from lexmatch import kernels as K

HAS_NUMBA = K.BACKEND == "numba"


def _case(seed, length=17, width=3, k=5, d_out=4, dtype=np.float64):
    rng = np.random.default_rng(seed)
    pad = (width - 1) // 2
    xp = rng.normal(size=(length + 2 * pad, k)).astype(dtype)
    w = rng.normal(size=(width, k, d_out)).astype(dtype)
    g = rng.normal(size=(length, d_out)).astype(dtype)
    return xp, w, g


def test_numpy_forward_matches_direct_correlation():
    xp, w, _ = _case(0)
    out = K.conv1d_forward_numpy(xp, w)
    width = w.shape[0]
    expect = np.zeros_like(out)
    for i in range(out.shape[0]):
        for t in range(width):
            expect[i] += xp[i + t] @ w[t]
    npt.assert_allclose(out, expect, atol=1e-12)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba backend not active")
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_backends_agree_on_conv(dtype):
    xp, w, g = _case(1, dtype=dtype)
    tol = 1e-5 if dtype == np.float32 else 1e-12
    npt.assert_allclose(K.conv1d_forward(xp, w), K.conv1d_forward_numpy(xp, w), atol=tol)
    dxp_nb, dw_nb = K.conv1d_backward(xp, w, g)
    dxp_np, dw_np = K.conv1d_backward_numpy(xp, w, g)
    npt.assert_allclose(dxp_nb, dxp_np, atol=tol)
    npt.assert_allclose(dw_nb, dw_np, atol=tol)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba backend not active")
def test_backends_agree_on_scatter_add():
    rng = np.random.default_rng(2)
    ids = rng.integers(0, 10, size=40)
    g = rng.normal(size=(40, 6))
    a = np.zeros((10, 6))
    b = np.zeros((10, 6))
    K.scatter_add_rows(a, ids, g)
    K.scatter_add_rows_numpy(b, ids, g)
    npt.assert_allclose(a, b, atol=1e-12)


def test_scatter_add_accumulates_repeated_ids():
    acc = np.zeros((3, 2))
    ids = np.array([1, 1, 1])
    K.scatter_add_rows_numpy(acc, ids, np.ones((3, 2)))
    npt.assert_array_equal(acc[1], [3.0, 3.0])
    npt.assert_array_equal(acc[0], [0.0, 0.0])


def test_backend_env_selection(monkeypatch):
    monkeypatch.setenv("LEXMATCH_BACKEND", "numpy")
    assert K._pick_backend() == "numpy"
    monkeypatch.setenv("LEXMATCH_BACKEND", "bogus")
    with pytest.raises(ValueError):
        K._pick_backend()
