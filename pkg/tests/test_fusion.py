"""Gated fusion, classifier head, and loss behavior."""

import numpy as np
import numpy.testing as npt
import pytest

from lexmatch import autodiff as ad
from lexmatch import fusion as fus


@pytest.fixture(autouse=True)
def _float64():
    with ad.using_dtype("float64"):
        yield


WIDTH = 8


def make_fusion(seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    return fus.FusionParams(
        transform=ad.Parameter("fusion.transform", rng.normal(size=(4 * WIDTH, WIDTH)) * scale),
        gate=ad.Parameter("fusion.gate", rng.normal(size=(4 * WIDTH, WIDTH)) * scale),
    )


def make_output(seed=1, n_classes=3, scale=0.5):
    rng = np.random.default_rng(seed)
    return fus.OutputParams(
        weight=ad.Parameter("classifier.weight", rng.normal(size=(WIDTH, n_classes)) * scale),
        bias=ad.Parameter("classifier.bias", rng.normal(size=n_classes) * scale),
    )


def vec(seed, n=WIDTH):
    return ad.Tensor(np.random.default_rng(seed).normal(size=n))


class TestFuse:
    def test_closed_gate_returns_text_vector_exactly(self):
        h, kh = vec(2), vec(3)
        out = fus.fuse(h, kh, make_fusion(), gate_override=0.0)
        assert (out.data == h.data).all()

    def test_open_gate_returns_transformed_features(self):
        h, kh = vec(4), vec(5)
        params = make_fusion()
        out = fus.fuse(h, kh, params, gate_override=1.0)
        features = np.concatenate([h.data, kh.data, h.data * kh.data, h.data - kh.data])
        npt.assert_allclose(out.data, np.tanh(features @ params.transform.data), atol=1e-12)

    def test_output_interpolates_between_endpoints(self):
        rng = np.random.default_rng(6)
        params = make_fusion()
        for seed in range(10):
            h, kh = vec(seed * 2 + 10), vec(seed * 2 + 11)
            z = fus.fuse(h, kh, params).data
            features = np.concatenate(
                [h.data, kh.data, h.data * kh.data, h.data - kh.data]
            )
            x_t = np.tanh(features @ params.transform.data)
            lo = np.minimum(x_t, h.data) - 1e-12
            hi = np.maximum(x_t, h.data) + 1e-12
            assert ((z >= lo) & (z <= hi)).all()

    def test_gate_strictly_inside_unit_interval(self):
        params = make_fusion()
        for seed in range(20):
            h, kh = vec(seed + 50, WIDTH), vec(seed + 90, WIDTH)
            features = ad.concat_last([h, kh, ad.mul(h, kh), ad.sub(h, kh)])
            g = ad.sigmoid(ad.vecmat(features, params.gate)).data
            assert ((g > 0.0) & (g < 1.0)).all()

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ad.ShapeError):
            fus.fuse(vec(1), vec(2, n=WIDTH + 1), make_fusion())

    def test_gradient_vs_finite_differences(self):
        rng = np.random.default_rng(7)
        params = make_fusion(seed=8)
        h = ad.Parameter("h", rng.normal(size=WIDTH))
        kh = ad.Parameter("kh", rng.normal(size=WIDTH))
        r = ad.Tensor(rng.normal(size=WIDTH))

        def f():
            return ad.sum_all(ad.mul(fus.fuse(h, kh, params), r))

        report = ad.grad_check(f, [h, kh, params.transform, params.gate])
        assert report.ok(1e-4), report.failures(1e-4)


class TestClassify:
    def test_zero_weights_give_uniform_distribution(self):
        params = fus.OutputParams(
            weight=ad.Parameter("w", np.zeros((WIDTH, 3))),
            bias=ad.Parameter("b", np.zeros(3)),
        )
        out = fus.classify(vec(9), params)
        npt.assert_allclose(out.data, 1.0 / 3.0, atol=1e-12)

    def test_probability_vector(self):
        out = fus.classify(vec(10), make_output())
        assert (out.data >= 0).all()
        npt.assert_allclose(out.data.sum(), 1.0, atol=1e-6)

    def test_deterministic(self):
        params = make_output()
        z = vec(11)
        npt.assert_array_equal(fus.classify(z, params).data,
                               fus.classify(z, params).data)

    def test_tanh_bound_on_max_probability(self):
        bound = fus.max_probability_bound(3)
        npt.assert_allclose(bound, np.e / (np.e + 2 * np.exp(-1)), atol=1e-12)
        rng = np.random.default_rng(12)
        for seed in range(200):
            params = make_output(seed=seed, scale=5.0)
            z = ad.Tensor(rng.normal(size=WIDTH) * 5)
            out = fus.classify(z, params, head="paper")
            assert out.data.max() <= bound + 1e-4

    def test_linear_head_can_exceed_tanh_bound(self):
        params = fus.OutputParams(
            weight=ad.Parameter("w", np.zeros((WIDTH, 3))),
            bias=ad.Parameter("b", np.array([20.0, 0.0, 0.0])),
        )
        out = fus.classify(vec(13), params, head="linear")
        assert out.data.max() > fus.max_probability_bound(3)

    def test_unknown_head_rejected(self):
        with pytest.raises(ad.ConfigError):
            fus.classify(vec(14), make_output(), head="mlp")


class TestLossDescends:
    """Loss is non-increasing over 50 full-batch steps on a toy set."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_fifty_step_descent(self, seed):
        from lexmatch.train import Adam

        rng = np.random.default_rng(seed)
        n, k = 8, 3
        w = ad.Parameter("w", rng.normal(size=(WIDTH, k)) * 0.1)
        b = ad.Parameter("b", np.zeros(k))
        params = fus.OutputParams(weight=w, bias=b)
        xs = [ad.Tensor(rng.normal(size=WIDTH)) for _ in range(n)]
        labels = np.array([i % k for i in range(n)])
        optimizer = Adam([w, b], lr=1e-3, grad_clip=0.0)
        losses = []
        for _ in range(50):
            ad.zero_grads([w, b])
            with ad.Tape() as tape:
                probs = ad.stack_rows([fus.classify(x, params) for x in xs])
                loss = fus.cross_entropy(probs, labels)
            ad.backward(tape, loss)
            optimizer.step()
            losses.append(loss.item())
        diffs = np.diff(losses)
        assert (diffs <= 1e-9).all(), f"seed {seed}: loss increased: {losses}"
