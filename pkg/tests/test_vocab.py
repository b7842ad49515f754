"""Vocabulary construction and embedding-table contracts."""

import numpy as np
import numpy.testing as npt
import pytest

from lexmatch import autodiff as ad
from lexmatch.vocab import (
    PAD_ID,
    PAD_TOKEN,
    UNK_ID,
    UNK_TOKEN,
    EmbeddingTable,
    Vocabulary,
    build_vocab,
    embed,
)


class TestBuildVocab:
    def test_min_freq_filters(self):
        vocab = build_vocab([["a", "a", "b"]], min_freq=2)
        assert set(vocab.token_to_id) == {PAD_TOKEN, UNK_TOKEN, "a"}

    def test_min_freq_one_keeps_everything(self):
        vocab = build_vocab([["x", "y"], ["z"]], min_freq=1)
        assert set(vocab.token_to_id) == {PAD_TOKEN, UNK_TOKEN, "x", "y", "z"}

    def test_reserved_ids(self):
        vocab = build_vocab([["a"]])
        assert vocab.token_to_id[PAD_TOKEN] == PAD_ID
        assert vocab.token_to_id[UNK_TOKEN] == UNK_ID

    def test_ids_contiguous_and_injective(self):
        vocab = build_vocab([["b", "a", "b", "c", "c", "c"]])
        ids = sorted(vocab.token_to_id.values())
        assert ids == list(range(len(vocab)))

    def test_deterministic_rebuild(self):
        corpus = [["m", "z", "a", "z"], ["a", "q", "z"]]
        assert build_vocab(corpus).token_to_id == build_vocab(corpus).token_to_id

    def test_frequency_then_lexicographic_order(self):
        vocab = build_vocab([["b", "b", "c", "a"]])
        assert vocab.token_to_id["b"] == 2
        assert vocab.token_to_id["a"] == 3
        assert vocab.token_to_id["c"] == 4

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([])

    def test_roundtrip_through_list(self):
        vocab = build_vocab([["b", "a"]])
        assert Vocabulary.from_list(vocab.to_list()).token_to_id == vocab.token_to_id


class TestEmbed:
    def setup_method(self):
        self.vocab = build_vocab([["cat", "dog", "bird"]])
        self.rng = np.random.default_rng(0)
        self.table = EmbeddingTable.create("embed.table", len(self.vocab), 6, self.rng)

    def test_output_shape(self):
        out = embed(["cat", "dog"], self.table, self.vocab)
        assert out.shape == (2, 6)

    def test_truncation_to_max_len(self):
        out = embed(["cat"] * 300, self.table, self.vocab, max_len=128)
        assert out.shape == (128, 6)

    def test_oov_tokens_share_the_unk_row(self):
        out = embed(["xxx", "yyy", "zzz"], self.table, self.vocab)
        npt.assert_array_equal(out.data[0], out.data[1])
        npt.assert_array_equal(out.data[0], self.table.param.data[UNK_ID])

    def test_empty_after_truncation_becomes_unk(self):
        out = embed([], self.table, self.vocab)
        assert out.shape == (1, 6)
        npt.assert_array_equal(out.data[0], self.table.param.data[UNK_ID])

    def test_pad_row_is_zero_at_creation(self):
        npt.assert_array_equal(self.table.param.data[PAD_ID], np.zeros(6))

    def test_gradient_flows_only_to_looked_up_rows(self):
        ids = self.vocab.encode(["cat", "dog", "cat"])
        with ad.Tape() as tape:
            loss = ad.sum_all(self.table.embed(ids))
        ad.backward(tape, loss)
        grad = self.table.param.grad
        cat_id = self.vocab.id_of("cat")
        dog_id = self.vocab.id_of("dog")
        npt.assert_array_equal(grad[cat_id], np.full(6, 2.0))
        npt.assert_array_equal(grad[dog_id], np.full(6, 1.0))
        untouched = [i for i in range(len(self.vocab)) if i not in (cat_id, dog_id)]
        npt.assert_array_equal(grad[untouched], 0.0)

    def test_lookup_gradient_vs_finite_differences(self):
        with ad.using_dtype("float64"):
            rng = np.random.default_rng(1)
            table = EmbeddingTable.create("t", 5, 3, rng)
            ids = np.array([2, 4, 2])
            probe = ad.Tensor(rng.normal(size=(3, 3)))

            def f():
                return ad.sum_all(ad.mul(table.embed(ids), probe))

            report = ad.grad_check(f, [table.param])
            assert report.ok(1e-4), report.max_rel_err
