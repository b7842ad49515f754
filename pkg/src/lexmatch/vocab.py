"""Token vocabulary and the trainable embedding table.

The embedder is a contract: anything mapping a token sequence to an [m, k]
tensor can stand in. The shipped implementation is a lookup table whose PAD
row stays pinned at zero.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np

from . import autodiff as ad

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

MAX_LEN = 128


@dataclass(frozen=True)
class Vocabulary:
    """Injective token -> contiguous id map with reserved PAD=0 and UNK=1."""

    token_to_id: dict[str, int]

    def __len__(self) -> int:
        return len(self.token_to_id)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, tokens: list[str], max_len: int = MAX_LEN) -> np.ndarray:
        """Map tokens to ids, truncated to max_len; empty input becomes [UNK]."""
        ids = [self.id_of(t) for t in tokens[:max_len]]
        if not ids:
            ids = [UNK_ID]
        return np.asarray(ids, dtype=np.int64)

    def to_list(self) -> list[str]:
        items = sorted(self.token_to_id.items(), key=lambda kv: kv[1])
        return [tok for tok, _ in items]

    @classmethod
    def from_list(cls, tokens: list[str]) -> "Vocabulary":
        return cls({tok: i for i, tok in enumerate(tokens)})


def build_vocab(corpus: Iterable[list[str]], min_freq: int = 1) -> Vocabulary:
    """Assign ids to tokens with frequency >= min_freq, ordered by frequency
    descending then lexicographically; deterministic for a fixed corpus."""
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    counts: Counter[str] = Counter()
    empty = True
    for seq in corpus:
        empty = False
        counts.update(seq)
    if empty:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_freq),
        key=lambda tok: (-counts[tok], tok),
    )
    mapping = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
    for tok in kept:
        if tok not in mapping:
            mapping[tok] = len(mapping)
    return Vocabulary(mapping)


class Embedder(Protocol):
    """Pluggable embedding contract: token ids -> [m, k] tensor."""

    embed_dim: int

    def embed(self, ids: np.ndarray) -> ad.Tensor: ...


class EmbeddingTable:
    """Trainable |V| x k lookup table; row PAD_ID is all-zeros and is kept out
    of gradient updates via `zero_pad_grad`."""

    def __init__(self, param: ad.Parameter):
        self.param = param
        self.embed_dim = param.shape[1]

    @classmethod
    def create(
        cls, name: str, vocab_size: int, embed_dim: int, rng: np.random.Generator
    ) -> "EmbeddingTable":
        table = rng.normal(0.0, 0.1, size=(vocab_size, embed_dim))
        table[PAD_ID] = 0.0
        return cls(ad.Parameter(name, table))

    def embed(self, ids: np.ndarray) -> ad.Tensor:
        return ad.lookup(self.param, ids)

    def zero_pad_grad(self) -> None:
        self.param.grad[PAD_ID] = 0.0


def embed(
    tokens: list[str],
    table: EmbeddingTable,
    vocab: Vocabulary,
    max_len: int = MAX_LEN,
) -> ad.Tensor:
    """Embed a token list as an [m, k] tensor, m = min(len(tokens), max_len)."""
    return table.embed(vocab.encode(tokens, max_len))
