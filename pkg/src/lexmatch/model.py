"""Full sentence-pair model: embedding, matching stack, gated fusion, head.

Parameters are created once, in a fixed order, from a seeded generator, and
registered under unique dotted names; the knowledge pass reuses the matching
parameters of the text pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import fusion as fus
from . import matching as mt
from .autodiff import Parameter, Tensor
from .vocab import MAX_LEN, PAD_ID, EmbeddingTable, Vocabulary


class ParamSet:
    """Ordered name -> Parameter registry; names must be unique."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, data: np.ndarray) -> Parameter:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Parameter(name, data)
        self._params[name] = p
        return p

    def names(self) -> list[str]:
        return list(self._params)

    def values(self) -> list[Parameter]:
        return list(self._params.values())

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)


def glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = int(np.prod(shape[:-1]))
    fan_out = int(shape[-1])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class PreparedPair:
    """Token-id views of one example, ready for the forward pass."""

    premise_ids: np.ndarray
    hypothesis_ids: np.ndarray
    ka_ids: np.ndarray | None
    kb_ids: np.ndarray | None
    label: int
    premise_tokens: list[str]
    hypothesis_tokens: list[str]


class TextMatchModel:
    """Pair classifier with an optional dictionary-knowledge channel."""

    def __init__(
        self,
        match_cfg: mt.MatchConfig,
        vocab: Vocabulary,
        n_classes: int,
        embed_dim: int | None = None,
        use_knowledge: bool = True,
        head: str = "paper",
        max_len: int = MAX_LEN,
        rng: np.random.Generator | None = None,
    ):
        match_cfg.validate()
        if head not in ("paper", "linear"):
            raise ad.ConfigError(f"head must be paper|linear, got {head!r}")
        rng = rng or np.random.default_rng(0)
        self.cfg = match_cfg
        self.vocab = vocab
        self.n_classes = n_classes
        self.embed_dim = embed_dim or match_cfg.hidden_size
        self.use_knowledge = use_knowledge
        self.head = head
        self.max_len = max_len
        self.params = ParamSet()
        self._build(rng)

    # -- construction -----------------------------------------------------

    def _ff(self, name: str, n_in: int, n_out: int, rng) -> mt.FeedForwardParams:
        return mt.FeedForwardParams(
            w=self.params.add(f"{name}.w", glorot(rng, (n_in, n_out))),
            b=self.params.add(f"{name}.b", np.zeros(n_out)),
        )

    def _build(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        d, k = cfg.hidden_size, self.embed_dim
        half = d // 2

        table = rng.normal(0.0, 0.1, size=(len(self.vocab), k))
        table[PAD_ID] = 0.0
        self.embedding = EmbeddingTable(self.params.add("embed.table", table))

        blocks = []
        for t in range(cfg.num_blocks):
            pfx = f"block{t}"
            input_proj = None
            if t > 0:
                input_proj = self._ff(f"{pfx}.input_proj", d + k, k, rng)
            attn_in = half + k
            attn = mt.AttentionParams(
                wq=self.params.add(f"{pfx}.attn.wq", glorot(rng, (attn_in, half))),
                bq=self.params.add(f"{pfx}.attn.bq", np.zeros(half)),
                wk=self.params.add(f"{pfx}.attn.wk", glorot(rng, (attn_in, half))),
                bk=self.params.add(f"{pfx}.attn.bk", np.zeros(half)),
                wv=self.params.add(f"{pfx}.attn.wv", glorot(rng, (attn_in, half))),
                bv=self.params.add(f"{pfx}.attn.bv", np.zeros(half)),
                wo=self.params.add(f"{pfx}.attn.wo", glorot(rng, (half, half))),
                bo=self.params.add(f"{pfx}.attn.bo", np.zeros(half)),
            )
            blocks.append(
                mt.BlockParams(
                    conv_filters=self.params.add(
                        f"{pfx}.conv.filters", glorot(rng, (cfg.conv_width, k, half))
                    ),
                    conv_bias=self.params.add(f"{pfx}.conv.bias", np.zeros(half)),
                    attn=attn,
                    coattn_left=self.params.add(f"{pfx}.coattn.left", glorot(rng, (d, d))),
                    coattn_right=self.params.add(f"{pfx}.coattn.right", glorot(rng, (d, d))),
                    agg_cat=self._ff(f"{pfx}.agg.cat", 2 * d, d, rng),
                    agg_diff=self._ff(f"{pfx}.agg.diff", 2 * d, d, rng),
                    agg_prod=self._ff(f"{pfx}.agg.prod", 2 * d, d, rng),
                    agg_combine=self._ff(f"{pfx}.agg.combine", 3 * d, d, rng),
                    input_proj=input_proj,
                )
            )
        bidi = mt.BidiParams(
            sim_left=self.params.add("bidi.sim_left", glorot(rng, (d, 1))[:, 0]),
            sim_right=self.params.add("bidi.sim_right", glorot(rng, (d, 1))[:, 0]),
            sim_prod=self.params.add("bidi.sim_prod", glorot(rng, (d, 1))[:, 0]),
        )
        self.match_params = mt.MatchParams(blocks=blocks, bidi=bidi)

        pooled = 8 * d
        if self.use_knowledge:
            self.fusion = fus.FusionParams(
                transform=self.params.add("fusion.transform", glorot(rng, (4 * pooled, pooled))),
                gate=self.params.add("fusion.gate", glorot(rng, (4 * pooled, pooled))),
            )
        else:
            self.fusion = None
        self.output = fus.OutputParams(
            weight=self.params.add("classifier.weight", glorot(rng, (pooled, self.n_classes))),
            bias=self.params.add("classifier.bias", np.zeros(self.n_classes)),
        )

    # -- forward ----------------------------------------------------------

    def _match_side(
        self,
        a_ids: np.ndarray,
        b_ids: np.ndarray,
        train: bool,
        rng: np.random.Generator | None,
        trace: dict | None = None,
    ) -> Tensor:
        xa = self.embedding.embed(a_ids)
        xb = self.embedding.embed(b_ids)
        valid_a = a_ids != PAD_ID
        valid_b = b_ids != PAD_ID
        return mt.match(
            xa,
            xb,
            self.cfg,
            self.match_params,
            valid_x=None if valid_a.all() else valid_a,
            valid_y=None if valid_b.all() else valid_b,
            train=train,
            rng=rng,
            trace=trace,
        )

    def forward_pair(
        self,
        pair: PreparedPair,
        train: bool = False,
        rng: np.random.Generator | None = None,
        gate_override: np.ndarray | float | None = None,
        ablate_knowledge: bool = False,
        trace: dict | None = None,
    ) -> Tensor:
        """Class-probability vector for one example.

        gate_override and ablate_knowledge are test/ablation hooks; the
        latter reuses the text path only, as a knowledge-free model would.
        """
        h = self._match_side(pair.premise_ids, pair.hypothesis_ids, train, rng, trace)
        use_k = self.use_knowledge and not ablate_knowledge
        if use_k:
            if pair.ka_ids is None or pair.kb_ids is None:
                raise ValueError("example has no knowledge texts; retrieve them first")
            kh = self._match_side(pair.ka_ids, pair.kb_ids, train, rng)
            z = fus.fuse(h, kh, self.fusion, gate_override=gate_override)
        else:
            z = h
        return fus.classify(z, self.output, head=self.head)

    def batch_loss(
        self,
        pairs: list[PreparedPair],
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[Tensor, np.ndarray]:
        """Mean cross-entropy over a batch plus the stacked probabilities."""
        probs = [self.forward_pair(p, train=train, rng=rng) for p in pairs]
        stacked = ad.stack_rows(probs)
        labels = np.asarray([p.label for p in pairs], dtype=np.int64)
        return ad.cross_entropy(stacked, labels), stacked.data

    # -- bookkeeping -------------------------------------------------------

    def zero_grads(self) -> None:
        ad.zero_grads(self.params)

    def after_backward(self) -> None:
        """Pin the PAD embedding row: its gradient never reaches the optimizer."""
        self.embedding.zero_pad_grad()

    def prepare(
        self,
        premise_tokens: list[str],
        hypothesis_tokens: list[str],
        label: int,
        ka_tokens: list[str] | None = None,
        kb_tokens: list[str] | None = None,
    ) -> PreparedPair:
        def enc(tokens: list[str]) -> np.ndarray:
            return self.vocab.encode(tokens, self.max_len)

        return PreparedPair(
            premise_ids=enc(premise_tokens),
            hypothesis_ids=enc(hypothesis_tokens),
            ka_ids=enc(ka_tokens) if ka_tokens is not None else None,
            kb_ids=enc(kb_tokens) if kb_tokens is not None else None,
            label=label,
            premise_tokens=list(premise_tokens),
            hypothesis_tokens=list(hypothesis_tokens),
        )
