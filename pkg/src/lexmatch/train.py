"""Training loop, optimizer, evaluation, and run configuration.

A run is a pure function of (config, data files): parameter init, epoch
shuffling, and dropout all draw from one seeded generator, so two runs with
the same seed produce bit-identical loss curves, and a checkpoint (tensors +
optimizer state + RNG state) resumes mid-run exactly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import data as dio
from .knowledge import (
    DEFAULT_STOPWORDS,
    DictionaryStore,
    Lemmatizer,
    build_pair_knowledge,
    tokenize,
)
from .matching import MatchConfig
from .model import PreparedPair, TextMatchModel
from .vocab import Vocabulary, build_vocab


@dataclass
class RunConfig:
    """Everything a training run needs; unknown keys are rejected."""

    # model
    hidden_size: int = 200
    num_heads: int = 4
    conv_width: int = 3
    num_blocks: int = 2
    dropout: float = 0.2
    embed_dim: int = 200
    max_len: int = 128
    head: str = "paper"
    use_knowledge: bool = True
    use_stopwords: bool = True
    # optimization
    lr: float = 5e-5
    batch_size: int = 48
    epochs: int = 30
    grad_clip: float = 5.0
    min_freq: int = 1
    seed: int = 0
    stop_train_acc: float | None = None
    # paths
    train_path: str = ""
    val_path: str = ""
    test_path: str = ""
    label_map_path: str = ""
    dictionary_path: str = ""
    checkpoint_dir: str = ""

    _POSITIVE = (
        "hidden_size", "num_heads", "conv_width", "num_blocks", "embed_dim",
        "max_len", "lr", "batch_size", "grad_clip", "min_freq",
    )

    def validate(self) -> None:
        for name in self._POSITIVE:
            if getattr(self, name) <= 0:
                raise ad.ConfigError(f"config field {name} must be positive")
        if self.epochs < 0:
            raise ad.ConfigError("epochs must be >= 0")
        self.match_config().validate()

    @classmethod
    def from_dict(cls, values: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls) if not f.name.startswith("_")}
        unknown = set(values) - known
        if unknown:
            raise ad.ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def match_config(self) -> MatchConfig:
        return MatchConfig(
            hidden_size=self.hidden_size,
            num_heads=self.num_heads,
            conv_width=self.conv_width,
            num_blocks=self.num_blocks,
            dropout=self.dropout,
        )


class Adam:
    """Adam with global-norm gradient clipping."""

    def __init__(
        self,
        params: list[ad.Parameter],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        grad_clip: float = 5.0,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.grad_clip = grad_clip
        self.step_count = 0
        self.m = {p.name: np.zeros_like(p.data) for p in params}
        self.v = {p.name: np.zeros_like(p.data) for p in params}

    def step(self) -> None:
        if self.grad_clip > 0:
            total = sum(float((p.grad**2).sum()) for p in self.params)
            norm = np.sqrt(total)
            if norm > self.grad_clip:
                scale = self.grad_clip / norm
                for p in self.params:
                    p.grad *= scale
        self.step_count += 1
        b1c = 1.0 - self.beta1**self.step_count
        b2c = 1.0 - self.beta2**self.step_count
        for p in self.params:
            m = self.m[p.name]
            v = self.v[p.name]
            m += (1.0 - self.beta1) * (p.grad - m)
            v += (1.0 - self.beta2) * (p.grad * p.grad - v)
            p.data -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for name in self.m:
            out[f"optim.m.{name}"] = self.m[name]
            out[f"optim.v.{name}"] = self.v[name]
        return out

    def load_state(self, tensors: dict[str, np.ndarray], step_count: int) -> None:
        for name in self.m:
            self.m[name][...] = tensors[f"optim.m.{name}"]
            self.v[name][...] = tensors[f"optim.v.{name}"]
        self.step_count = step_count


def prepare_split(
    model: TextMatchModel,
    split: dio.DatasetSplit,
    store: DictionaryStore | None,
    stopwords=DEFAULT_STOPWORDS,
) -> list[PreparedPair]:
    """Attach knowledge texts (when a dictionary is given) and encode ids."""
    lem = Lemmatizer()
    prepared = []
    for ex in split:
        ka_tokens = kb_tokens = None
        if store is not None:
            ex.ka, ex.kb = build_pair_knowledge(
                ex.premise_tokens, ex.hypothesis_tokens, store, lem, stopwords
            )
            ka_tokens = tokenize(ex.ka.text)
            kb_tokens = tokenize(ex.kb.text)
        prepared.append(
            model.prepare(ex.premise_tokens, ex.hypothesis_tokens, ex.label,
                          ka_tokens, kb_tokens)
        )
    return prepared


def knowledge_token_corpus(
    split: dio.DatasetSplit, store: DictionaryStore | None, stopwords=DEFAULT_STOPWORDS
) -> list[list[str]]:
    """Token sequences for vocabulary building: sentences plus, when a
    dictionary is present, the knowledge texts they retrieve."""
    lem = Lemmatizer()
    corpus = []
    for ex in split:
        corpus.append(ex.premise_tokens)
        corpus.append(ex.hypothesis_tokens)
        if store is not None:
            ka, kb = build_pair_knowledge(
                ex.premise_tokens, ex.hypothesis_tokens, store, lem, stopwords
            )
            corpus.append(tokenize(ka.text))
            corpus.append(tokenize(kb.text))
    return corpus


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float | None = None
    val_acc: float | None = None


class Trainer:
    """Single-threaded minibatch trainer over prepared pairs."""

    def __init__(
        self,
        model: TextMatchModel,
        optimizer: Adam,
        rng: np.random.Generator,
        batch_size: int,
    ):
        self.model = model
        self.optimizer = optimizer
        self.rng = rng
        self.batch_size = batch_size

    def run_epoch(self, prepared: list[PreparedPair]) -> float:
        order = self.rng.permutation(len(prepared))
        total = 0.0
        seen = 0
        for start in range(0, len(prepared), self.batch_size):
            batch = [prepared[i] for i in order[start : start + self.batch_size]]
            self.model.zero_grads()
            with ad.Tape() as tape:
                loss, _ = self.model.batch_loss(batch, train=True, rng=self.rng)
            ad.backward(tape, loss)
            self.model.after_backward()
            self.optimizer.step()
            total += loss.item() * len(batch)
            seen += len(batch)
        return total / seen


def evaluate(model: TextMatchModel, prepared: list[PreparedPair]) -> float:
    """Classification accuracy with dropout disabled."""
    correct = 0
    for pair in prepared:
        probs = model.forward_pair(pair, train=False)
        if int(np.argmax(probs.data)) == pair.label:
            correct += 1
    return correct / len(prepared)


@dataclass
class TrainResult:
    history: list[EpochStats] = field(default_factory=list)
    best_val_acc: float | None = None
    best_epoch: int | None = None
    trainer: "Trainer | None" = None


def train_model(
    model: TextMatchModel,
    cfg: RunConfig,
    train_pairs: list[PreparedPair],
    val_pairs: list[PreparedPair] | None = None,
    rng: np.random.Generator | None = None,
    log=None,
    on_best=None,
    track_train_acc: bool = False,
) -> TrainResult:
    """Run the configured number of epochs; returns per-epoch stats.

    on_best(trainer, epoch) fires whenever validation accuracy improves
    (ties keep the earlier epoch). stop_train_acc stops early once training
    accuracy reaches the threshold.
    """
    rng = rng or np.random.default_rng(cfg.seed)
    optimizer = Adam(model.params.values(), lr=cfg.lr, grad_clip=cfg.grad_clip)
    trainer = Trainer(model, optimizer, rng, cfg.batch_size)
    result = TrainResult(trainer=trainer)
    want_train_acc = track_train_acc or cfg.stop_train_acc is not None
    for epoch in range(1, cfg.epochs + 1):
        loss = trainer.run_epoch(train_pairs)
        stats = EpochStats(epoch=epoch, loss=loss)
        if want_train_acc:
            stats.train_acc = evaluate(model, train_pairs)
        if val_pairs:
            stats.val_acc = evaluate(model, val_pairs)
            if result.best_val_acc is None or stats.val_acc > result.best_val_acc:
                result.best_val_acc = stats.val_acc
                result.best_epoch = epoch
                if on_best is not None:
                    on_best(trainer, epoch)
        result.history.append(stats)
        if log is not None:
            log(stats)
        if cfg.stop_train_acc is not None and stats.train_acc >= cfg.stop_train_acc:
            break
    return result


# ---------------------------------------------------------------------------
# Checkpoint glue
# ---------------------------------------------------------------------------


def model_state_tensors(model: TextMatchModel) -> dict[str, np.ndarray]:
    return {p.name: p.data for p in model.params}


def save_run_checkpoint(
    path: str,
    model: TextMatchModel,
    cfg: RunConfig,
    label_map: dict[str, int],
    optimizer: Adam | None = None,
    rng: np.random.Generator | None = None,
    epoch: int = 0,
) -> None:
    tensors = dict(model_state_tensors(model))
    optim_meta: dict = {}
    if optimizer is not None:
        tensors.update(optimizer.state_tensors())
        optim_meta = {"step_count": optimizer.step_count, "lr": optimizer.lr}
    dio.save_checkpoint(
        path,
        tensors=tensors,
        config=cfg.to_dict(),
        vocab_tokens=model.vocab.to_list(),
        label_map=label_map,
        optimizer=optim_meta,
        rng_state=rng.bit_generator.state if rng is not None else None,
        epoch=epoch,
    )


def model_from_checkpoint(ckpt: dio.Checkpoint) -> tuple[TextMatchModel, RunConfig]:
    cfg = RunConfig.from_dict(ckpt.config)
    vocab = Vocabulary.from_list(ckpt.vocab_tokens)
    model = TextMatchModel(
        cfg.match_config(),
        vocab,
        n_classes=len(ckpt.label_map),
        embed_dim=cfg.embed_dim,
        use_knowledge=cfg.use_knowledge,
        head=cfg.head,
        max_len=cfg.max_len,
        rng=np.random.default_rng(cfg.seed),
    )
    for p in model.params:
        p.data[...] = ckpt.tensors[p.name]
    return model, cfg


def build_model_for_run(
    cfg: RunConfig,
    train_split: dio.DatasetSplit,
    label_map: dict[str, int],
    store: DictionaryStore | None,
    rng: np.random.Generator,
    stopwords=DEFAULT_STOPWORDS,
) -> TextMatchModel:
    corpus = knowledge_token_corpus(train_split, store, stopwords)
    vocab = build_vocab(corpus, min_freq=cfg.min_freq)
    return TextMatchModel(
        cfg.match_config(),
        vocab,
        n_classes=len(label_map),
        embed_dim=cfg.embed_dim,
        use_knowledge=cfg.use_knowledge,
        head=cfg.head,
        max_len=cfg.max_len,
        rng=rng,
    )
