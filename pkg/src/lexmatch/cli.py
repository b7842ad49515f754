"""Command-line entry point.

Subcommands: train, eval, predict, gradcheck, retrieve. Configuration comes
from a JSON file (strict keys) plus flag overrides. Exit codes: 0 success,
1 usage/config error, 2 data error, 3 gradient-check failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import autodiff as ad
from . import data as dio
from . import train as tr
from .knowledge import (
    DEFAULT_STOPWORDS,
    Lemmatizer,
    build_pair_knowledge,
    load_dictionary,
    retrieve,
    tokenize,
)
from .matching import MatchConfig
from .model import TextMatchModel
from .vocab import build_vocab

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_GRADCHECK = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_config(args) -> tr.RunConfig:
    values: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}", EXIT_USAGE) from exc
        except json.JSONDecodeError as exc:
            raise CliError(f"config is not valid JSON: {exc}", EXIT_USAGE) from exc
    if getattr(args, "seed", None) is not None:
        values["seed"] = args.seed
    if getattr(args, "no_knowledge", False):
        values["use_knowledge"] = False
    if getattr(args, "head", None):
        values["head"] = args.head
    if getattr(args, "blocks", None) is not None:
        values["num_blocks"] = args.blocks
    try:
        return tr.RunConfig.from_dict(values)
    except (ad.ConfigError, TypeError) as exc:
        raise CliError(f"bad config: {exc}", EXIT_USAGE) from exc


def _load_split(path: str, label_map: dict[str, int], name: str) -> dio.DatasetSplit:
    if not path:
        raise CliError(f"no {name} dataset path configured", EXIT_USAGE)
    try:
        return dio.load_pairs(path, label_map, name)
    except OSError as exc:
        raise CliError(f"cannot read {name} split: {exc}", EXIT_DATA) from exc
    except dio.DataError as exc:
        raise CliError(str(exc), EXIT_DATA) from exc


def _load_inputs(cfg: tr.RunConfig):
    try:
        label_map = dio.load_label_map(cfg.label_map_path)
    except OSError as exc:
        raise CliError(f"cannot read label map: {exc}", EXIT_DATA) from exc
    except dio.DataError as exc:
        raise CliError(str(exc), EXIT_DATA) from exc
    store = None
    if cfg.dictionary_path:
        try:
            store = load_dictionary(cfg.dictionary_path)
        except OSError as exc:
            raise CliError(f"cannot read dictionary: {exc}", EXIT_DATA) from exc
        except ValueError as exc:
            raise CliError(str(exc), EXIT_DATA) from exc
    return label_map, store


def _stopwords(cfg: tr.RunConfig):
    return DEFAULT_STOPWORDS if cfg.use_stopwords else frozenset()


def cmd_train(args) -> int:
    cfg = _load_config(args)
    label_map, store = _load_inputs(cfg)
    if cfg.use_knowledge and store is None:
        raise CliError("training with knowledge needs dictionary_path", EXIT_USAGE)
    train_split = _load_split(cfg.train_path, label_map, "train")
    val_split = (
        _load_split(cfg.val_path, label_map, "validation") if cfg.val_path else None
    )
    rng = np.random.default_rng(cfg.seed)
    stop = _stopwords(cfg)
    model = tr.build_model_for_run(cfg, train_split, label_map, store, rng, stop)
    train_prep = tr.prepare_split(model, train_split, store, stop)
    val_prep = tr.prepare_split(model, val_split, store, stop) if val_split else None

    ckpt_dir = cfg.checkpoint_dir or "."
    os.makedirs(ckpt_dir, exist_ok=True)
    best_path = os.path.join(ckpt_dir, "best.ckpt")

    def log(stats: tr.EpochStats) -> None:
        line = f"epoch={stats.epoch} loss={stats.loss:.6f}"
        if stats.val_acc is not None:
            line += f" val_acc={stats.val_acc:.4f}"
        print(line)

    def on_best(trainer: tr.Trainer, epoch: int) -> None:
        tr.save_run_checkpoint(
            best_path, model, cfg, label_map, trainer.optimizer, rng, epoch
        )

    result = tr.train_model(
        model, cfg, train_prep, val_prep, rng=rng, log=log, on_best=on_best
    )
    if cfg.epochs == 0 or val_prep is None:
        optimizer = result.trainer.optimizer if result.trainer else None
        epoch = result.history[-1].epoch if result.history else 0
        tr.save_run_checkpoint(
            best_path, model, cfg, label_map, optimizer, rng, epoch
        )
    if val_prep is not None and result.best_val_acc is not None:
        print(f"best val_acc={result.best_val_acc:.4f} at epoch={result.best_epoch}")
    elif cfg.epochs == 0:
        acc = tr.evaluate(model, train_prep)
        print(f"untrained train_acc={acc:.4f}")
    print(f"checkpoint={best_path}")
    return EXIT_OK


def _restore(checkpoint_path: str):
    try:
        ckpt = dio.load_checkpoint(checkpoint_path)
    except OSError as exc:
        raise CliError(f"cannot read checkpoint: {exc}", EXIT_DATA) from exc
    except dio.CheckpointError as exc:
        raise CliError(str(exc), EXIT_DATA) from exc
    model, cfg = tr.model_from_checkpoint(ckpt)
    return model, cfg, ckpt


def cmd_eval(args) -> int:
    model, cfg, ckpt = _restore(args.checkpoint)
    label_map = {k: int(v) for k, v in ckpt.label_map.items()}
    split = _load_split(args.data, label_map, "eval")
    store = None
    if cfg.use_knowledge:
        dictionary = args.dictionary or cfg.dictionary_path
        if not dictionary:
            raise CliError("model uses knowledge; pass --dictionary", EXIT_USAGE)
        store = load_dictionary(dictionary)
    prepared = tr.prepare_split(model, split, store, _stopwords(cfg))
    labels = {ex.label for ex in split}
    if max(labels) >= len(label_map):
        raise CliError("split labels exceed checkpoint label space", EXIT_DATA)
    acc = tr.evaluate(model, prepared)
    print(f"accuracy={acc:.4f}")
    return EXIT_OK


def cmd_predict(args) -> int:
    if not args.sentence_a.strip() or not args.sentence_b.strip():
        raise CliError("sentences must be nonempty", EXIT_USAGE)
    model, cfg, ckpt = _restore(args.checkpoint)
    tokens_a = tokenize(args.sentence_a)
    tokens_b = tokenize(args.sentence_b)
    if not tokens_a or not tokens_b:
        raise CliError("sentences must contain at least one token", EXIT_USAGE)
    ka_tokens = kb_tokens = None
    if cfg.use_knowledge:
        dictionary = args.dictionary or cfg.dictionary_path
        if not dictionary:
            raise CliError("model uses knowledge; pass --dictionary", EXIT_USAGE)
        store = load_dictionary(dictionary)
        ka, kb = build_pair_knowledge(tokens_a, tokens_b, store,
                                      stopwords=_stopwords(cfg))
        ka_tokens, kb_tokens = tokenize(ka.text), tokenize(kb.text)
    pair = model.prepare(tokens_a, tokens_b, 0, ka_tokens, kb_tokens)
    trace: dict = {}
    probs = model.forward_pair(pair, trace=trace)
    id_to_label = {int(v): k for k, v in ckpt.label_map.items()}
    pred = int(np.argmax(probs.data))
    print(f"label={id_to_label[pred]}")
    for idx in range(len(id_to_label)):
        print(f"p[{id_to_label[idx]}]={probs.data[idx]:.6f}")
    if args.attention:
        dio.export_attention(
            trace["coattn"],
            pair.premise_tokens[: pair.premise_ids.shape[0]],
            pair.hypothesis_tokens[: pair.hypothesis_ids.shape[0]],
            args.attention,
        )
        print(f"attention={args.attention}")
    return EXIT_OK


GRADCHECK_TOLERANCE = 1e-3


def cmd_gradcheck(args) -> int:
    cfg = _load_config(args)
    with ad.using_dtype("float64"):
        rng = np.random.default_rng(cfg.seed)
        words = ["cat", "dog", "bird", "tree", "sky", "red", "blue", "runs",
                 "sits", "fast"]
        vocab = build_vocab([words], min_freq=1)
        model = TextMatchModel(
            _gradcheck_match_config(cfg),
            vocab,
            n_classes=3,
            embed_dim=4,
            use_knowledge=cfg.use_knowledge,
            head=cfg.head,
            rng=rng,
        )
        pairs = _gradcheck_batch(model, rng, words)

        def f():
            loss, _ = model.batch_loss(pairs, train=False)
            return loss

        report = ad.grad_check(f, model.params.values(), eps=1e-5)
    failures = report.failures(GRADCHECK_TOLERANCE)
    for name in model.params.names():
        err = report.max_rel_err[name]
        status = "FAIL" if name in failures else "ok"
        print(f"{status} {name} max_rel_err={err:.3e}")
    worst_name, worst = report.worst()
    print(f"worst={worst_name} {worst:.3e} tolerance={GRADCHECK_TOLERANCE:.0e}")
    return EXIT_GRADCHECK if failures else EXIT_OK


def _gradcheck_match_config(cfg: tr.RunConfig) -> MatchConfig:
    # Deliberately tiny: full finite differences over every entry must finish
    # in minutes. Dropout stays off for determinism.
    return MatchConfig(
        hidden_size=4,
        num_heads=2,
        conv_width=cfg.conv_width,
        num_blocks=cfg.num_blocks,
        dropout=0.0,
    )


def _gradcheck_batch(model: TextMatchModel, rng: np.random.Generator, words):
    def sample(n):
        return [words[int(rng.integers(len(words)))] for _ in range(n)]

    pairs = []
    for label in (0, 1):
        pairs.append(
            model.prepare(sample(3), sample(4), label, sample(5), sample(4))
        )
    return pairs


def cmd_retrieve(args) -> int:
    try:
        store = load_dictionary(args.dictionary)
    except OSError as exc:
        raise CliError(f"cannot read dictionary: {exc}", EXIT_DATA) from exc
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA) from exc
    tokens = tokenize(args.sentence)
    if not tokens:
        raise CliError("sentence must contain at least one token", EXIT_USAGE)
    stop = frozenset() if args.keep_stopwords else DEFAULT_STOPWORDS
    kt = retrieve(tokens, store, Lemmatizer(), stop)
    if kt.text:
        print(f"knowledge: {kt.text}")
    else:
        print("knowledge: <empty>")
    for token, lemma, definition in zip(kt.tokens, kt.lemmas, kt.definitions):
        print(f"  {token}\t{lemma}\t{definition if definition else '-'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexmatch",
        description="Dictionary-enhanced sentence-pair matching",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override RNG seed")
        p.add_argument("--no-knowledge", action="store_true",
                       help="drop the dictionary channel (text-only model)")
        p.add_argument("--head", choices=["paper", "linear"],
                       help="classifier head variant")
        p.add_argument("--blocks", type=int, help="interaction block count")

    p_train = sub.add_parser("train", help="train a model from a config file")
    add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="accuracy of a checkpoint on a split")
    p_eval.add_argument("checkpoint")
    p_eval.add_argument("data", help="TSV split to score")
    p_eval.add_argument("--dictionary", help="dictionary snapshot override")
    p_eval.set_defaults(func=cmd_eval)

    p_pred = sub.add_parser("predict", help="classify one sentence pair")
    p_pred.add_argument("checkpoint")
    p_pred.add_argument("sentence_a")
    p_pred.add_argument("sentence_b")
    p_pred.add_argument("--dictionary", help="dictionary snapshot override")
    p_pred.add_argument("--attention", help="write the co-attention CSV here")
    p_pred.set_defaults(func=cmd_predict)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    add_config_flags(p_grad)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_ret = sub.add_parser("retrieve", help="show the knowledge text of a sentence")
    p_ret.add_argument("dictionary")
    p_ret.add_argument("sentence")
    p_ret.add_argument("--keep-stopwords", action="store_true",
                       help="look up stopwords too")
    p_ret.set_defaults(func=cmd_retrieve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
