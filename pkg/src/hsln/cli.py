"""Command-line interface.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .checkpoint import load_checkpoint, save_checkpoint
from .crf import export_transitions
from .data import parse_rct, serialize_rct, write_rct
from .errors import (ContractError, CorruptCheckpointError, EmptyCorpusError, FormatError,
                     LabelError, NumericalDomainError, ParseError, TrainingError)
from .metrics import evaluate, format_report, metrics_block
from .synthetic import GRAMMARS, context_spec, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

logger = logging.getLogger("hsln")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _existing(path, what):
    if path is None or not Path(path).exists():
        raise UsageError(f"{what} not found: {path}")
    return path


def build_config(args):
    """Preset, then config file, then ``--set`` pairs, then explicit flags."""
    cfg = cfgmod.preset(args.preset) if args.preset else cfgmod.TrainConfig()
    flat = {}
    if args.config:
        flat.update(cfgmod.read_config_file(_existing(args.config, "config file")))
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        flat[k.strip()] = v.strip()
    for key in ("seed", "epochs", "batch_size"):
        value = getattr(args, key, None)
        if value is not None:
            flat[key] = str(value)
    cfg = cfgmod.from_flat(flat, cfg)
    for name in args.ablate or []:
        cfgmod.apply_ablation(cfg, name)
    return cfgmod.validate(cfg)


def cmd_train(args):
    from .trainer import train
    cfg = build_config(args)
    train_corpus = parse_rct(_existing(args.train, "training corpus"), split="train",
                             lowercase=cfg.lowercase, normalize_digits=cfg.normalize_digits)
    val_corpus = parse_rct(_existing(args.val, "validation corpus"), train_corpus.label_set,
                           split="validation", lowercase=cfg.lowercase,
                           normalize_digits=cfg.normalize_digits)
    emb = args.emb
    if emb is not None and not Path(emb).exists():
        logger.warning("embedding file %s not found; using seeded random vectors", emb)
        emb = None
    elif emb is None:
        logger.warning("no embedding file given; using seeded random vectors")
    print("labels: " + ", ".join(f"{i}={n}" for i, n in enumerate(train_corpus.label_set)))
    print(f"train: {len(train_corpus)} abstracts, {train_corpus.n_sentences} sentences")
    log_path = args.log or str(Path(args.out).with_suffix(".log"))
    ckpt = train(cfg, train_corpus, val_corpus, emb, log_path)
    save_checkpoint(ckpt, args.out)
    print(f"best epoch {ckpt.epoch}: validation weighted F1 {100 * ckpt.val_weighted_f1:.1f}")
    print(f"checkpoint: {args.out}\nlog: {log_path}")
    return EXIT_OK


def _load(args):
    return load_checkpoint(_existing(args.model, "checkpoint"))


def cmd_evaluate(args):
    ckpt = _load(args)
    corpus = parse_rct(_existing(args.test, "test corpus"), split="test",
                       lowercase=ckpt.config.lowercase, normalize_digits=ckpt.config.normalize_digits)
    if corpus.label_set != ckpt.label_set and not set(corpus.label_set) <= set(ckpt.label_set):
        raise LabelError(f"corpus labels {list(corpus.label_set)} do not match checkpoint labels "
                         f"{list(ckpt.label_set)}")
    if corpus.label_set != ckpt.label_set:
        corpus = parse_rct(args.test, ckpt.label_set, split="test", lowercase=ckpt.config.lowercase,
                           normalize_digits=ckpt.config.normalize_digits)
    model = ckpt.to_model()
    pred = model.predict(list(corpus.abstracts), ckpt.vocab)
    report = evaluate(pred, corpus.label_paths(), ckpt.label_set)
    sys.stdout.write(format_report(report))
    if args.out:
        Path(args.out).write_text(metrics_block(report), encoding="utf-8")
    return EXIT_OK


def cmd_predict(args):
    ckpt = _load(args)
    corpus = parse_rct(_existing(args.input, "input corpus"), ckpt.label_set, split="test",
                       lowercase=ckpt.config.lowercase, normalize_digits=ckpt.config.normalize_digits,
                       require_labels=False)
    pred = ckpt.to_model().predict(list(corpus.abstracts), ckpt.vocab)
    if args.out:
        write_rct(corpus, args.out, labels=pred)
    else:
        sys.stdout.write(serialize_rct(corpus, labels=pred))
    return EXIT_OK


def cmd_export_transitions(args):
    ckpt = _load(args)
    if not ckpt.config.model.use_crf:
        raise UsageError("checkpoint was trained without the CRF layer; it has no transitions")
    text = export_transitions(ckpt.params["crf.T"], ckpt.label_set)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_grad_check(args):
    from .gradcheck import check_model_gradients
    result = check_model_gradients(seed=args.seed, kind=args.kind)
    for name, err in result.errors.items():
        print(f"{name:32s} {err:.3e}")
    print(f"parameters={result.n_parameters} max_relative_error={result.max_error:.6e}")
    if not result.passed(args.tol):
        print(f"FAILED: max relative error >= {args.tol}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_make_synthetic(args):
    if args.grammar == "context":
        spec = context_spec(0.3 if args.ambiguity is None else args.ambiguity)
    else:
        spec = GRAMMARS[args.grammar]()
        spec.ambiguity = args.ambiguity or 0.0
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sizes = {"train": args.train, "validation": args.val, "test": args.test}
    offset = 0
    for i, (split, n) in enumerate(sizes.items()):
        corpus = generate(n, args.seed + 1000 * i, spec, split, offset)
        offset += n
        write_rct(corpus, out / f"{split if split != 'validation' else 'dev'}.txt")
        print(f"{split}: {n} abstracts, {corpus.n_sentences} sentences")
    return EXIT_OK


def make_parser():
    p = _Parser(prog="hsln", description="Hierarchical sequential sentence classification.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model and write the best checkpoint")
    t.add_argument("--preset", choices=cfgmod.PRESETS)
    t.add_argument("--config", help="flat key = value configuration file")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one setting")
    t.add_argument("--ablate", action="append", choices=cfgmod.ABLATIONS)
    t.add_argument("--train", required=True)
    t.add_argument("--val", required=True)
    t.add_argument("--emb", help="word2vec text-format embeddings")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--log", help="training log (default: <out>.log)")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", dest="batch_size", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="score a checkpoint on a labeled corpus")
    e.add_argument("--model", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--out", help="write key=value metrics here")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("predict", help="label the sentences of a corpus file")
    r.add_argument("--model", required=True)
    r.add_argument("--input", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_predict)

    x = sub.add_parser("export-transitions", help="print the learned transition matrix")
    x.add_argument("--model", required=True)
    x.add_argument("--out")
    x.set_defaults(func=cmd_export_transitions)

    g = sub.add_parser("grad-check", help="finite-difference check of all model gradients")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--kind", choices=("rnn", "cnn"), default="rnn")
    g.add_argument("--tol", type=float, default=1e-3)
    g.set_defaults(func=cmd_grad_check)

    s = sub.add_parser("make-synthetic", help="write grammar-generated train/dev/test corpora")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--grammar", choices=("canonical", "fixed", "context"), default="canonical")
    s.add_argument("--ambiguity", type=float,
                   help="B/O content ambiguity (default 0.3 for context, 0 otherwise)")
    s.add_argument("--train", type=int, default=500)
    s.add_argument("--val", type=int, default=100)
    s.add_argument("--test", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_make_synthetic)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, LabelError, EmptyCorpusError, FormatError, CorruptCheckpointError,
            FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, NumericalDomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
