"""Command-line entry point: ``spanboost <command> [options]``.

Exit codes: 0 success, 1 unexpected failure, 2 usage error (unknown flag,
bad value), 3 missing file, 4 invalid configuration, 5 malformed input data.
Failures print a single ``error: <ErrorClass>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import crf, embeddings, splits
from .corpus_io import load_subword_vocab, read_corpus, write_corpus
from .crf import EmbeddingBins, FeatureExtractor, TrainConfig
from .ensemble import PREFER_O, PRIORITY, RECIPES, ensemble_documents, load_ensemble_file
from .errors import ConfigError, SpanBoostError
from .evaluation import evaluate
from .pipeline import Preprocessor, tag_documents, train_on_documents, with_dev_stopping
from .tagcodec import check_scheme
from .transfer import load_label_map, transfer_init
from .workspace import Workspace, corpus_tokens, read_kv

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_MISSING, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3, 4, 5

log = logging.getLogger("spanboost")


def _existing(path: str, kind: str = "file") -> Path:
    p = Path(path)
    ok = p.is_dir() if kind == "dir" else p.is_file()
    if not ok:
        raise FileNotFoundError(f"{kind} not found: {path}")
    return p


def _preprocessor(args, scheme: str) -> Preprocessor:
    vocab = load_subword_vocab(_existing(args.subword_vocab)) if args.subword_vocab else None
    return Preprocessor(vocab, args.max_core, args.max_context, scheme)


# ---------------------------------------------------------------------------
# commands


def cmd_embed_train(args) -> int:
    corpus = corpus_tokens(_existing(args.corpus, "dir"))
    base = corpus_tokens(_existing(args.merge, "dir")) if args.merge else None
    variant = args.variant or ("adapted" if base is not None else "base")
    model = embeddings.train_embeddings(
        corpus, args.window, args.dim, args.shift, base_corpus=base, lam=args.lam, variant=variant
    )
    embeddings.save_embeddings(model, args.out)
    if args.export_text:
        embeddings.export_text(model, args.export_text)
    print(f"vocabulary {len(model.vocabulary)} dim {model.dim} variant {model.variant}")
    return EXIT_OK


def cmd_split(args) -> int:
    docs = read_corpus(_existing(args.train, "dir"))
    model = embeddings.load_embeddings(_existing(args.embeddings)) if args.embeddings else None
    vocab = load_subword_vocab(_existing(args.subword_vocab)) if args.subword_vocab else None
    cfg = splits.SplitConfig(args.k, args.pca_dims, args.seed, args.mode)
    plan = splits.make_plan(docs, model, cfg, vocab)
    splits.save_plan(plan, args.out)
    if args.export_2d:
        Path(args.export_2d).write_text(splits.format_plan_2d(splits.export_plan_2d(plan)), encoding="utf-8")
    print("sizes " + " ".join(str(s) for s in plan.sizes))
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    values = read_kv(_existing(args.config)) if args.config else {}
    cfg = TrainConfig.from_mapping(values)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_train(args) -> int:
    scheme = check_scheme(args.scheme)
    cfg = _train_config(args)
    pre = _preprocessor(args, scheme)
    docs = read_corpus(_existing(args.train, "dir"))
    dev = read_corpus(_existing(args.dev, "dir")) if args.dev else None
    if args.plan is not None:
        if args.dev_cluster is None:
            raise ConfigError("--plan needs --dev-cluster")
        if dev is not None:
            raise ConfigError("--dev and --plan are mutually exclusive")
        docs, dev = splits.load_plan(_existing(args.plan)).partition(docs, args.dev_cluster)
    elif args.dev_cluster is not None:
        raise ConfigError("--dev-cluster needs --plan")
    if dev:
        cfg = with_dev_stopping(cfg)

    extractor = None
    if args.embeddings:
        extractor = FeatureExtractor(EmbeddingBins.from_embedding(embeddings.load_embeddings(_existing(args.embeddings))))
    init = None
    if args.init_from:
        aux = crf.load_model(_existing(args.init_from))
        if aux.scheme != scheme:
            raise ConfigError(f"auxiliary model uses {aux.scheme}, not {scheme}")
        label_map = load_label_map(_existing(args.label_map)) if args.label_map else None
        labels = {a.label for d in docs for a in d.annotations}
        init = transfer_init(aux, labels, label_map)
    elif args.label_map:
        raise ConfigError("--label-map needs --init-from")

    model = train_on_documents(docs, dev, cfg, pre, extractor, init, on_epoch=lambda r: log.info("%s", r))
    crf.save_model(model, args.out)
    for r in model.history:
        print(r)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = crf.load_model(_existing(args.model))
    docs = read_corpus(_existing(args.input, "dir"))
    write_corpus(tag_documents(model, docs, _preprocessor(args, model.scheme)), args.out)
    print(f"tagged {len(docs)} documents")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    if (args.members is None) == (args.recipe is None):
        raise ConfigError("give exactly one of --members and --recipe")
    tie_break = args.tie_break
    if args.recipe:
        cfg = load_ensemble_file(_existing(args.recipe))
        paths = list(cfg.members)
        tie_break = tie_break or cfg.tie_break
    else:
        paths = [m for m in args.members.split(",") if m]
    if not paths:
        raise ConfigError("--members is empty")
    models = {p: crf.load_model(_existing(p)) for p in paths}
    schemes = {m.scheme for m in models.values()}
    if len(schemes) != 1:
        raise ConfigError(f"members mix tag schemes: {sorted(schemes)}")
    docs = read_corpus(_existing(args.input, "dir"))
    out, stats = ensemble_documents(models, docs, _preprocessor(args, schemes.pop()), tie_break or PRIORITY, paths)
    write_corpus(out, args.out)
    print(f"members {len(paths)} repaired {stats.repaired}/{stats.positions}")
    return EXIT_OK


def cmd_recipe(args) -> int:
    overrides = {"seed": args.seed} if args.seed is not None else None
    ws = Workspace(args.workspace, overrides)
    sub = ws.run_recipe(args.name, args.jobs)
    print(f"recipe {sub.recipe} members {len(sub.members)} voted {str(sub.voted).lower()}")
    print(f"predictions {ws.root / 'predictions' / args.name}")
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = read_corpus(_existing(args.gold, "dir"))
    pred = read_corpus(_existing(args.pred, "dir"))
    report = evaluate(gold, pred)
    print(report.to_text(args.per_label), end="")
    if args.tsv:
        Path(args.tsv).write_text(report.to_tsv(), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"error: UsageError: {message}\n")


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _add_preprocessing(p):
    p.add_argument("--subword-vocab", help="one subword per line; words split greedily into known pieces")
    p.add_argument("--max-core", type=_positive, default=300)
    p.add_argument("--max-context", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spanboost", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed-train", help="train PPMI+SVD embeddings")
    p.add_argument("--corpus", required=True, help="directory of .txt files")
    p.add_argument("--window", type=_positive, default=embeddings.DEFAULT_WINDOW)
    p.add_argument("--dim", type=_positive, default=100)
    p.add_argument("--shift", type=float, default=embeddings.DEFAULT_SHIFT)
    p.add_argument("--merge", metavar="BASE", help="base corpus directory; counts are interpolated with --corpus")
    p.add_argument("--lambda", dest="lam", type=float, default=embeddings.DEFAULT_LAMBDA)
    p.add_argument("--variant", help="name stored in the file")
    p.add_argument("--export-text", help="also write a word2vec-style text file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed_train)

    p = sub.add_parser("split", help="plan k-fold document splits")
    p.add_argument("--train", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--pca-dims", type=int, default=5)
    p.add_argument("--mode", choices=(splits.STRATEGIC, splits.RANDOM), default=splits.STRATEGIC)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subword-vocab")
    p.add_argument("--export-2d", help="write doc_id/x/y/cluster rows for plotting")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a CRF tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--scheme", default="biose", type=str.upper, choices=("BIO", "BIOSE"))
    p.add_argument("--config", help="key=value training options")
    p.add_argument("--plan")
    p.add_argument("--dev-cluster", type=int)
    p.add_argument("--dev", help="explicit dev directory (stops on dev F1)")
    p.add_argument("--init-from", metavar="AUXMODEL")
    p.add_argument("--label-map")
    p.add_argument("--embeddings", help="add binned embedding features")
    p.add_argument("--seed", type=int)
    _add_preprocessing(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag documents with one model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    _add_preprocessing(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ensemble", help="majority vote over several models")
    p.add_argument("--members", help="comma-separated model files, highest priority first")
    p.add_argument("--recipe", help="file with members=... and tie_break=... lines")
    p.add_argument("--tie-break", choices=(PRIORITY, PREFER_O), help="default: priority")
    p.add_argument("--input", required=True)
    _add_preprocessing(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("recipe", help="run a submission recipe end to end")
    p.add_argument("--name", required=True, type=str.lower, choices=RECIPES)
    p.add_argument("--workspace", help="defaults to $SPANBOOST_WORKSPACE")
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_recipe)

    p = sub.add_parser("eval", help="entity-level exact-match scores")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--per-label", action="store_true")
    p.add_argument("--tsv")
    p.set_defaults(func=cmd_eval)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    msg = " ".join(str(exc).split()) or exc.__class__.__name__
    print(f"error: {exc.__class__.__name__}: {msg}", file=sys.stderr)
    return code


OUTPUT_FILES = ("out", "export_text", "export_2d", "tsv")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        # output files may live in directories that do not exist yet
        for name in OUTPUT_FILES:
            if getattr(args, name, None):
                Path(getattr(args, name)).parent.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except FileNotFoundError as e:
        return _fail(EXIT_MISSING, e)
    except ConfigError as e:
        return _fail(EXIT_CONFIG, e)
    except SpanBoostError as e:
        return _fail(EXIT_DATA, e)
    except Exception as e:  # noqa: BLE001
        return _fail(EXIT_FAILURE, e)


if __name__ == "__main__":
    sys.exit(main())
