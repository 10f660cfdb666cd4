"""Command-line interface.

Subcommands mirror the pipeline stages:

* ``prepare``  standoff corpus -> tokenized label frames + drop report
* ``train``    prepared dataset -> one best-dev checkpoint per seed
* ``predict``  checkpoint + standoff input -> one .a2 per document
* ``score``    prediction dirs vs gold dir -> report (mean/std over runs)
* ``ablate``   prepared dataset -> comparative table over merging strategies

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.
Every failure prints a single ``bioevents: error: <Type>: <reason>`` line
to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .codec import LabelSchema
from .errors import BioeventsError, TrainingDiverged, UsageError
from .model import STRATEGIES, save_checkpoint
from .scoring import (
    APPROXIMATE,
    MODES,
    aggregate_runs,
    aggregate_table,
    score_corpus,
    DocView,
)
from .standoff import read_document, read_corpus, serialize_events
from .training import (
    RunConfig,
    ablate,
    ablation_table,
    build_vocab,
    drop_report,
    load_examples,
    load_model,
    load_run_config,
    predict_document,
    prepare_documents,
    save_examples,
    train_run,
)
from .vocab import SubwordVocab

PROG = "bioevents"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


# --------------------------------------------------------------------------
# argument parsing


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    """Flags overriding config-file keys of the same name."""
    p.add_argument("--config", help="key: value config file")
    p.add_argument("--strategy", help=f"merging strategy, one of {', '.join(STRATEGIES)}")
    p.add_argument("--encoder", help="'toy' or a pretrained transformer name")
    p.add_argument("--seeds", help="comma-separated seed list, e.g. 1,2,3")
    p.add_argument("--epochs", help="training epochs")
    p.add_argument("--batch-size", dest="batch_size", help="sentences per optimizer step")
    p.add_argument("--learning-rate", dest="learning_rate", help="Adam step size or 'auto'")
    p.add_argument("--d", help="encoder hidden width (toy encoder)")
    p.add_argument("--k", help="attention head count")
    p.add_argument("--d-h", dest="d_h", help="attention head size (default d)")
    p.add_argument("--dropout", help="classifier dropout rate")
    p.add_argument("--layer-dropout", dest="layer_dropout", help="encoder dropout rate")
    p.add_argument("--max-len", dest="max_len", help="maximum tokens per sentence")
    p.add_argument("--label-set", dest="label_set", help="ge11 or ge13")
    p.add_argument("--select-by", dest="select_by", help="dev metric: event or trigger")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG, description="Multi-layer sequence-labeling event extractor."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="tokenize and label a standoff corpus")
    _add_model_flags(p)
    p.add_argument("--train", help="directory of .txt/.a1/.a2 training documents")
    p.add_argument("--dev", help="directory of development documents")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument(
        "--strict", action="store_true", help="fail on label collisions instead of counting"
    )
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train one model per seed on a prepared dataset")
    _add_model_flags(p)
    p.add_argument("--data", required=True, help="directory written by prepare")
    p.add_argument("--dev", help="override the dev document directory")
    p.add_argument("--out-dir", dest="out_dir", help="checkpoint output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write .a2 predictions for standoff input")
    p.add_argument("--checkpoint", required=True, help="checkpoint file from train")
    p.add_argument("--input", required=True, help="directory of .txt/.a1 documents")
    p.add_argument("--out-dir", dest="out_dir", required=True, help="directory for .a2 files")
    p.add_argument("--vocab", help="vocabulary file (default: vocab.json next to checkpoint)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("score", help="score prediction directories against gold")
    p.add_argument(
        "--pred",
        action="append",
        required=True,
        help="directory of predicted .a2 files; repeat for multi-run mean/std",
    )
    p.add_argument("--gold", required=True, help="directory of gold .txt/.a1/.a2 documents")
    p.add_argument("--mode", choices=MODES, default=APPROXIMATE, help="event matching mode")
    p.add_argument("--out-dir", dest="out_dir", help="directory for report files")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ablate", help="compare merging strategies on one dataset")
    _add_model_flags(p)
    p.add_argument("--data", required=True, help="directory written by prepare")
    p.add_argument(
        "--strategies",
        help=f"comma-separated subset of {{{','.join(STRATEGIES)}}} (default: all)",
    )
    p.add_argument("--eval", dest="eval_dir", help="standoff directory to score on")
    p.add_argument("--out-dir", dest="out_dir", help="output directory for the table")
    p.set_defaults(func=cmd_ablate)

    return parser


_OVERRIDE_KEYS = (
    "train",
    "dev",
    "out_dir",
    "label_set",
    "encoder",
    "strategy",
    "d",
    "k",
    "d_h",
    "dropout",
    "layer_dropout",
    "batch_size",
    "learning_rate",
    "epochs",
    "max_len",
    "seeds",
    "select_by",
)


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS if hasattr(args, k)}
    return load_run_config(args.config, overrides)


def _require_dir(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing {what}")
    p = Path(path)
    if not p.is_dir():
        raise BioeventsError(f"{what} {path!r} is not a directory")
    return p


def _read_standoff_dir(path: str | None, what: str) -> list:
    docs = read_corpus(_require_dir(path, what))
    if not docs:
        raise BioeventsError(f"no .txt documents under {what} {path!r}")
    return docs


# --------------------------------------------------------------------------
# subcommands


def cmd_prepare(args: argparse.Namespace) -> int:
    run = _run_config(args)
    train_docs = _read_standoff_dir(run.train, "--train directory")
    out = Path(run.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    schema = run.schema()
    vocab = build_vocab(train_docs)
    prep = prepare_documents(train_docs, vocab, schema, strict=args.strict)
    report = {"train": drop_report(prep)}
    save_examples(out / "train.jsonl", prep.examples)

    if run.dev:
        dev_docs = _read_standoff_dir(run.dev, "--dev directory")
        dev_prep = prepare_documents(dev_docs, vocab, schema, strict=args.strict)
        report["dev"] = drop_report(dev_prep)
        save_examples(out / "dev.jsonl", dev_prep.examples)

    vocab.save(out / "vocab.json")
    (out / "schema.json").write_text(json.dumps(schema.to_json(), indent=2) + "\n")
    meta = {
        "label_set": run.label_set,
        "train_dir": str(Path(run.train).resolve()),
        "dev_dir": str(Path(run.dev).resolve()) if run.dev else None,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")

    for split, rep in report.items():
        print(
            f"{split}: {rep['sentences']} sentences, {rep['argument_links']} argument links, "
            f"{rep['dropped_by_distance']} dropped by distance ({rep['drop_rate']:.2%})"
        )
    print(f"wrote {out}")
    return EXIT_OK


def _load_prepared(data_dir: str):
    data = _require_dir(data_dir, "--data directory")
    for name in ("vocab.json", "schema.json", "train.jsonl", "meta.json"):
        if not (data / name).exists():
            raise BioeventsError(f"prepared dataset is missing {name} under {data_dir!r}")
    vocab = SubwordVocab.load(data / "vocab.json")
    schema = LabelSchema.from_json(json.loads((data / "schema.json").read_text()))
    examples = load_examples(data / "train.jsonl")
    meta = json.loads((data / "meta.json").read_text())
    return data, vocab, schema, examples, meta


def cmd_train(args: argparse.Namespace) -> int:
    run = _run_config(args)
    _data, vocab, schema, examples, meta = _load_prepared(args.data)
    dev_dir = args.dev or meta.get("dev_dir")
    dev_docs = _read_standoff_dir(dev_dir, "--dev directory") if dev_dir else None

    out = Path(run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_lines: list[str] = []

    def log_fn(line: str) -> None:
        log_lines.append(line)
        print(line)

    results = train_run(run, schema, vocab, examples, dev_docs, log_fn=log_fn)
    summary = {}
    for res in results:
        ckpt = out / f"checkpoint_seed{res.seed}.pt"
        save_checkpoint(ckpt, res.model, vocab)
        summary[res.seed] = {
            "checkpoint": ckpt.name,
            "best_epoch": res.best_epoch,
            "best_metric": res.best_metric,
            "final_loss": res.log[-1].loss if res.log else None,
        }
        picked = (
            f"best dev {run.select_by} F1 {res.best_metric:.4f} at epoch {res.best_epoch}"
            if dev_docs
            else "final weights (no dev set)"
        )
        print(f"seed {res.seed}: saved {ckpt.name} ({picked})")
    vocab.save(out / "vocab.json")
    (out / "train_log.txt").write_text("\n".join(log_lines) + "\n")
    (out / "train_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.is_file():
        raise BioeventsError(f"checkpoint {args.checkpoint!r} does not exist")
    vocab_path = Path(args.vocab) if args.vocab else ckpt.parent / "vocab.json"
    if not vocab_path.is_file():
        raise BioeventsError(f"vocabulary file {str(vocab_path)!r} does not exist")
    vocab = SubwordVocab.load(vocab_path)
    model = load_model(ckpt, vocab)

    docs = _read_standoff_dir(args.input, "--input directory")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    total = 0
    for doc in docs:
        pred = predict_document(model, doc, vocab)
        (out / f"{doc.doc_id}.a2").write_text(serialize_events(doc, pred.events))
        total += len(pred.events)
    print(f"wrote {len(docs)} .a2 files ({total} events) to {out}")
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    gold_dir = _require_dir(args.gold, "--gold directory")
    gold_txts = sorted(gold_dir.glob("*.txt"))
    if not gold_txts:
        raise BioeventsError(f"no .txt documents under --gold directory {args.gold!r}")

    reports = []
    for pred in args.pred:
        pred_dir = _require_dir(pred, "--pred directory")
        preds, golds = {}, {}
        for txt in gold_txts:
            gold_doc = read_document(txt)
            a2 = pred_dir / f"{gold_doc.doc_id}.a2"
            if not a2.is_file():
                raise BioeventsError(f"missing prediction file {a2}")
            pred_doc = read_document(txt, a2_path=a2)
            preds[gold_doc.doc_id] = DocView.from_document(pred_doc)
            golds[gold_doc.doc_id] = DocView.from_document(gold_doc)
        reports.append(score_corpus(preds, golds, args.mode))

    out = Path(args.out_dir) if args.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    if len(reports) == 1:
        print(reports[0].table())
        if out:
            (out / "score.json").write_text(json.dumps(reports[0].to_json(), indent=2) + "\n")
    else:
        agg = aggregate_runs(reports)
        print(aggregate_table(agg))
        if out:
            (out / "score_runs.json").write_text(
                json.dumps([r.to_json() for r in reports], indent=2) + "\n"
            )
            (out / "score_aggregate.json").write_text(json.dumps(agg, indent=2) + "\n")
    if out:
        print(f"wrote {out}")
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    run = _run_config(args)
    _data, vocab, schema, examples, meta = _load_prepared(args.data)
    eval_dir = args.eval_dir or meta.get("dev_dir") or meta.get("train_dir")
    eval_docs = _read_standoff_dir(eval_dir, "--eval directory")

    strategies = tuple(args.strategies.split(",")) if args.strategies else STRATEGIES
    for s in strategies:
        if s not in STRATEGIES:
            raise UsageError(f"unknown strategy {s!r}; choose from {', '.join(STRATEGIES)}")

    rows = ablate(run, schema, vocab, examples, eval_docs, strategies, log_fn=print)
    table = ablation_table(rows)
    print(table)
    if run.out_dir:
        out = Path(run.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.txt").write_text(table + "\n")
        (out / "ablation.json").write_text(json.dumps(rows, indent=2) + "\n")
        print(f"wrote {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; remap per the exit-code contract
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{PROG}: error: UsageError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"{PROG}: error: TrainingDiverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except BioeventsError as exc:
        print(f"{PROG}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, NotADirectoryError, PermissionError) as exc:
        print(f"{PROG}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
