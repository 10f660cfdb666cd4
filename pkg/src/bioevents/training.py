"""Training, prediction, and ablation harness.

Documents are split into sentences, tokenized against a subword
vocabulary with entity mentions masked, and encoded into the three label
layers.  Training feeds gold trigger labels to the role and merging
layers; prediction feeds the trigger layer's own output, so the argument
layers see exactly what they will see at inference time only after the
trigger layer has learned something.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import torch

from .assembly import BuiltEvent, assemble
from .codec import (
    LabelFrame,
    LabelSchema,
    TokenizedSentence,
    decode_labels,
    encode_labels,
    sentence_from_record,
    sentence_record,
    tokenize_and_mask,
)
from .errors import TrainingDiverged, UsageError
from .model import (
    STRATEGIES,
    ModelConfig,
    PretrainedEncoder,
    TaggerModel,
    load_checkpoint,
    seed_everything,
)
from .scoring import APPROXIMATE, MICRO, DocView, ScoreReport, aggregate_runs, score_corpus
from .standoff import sentence_spans, split_sentences
from .types import Document, EntityMention, TriggerMention
from .vocab import SubwordVocab

__all__ = [
    "RunConfig",
    "parse_config_text",
    "load_run_config",
    "SentenceExample",
    "PreparedData",
    "build_vocab",
    "prepare_documents",
    "drop_report",
    "save_examples",
    "load_examples",
    "build_model",
    "load_model",
    "EpochStat",
    "TrainResult",
    "train_one_seed",
    "train_run",
    "DocPrediction",
    "predict_document",
    "evaluate_model",
    "ablate",
    "ablation_table",
]


# --------------------------------------------------------------------------
# run configuration

_SELECT_METRICS = ("event", "trigger")


@dataclass
class RunConfig:
    """Data, model, and optimizer settings for one run.

    Optimizer defaults follow the published values (Adam with betas
    0.9/0.99, dropout 0.3, layer dropout 0.1, batch size 32, 20 epochs).
    ``learning_rate`` left unset resolves by encoder: 1e-5 for a
    pretrained encoder, 1e-3 for the toy encoder, which starts from
    random weights and needs the larger step.
    """

    train: str | None = None
    dev: str | None = None
    out_dir: str = "runs"
    label_set: str = "ge11"
    encoder: str = "toy"
    strategy: str = "self_attention"
    d: int = 32
    k: int = 1
    d_h: int | None = None
    dropout: float = 0.3
    layer_dropout: float = 0.1
    batch_size: int = 32
    learning_rate: float | None = None
    epochs: int = 20
    max_len: int = 512
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    select_by: str = "event"

    def __post_init__(self):
        if not self.seeds:
            raise UsageError("seeds must be a non-empty list of integers")
        if self.strategy not in STRATEGIES:
            raise UsageError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.label_set not in ("ge11", "ge13"):
            raise UsageError(f"label_set must be 'ge11' or 'ge13', got {self.label_set!r}")
        if self.select_by not in _SELECT_METRICS:
            raise UsageError(f"select_by must be one of {_SELECT_METRICS}, got {self.select_by!r}")
        for name in ("d", "k", "batch_size", "max_len"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise UsageError("epochs must be >= 0")

    @property
    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 1e-3 if self.encoder == "toy" else 1e-5

    def schema(self) -> LabelSchema:
        return LabelSchema.ge11() if self.label_set == "ge11" else LabelSchema.ge13()


def parse_config_text(text: str, filename: str = "<config>") -> dict[str, str]:
    """Parse ``key: value`` lines; ``#`` starts a comment."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise UsageError(f"{filename}:{lineno}: expected 'key: value', got {line!r}")
        key, value = line.split(":", 1)
        key, value = key.strip(), value.strip()
        if key in pairs:
            raise UsageError(f"{filename}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _parse_seeds(text: str) -> tuple[int, ...]:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"seeds must be integers, got {text!r}") from None


def _coerce(key: str, text: str):
    def number(cast):
        try:
            return cast(text)
        except ValueError:
            raise UsageError(f"config key {key!r} expects a {cast.__name__}, got {text!r}") from None

    if key in ("d", "k", "batch_size", "epochs", "max_len"):
        return number(int)
    if key in ("dropout", "layer_dropout"):
        return number(float)
    if key == "d_h":
        return None if text.lower() in ("", "none", "auto") else number(int)
    if key == "learning_rate":
        return None if text.lower() == "auto" else number(float)
    if key == "seeds":
        return _parse_seeds(text)
    return text


def load_run_config(
    path: str | Path | None = None, overrides: dict[str, object] | None = None
) -> RunConfig:
    """Build a config from an optional file plus flag overrides.

    Override values may be raw strings (coerced like file values) or
    already-typed values; ``None`` overrides are ignored.
    """
    known = {f.name for f in fields(RunConfig)}
    values: dict[str, object] = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for key, raw in parse_config_text(text, filename=str(path)).items():
            if key not in known:
                raise UsageError(f"{path}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        values[key] = _coerce(key, value) if isinstance(value, str) else value
    return RunConfig(**values)


# --------------------------------------------------------------------------
# data preparation


@dataclass
class SentenceExample:
    """One tokenized sentence with its gold label frame."""

    sentence: TokenizedSentence
    frame: LabelFrame

    def to_record(self) -> dict:
        return sentence_record(self.sentence, self.frame)

    @classmethod
    def from_record(cls, rec: dict) -> "SentenceExample":
        sent, frame = sentence_from_record(rec)
        if frame is None:
            raise UsageError(f"record for {sent.doc_id!r} carries no labels")
        return cls(sent, frame)


@dataclass
class PreparedData:
    examples: list[SentenceExample] = field(default_factory=list)
    stats: Counter = field(default_factory=Counter)
    cross_sentence_events: int = 0


def build_vocab(docs: list[Document], lower: bool = True) -> SubwordVocab:
    """Vocabulary over the corpus text plus one mask piece per entity type."""
    etypes = sorted({e.etype for d in docs for e in d.entities}) or ["Protein"]
    return SubwordVocab.build_from_texts(
        [d.text for d in docs], entity_types=tuple(etypes), lower=lower
    )


def prepare_documents(
    docs: list[Document], vocab: SubwordVocab, schema: LabelSchema, strict: bool = False
) -> PreparedData:
    """Sentence-split, tokenize, and label a parsed corpus."""
    prep = PreparedData()
    for doc in docs:
        prep.stats.update(doc.skipped)
        splits, dropped = split_sentences(doc)
        prep.cross_sentence_events += dropped
        for sub in splits:
            sent = tokenize_and_mask(sub, vocab)
            frame, stats = encode_labels(sent, sub, schema, strict=strict)
            prep.stats.update(stats)
            prep.examples.append(SentenceExample(sent, frame))
    return prep


def drop_report(prep: PreparedData) -> dict:
    """Argument-link accounting, in particular the share of links dropped
    by the distance-2 rule."""
    placed = sum(
        sum(1 for l in ex.frame.theme if l.startswith("B-"))
        + sum(1 for l in ex.frame.cause if l.startswith("B-"))
        for ex in prep.examples
    )
    dropped = prep.stats.get("rank_overflow:theme", 0) + prep.stats.get("rank_overflow:cause", 0)
    total = placed + dropped
    return {
        "sentences": len(prep.examples),
        "argument_links": total,
        "placed_links": placed,
        "dropped_by_distance": dropped,
        "drop_rate": dropped / total if total else 0.0,
        "cross_sentence_events": prep.cross_sentence_events,
        "stats": dict(sorted(prep.stats.items())),
    }


def save_examples(path: str | Path, examples: list[SentenceExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_record()) + "\n")


def load_examples(path: str | Path) -> list[SentenceExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(SentenceExample.from_record(json.loads(line)))
    return out


# --------------------------------------------------------------------------
# training


def build_model(run: RunConfig, schema: LabelSchema, vocab: SubwordVocab) -> TaggerModel:
    if run.encoder == "toy":
        config = ModelConfig(
            d=run.d,
            strategy=run.strategy,
            k=run.k,
            d_h=run.d_h,
            vocab_size=len(vocab),
            dropout=run.dropout,
            layer_dropout=run.layer_dropout,
            max_len=run.max_len,
            encoder="toy",
        )
        return TaggerModel(config, schema)
    encoder = PretrainedEncoder(run.encoder, max_len=run.max_len)
    config = ModelConfig(
        d=encoder.d,
        strategy=run.strategy,
        k=run.k,
        d_h=run.d_h,
        vocab_size=len(vocab),
        dropout=run.dropout,
        layer_dropout=run.layer_dropout,
        max_len=encoder.max_len,
        encoder=run.encoder,
    )
    return TaggerModel(config, schema, encoder=encoder)


def load_model(path: str | Path, vocab: SubwordVocab | None = None) -> TaggerModel:
    """Load a checkpoint, rebuilding a pretrained encoder when the saved
    configuration names one."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    name = payload["config"].get("encoder", "toy")
    encoder = None if name == "toy" else PretrainedEncoder(name, payload["config"]["max_len"])
    model = load_checkpoint(path, vocab=vocab, encoder=encoder)
    model.eval()
    return model


@dataclass
class EpochStat:
    epoch: int
    loss: float
    dev: dict[str, float] | None = None

    def line(self) -> str:
        msg = f"epoch {self.epoch:3d}  loss {self.loss:.6f}"
        if self.dev is not None:
            msg += "  " + "  ".join(f"dev_{k} {v:.4f}" for k, v in sorted(self.dev.items()))
        return msg


@dataclass
class TrainResult:
    seed: int
    model: TaggerModel
    log: list[EpochStat]
    best_epoch: int  # 0 means the initialization was never beaten
    best_metric: float


def _clone_state(model: TaggerModel) -> dict:
    return {k: v.detach().clone() for k, v in model.state_dict().items()}


def train_one_seed(
    run: RunConfig,
    schema: LabelSchema,
    vocab: SubwordVocab,
    examples: list[SentenceExample],
    dev_docs: list[Document] | None = None,
    seed: int = 0,
    log_fn=None,
) -> TrainResult:
    """Train one model; with dev documents, keep the best-dev checkpoint.

    The dev selection metric is micro event F1 (or trigger F1 under
    ``select_by: trigger``); the initialization participates, so zero
    epochs returns the initial weights unchanged.
    """
    if not examples:
        raise UsageError("no training sentences")
    seed_everything(seed)
    model = build_model(run, schema, vocab)
    golds = [ex.frame.ids(schema) for ex in examples]
    opt = torch.optim.Adam(
        model.parameters(), lr=run.resolved_learning_rate, betas=(0.9, 0.99)
    )
    rng = random.Random(seed)
    metric_key = f"{run.select_by}_f1"

    def dev_metrics() -> dict[str, float] | None:
        if dev_docs is None:
            return None
        report = evaluate_model(model, dev_docs, vocab)
        return {
            "trigger_f1": report.section("trigger")[MICRO].f1,
            "argument_f1": report.section("argument")[MICRO].f1,
            "event_f1": report.section("event")[MICRO].f1,
        }

    best_state = _clone_state(model)
    start = dev_metrics()
    best_metric = start[metric_key] if start is not None else -math.inf
    best_epoch = 0

    log: list[EpochStat] = []
    for epoch in range(1, run.epochs + 1):
        model.train()
        order = list(range(len(examples)))
        rng.shuffle(order)
        total = 0.0
        for at in range(0, len(order), run.batch_size):
            batch = order[at : at + run.batch_size]
            opt.zero_grad()
            batch_loss = 0.0
            for idx in batch:
                ex = examples[idx]
                g_tr, g_t, g_c = golds[idx]
                out = model(ex.sentence, gold_trigger_ids=torch.as_tensor(g_tr))
                loss = model.loss(out.P_trigger, out.P_theme, out.P_cause, (g_tr, g_t, g_c))
                (loss / len(batch)).backward()
                batch_loss += loss.item()
            batch_loss /= len(batch)
            if not math.isfinite(batch_loss):
                raise TrainingDiverged(f"non-finite loss in epoch {epoch} (seed {seed})")
            opt.step()
            total += batch_loss * len(batch)
        stat = EpochStat(epoch, total / len(order), dev_metrics())
        log.append(stat)
        if log_fn is not None:
            log_fn(stat.line())
        if stat.dev is not None and stat.dev[metric_key] > best_metric:
            best_metric = stat.dev[metric_key]
            best_epoch = epoch
            best_state = _clone_state(model)

    if dev_docs is not None:
        model.load_state_dict(best_state)
    model.eval()
    return TrainResult(seed, model, log, best_epoch, best_metric)


def train_run(
    run: RunConfig,
    schema: LabelSchema,
    vocab: SubwordVocab,
    examples: list[SentenceExample],
    dev_docs: list[Document] | None = None,
    log_fn=None,
) -> list[TrainResult]:
    """Train one model per seed, sequentially for determinism."""
    results = []
    for seed in run.seeds:
        if log_fn is not None:
            log_fn(f"seed {seed}")
        results.append(
            train_one_seed(run, schema, vocab, examples, dev_docs, seed=seed, log_fn=log_fn)
        )
    return results


# --------------------------------------------------------------------------
# prediction and evaluation


def _shift_trigger(t: TriggerMention, off: int) -> TriggerMention:
    return replace(t, start=t.start + off, end=t.end + off)


def _shift_entity(e: EntityMention, off: int) -> EntityMention:
    return replace(e, start=e.start + off, end=e.end + off)


def _shift_events(events: list[BuiltEvent], off: int) -> list[BuiltEvent]:
    """Rebase event spans by ``off`` characters, preserving shared
    sub-event structure."""
    memo: dict[int, BuiltEvent] = {}

    def go(ev: BuiltEvent) -> BuiltEvent:
        got = memo.get(id(ev))
        if got is not None:
            return got
        themes = tuple(
            go(t) if isinstance(t, BuiltEvent) else _shift_entity(t, off) for t in ev.themes
        )
        cause = ev.cause
        if isinstance(cause, BuiltEvent):
            cause = go(cause)
        elif cause is not None:
            cause = _shift_entity(cause, off)
        new = BuiltEvent(ev.etype, _shift_trigger(ev.trigger, off), themes, cause)
        memo[id(ev)] = new
        return new

    return [go(ev) for ev in events]


@dataclass
class DocPrediction:
    """Predicted triggers and assembled events in document coordinates."""

    doc_id: str
    text: str
    triggers: list[TriggerMention]
    events: list[BuiltEvent]
    stats: Counter

    def view(self) -> DocView:
        return DocView.from_events(self.doc_id, self.text, self.events, triggers=self.triggers)


def predict_document(model: TaggerModel, doc: Document, vocab: SubwordVocab) -> DocPrediction:
    """Tag each sentence, decode, assemble, and rebase to document spans."""
    was_training = model.training
    model.eval()
    try:
        splits, _ = split_sentences(doc)
        spans = sentence_spans(doc.text)
        triggers: list[TriggerMention] = []
        events: list[BuiltEvent] = []
        stats: Counter = Counter()
        for (start, _end), sub in zip(spans, splits):
            sent = tokenize_and_mask(sub, vocab)
            frame = model.predict_frame(sent)
            trs, links, st = decode_labels(sent, frame)
            built = assemble(trs, links)
            stats.update(st)
            stats.update(built.drops)
            triggers.extend(_shift_trigger(t, start) for t in trs)
            events.extend(_shift_events(built.events, start))
        return DocPrediction(doc.doc_id, doc.text, triggers, events, stats)
    finally:
        model.train(was_training)


def evaluate_model(
    model: TaggerModel,
    docs: list[Document],
    vocab: SubwordVocab,
    mode: str = APPROXIMATE,
) -> ScoreReport:
    """Score the model's predictions against the documents' own events."""
    preds = {d.doc_id: predict_document(model, d, vocab).view() for d in docs}
    golds = {d.doc_id: DocView.from_document(d) for d in docs}
    return score_corpus(preds, golds, mode)


# --------------------------------------------------------------------------
# ablation over merging strategies


def ablate(
    run: RunConfig,
    schema: LabelSchema,
    vocab: SubwordVocab,
    examples: list[SentenceExample],
    eval_docs: list[Document],
    strategies: tuple[str, ...] = STRATEGIES,
    log_fn=None,
) -> dict[str, dict]:
    """Train every strategy over the config's seeds and aggregate scores."""
    rows: dict[str, dict] = {}
    for strategy in strategies:
        cfg = replace(run, strategy=strategy)
        reports = []
        for seed in run.seeds:
            if log_fn is not None:
                log_fn(f"strategy {strategy}  seed {seed}")
            res = train_one_seed(cfg, schema, vocab, examples, seed=seed)
            reports.append(evaluate_model(res.model, eval_docs, vocab))
        rows[strategy] = aggregate_runs(reports)
    return rows


def ablation_table(rows: dict[str, dict]) -> str:
    """One row per merging strategy with Trg/Arg/Eve micro F1 mean(±std)."""
    lines = [f"{'Setting':16s} {'Trg(%)':>15s} {'Arg(%)':>15s} {'Eve(%)':>15s}"]
    for strategy, agg in rows.items():
        cells = []
        for task in ("trigger", "argument", "event"):
            m = agg["tasks"][task][MICRO]["f1"]
            cells.append(f"{m['mean'] * 100:6.2f}(±{m['std'] * 100:4.2f})")
        lines.append(f"{strategy:16s} {cells[0]:>15s} {cells[1]:>15s} {cells[2]:>15s}")
    return "\n".join(lines)
