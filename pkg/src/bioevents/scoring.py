"""Approximate-match scoring of predicted triggers, arguments and events.

Span matching is approximate: two mentions match when their types agree and
each boundary lies within one word token of the gold boundary, measured on
whitespace/punctuation word tokens of the raw text.  Event matching comes
in two modes:

* ``strict``: type + trigger (approximate span) + all arguments, checked
  recursively through nested events,
* ``approximate_recursive``: a nested event argument already matches when
  its type and trigger match approximately, even if its own arguments are
  partially wrong.

Counts are micro-aggregated per event type with P = TP/(TP+FP), R =
TP/(TP+FN), F1 = 2PR/(P+R), all with the 0/0 -> 0 convention.  Matching is
greedy one-to-one: golds in span order claim the first compatible unused
prediction.  This is a local approximation of the shared-task service, not
a byte-level reimplementation of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .assembly import CAUSE, THEME, BuiltEvent
from .errors import DocIdMismatch
from .standoff import resolve_events
from .types import Document, TriggerMention
from .vocab import pretokenize

STRICT = "strict"
APPROXIMATE = "approximate_recursive"
MODES = (STRICT, APPROXIMATE)

MICRO = "micro"


def word_spans(text: str) -> list[tuple[int, int]]:
    """Word-token spans used for approximate boundary comparison."""
    return pretokenize(text)


def _word_window(words: list[tuple[int, int]], start: int, end: int) -> tuple[int, int] | None:
    """(first, last) word indices overlapping [start, end), or None."""
    hit = [i for i, (a, b) in enumerate(words) if a < end and start < b]
    if not hit:
        return None
    return hit[0], hit[-1]


def span_match(pred: TriggerMention, gold: TriggerMention, text: str) -> bool:
    """Type equality plus boundaries within one word token on each side."""
    if pred.etype is not gold.etype:
        return False
    if (pred.start, pred.end) == (gold.start, gold.end):
        return True
    words = word_spans(text)
    pw = _word_window(words, pred.start, pred.end)
    gw = _word_window(words, gold.start, gold.end)
    if pw is None or gw is None:
        return False
    return abs(pw[0] - gw[0]) <= 1 and abs(pw[1] - gw[1]) <= 1


def _arg_span_match(pred: tuple[int, int], gold: tuple[int, int], text: str) -> bool:
    if pred == gold:
        return True
    words = word_spans(text)
    pw = _word_window(words, *pred)
    gw = _word_window(words, *gold)
    if pw is None or gw is None:
        return False
    return abs(pw[0] - gw[0]) <= 1 and abs(pw[1] - gw[1]) <= 1


def _argument_match(pred, gold, mode: str, text: str) -> bool:
    if isinstance(gold, BuiltEvent):
        if not isinstance(pred, BuiltEvent):
            return False
        if mode == APPROXIMATE:
            return pred.etype is gold.etype and span_match(pred.trigger, gold.trigger, text)
        return event_match(pred, gold, STRICT, text)
    if isinstance(pred, BuiltEvent):
        return False
    return (pred.start, pred.end) == (gold.start, gold.end)


def event_match(pred: BuiltEvent, gold: BuiltEvent, mode: str, text: str) -> bool:
    """Whether a predicted event counts as correct against a gold event."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if pred.etype is not gold.etype:
        return False
    if not span_match(pred.trigger, gold.trigger, text):
        return False
    if len(pred.themes) != len(gold.themes):
        return False
    if (pred.cause is None) != (gold.cause is None):
        return False
    if pred.cause is not None and not _argument_match(pred.cause, gold.cause, mode, text):
        return False
    # themes are an unordered multiset; sizes here are <= 3, so try
    # assignments exhaustively
    import itertools

    for perm in itertools.permutations(range(len(pred.themes))):
        if all(
            _argument_match(pred.themes[j], gold.themes[i], mode, text)
            for i, j in enumerate(perm)
        ):
            return True
    return False


@dataclass
class Tally:
    """True/false positive and false negative counts with derived metrics."""

    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def p(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def r(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.p, self.r
        return 2 * p * r / (p + r) if p + r else 0.0

    def add(self, other: "Tally") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn


ArgRecord = tuple[TriggerMention, str, int, int]  # owner, role, arg span


@dataclass
class DocView:
    """Everything the scorer needs about one document's annotations."""

    doc_id: str
    text: str
    triggers: list[TriggerMention]
    links: list[ArgRecord]
    events: list[BuiltEvent]

    @classmethod
    def from_events(
        cls,
        doc_id: str,
        text: str,
        events: list[BuiltEvent],
        triggers: list[TriggerMention] | None = None,
    ) -> "DocView":
        """Derive trigger and argument records from assembled events.

        ``triggers`` overrides the event-derived mention list when the
        caller has the tagger's raw trigger output (which may include
        mentions that never made it into an event).
        """
        seen_tr: dict[tuple, TriggerMention] = {}
        links: dict[tuple, ArgRecord] = {}

        def walk(ev: BuiltEvent) -> None:
            key = (ev.trigger.start, ev.trigger.end, ev.etype)
            seen_tr.setdefault(key, ev.trigger)
            for role, args in ((THEME, ev.themes), (CAUSE, (ev.cause,) if ev.cause else ())):
                for arg in args:
                    if isinstance(arg, BuiltEvent):
                        span = (arg.trigger.start, arg.trigger.end)
                        walk(arg)
                    else:
                        span = (arg.start, arg.end)
                    links.setdefault(key + (role,) + span, (ev.trigger, role, *span))

        for ev in events:
            walk(ev)
        if triggers is None:
            triggers = list(seen_tr.values())
        return cls(doc_id, text, triggers, list(links.values()), events)

    @classmethod
    def from_document(cls, doc: Document) -> "DocView":
        return cls.from_events(doc.doc_id, doc.text, resolve_events(doc))


@dataclass
class ScoreReport:
    """Per-type and micro tallies for the three tasks of one run."""

    mode: str
    triggers: dict[str, Tally] = field(default_factory=dict)
    arguments: dict[str, Tally] = field(default_factory=dict)
    events: dict[str, Tally] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def section(self, task: str) -> dict[str, Tally]:
        return {"trigger": self.triggers, "argument": self.arguments, "event": self.events}[task]

    def to_json(self) -> dict:
        def enc(section):
            return {
                t: {"tp": c.tp, "fp": c.fp, "fn": c.fn, "p": c.p, "r": c.r, "f1": c.f1}
                for t, c in section.items()
            }

        return {
            "mode": self.mode,
            "triggers": enc(self.triggers),
            "arguments": enc(self.arguments),
            "events": enc(self.events),
            "meta": self.meta,
        }

    def table(self) -> str:
        lines = [f"mode: {self.mode}"]
        for task in ("trigger", "argument", "event"):
            section = self.section(task)
            lines.append(f"[{task}]")
            lines.append(f"{'type':22s} {'TP':>5s} {'FP':>5s} {'FN':>5s} {'P':>7s} {'R':>7s} {'F1':>7s}")
            order = sorted(t for t in section if t != MICRO) + [MICRO]
            for t in order:
                if t not in section:
                    continue
                c = section[t]
                lines.append(
                    f"{t:22s} {c.tp:5d} {c.fp:5d} {c.fn:5d} {c.p:7.4f} {c.r:7.4f} {c.f1:7.4f}"
                )
        return "\n".join(lines)


def _greedy_match(preds, golds, compatible) -> list[tuple[int, int]]:
    """Golds in listed order claim the first compatible unused prediction."""
    used: set[int] = set()
    pairs = []
    for gi, g in enumerate(golds):
        for pi, p in enumerate(preds):
            if pi in used:
                continue
            if compatible(p, g):
                used.add(pi)
                pairs.append((pi, gi))
                break
    return pairs


def _tally_section(section: dict, preds, golds, typed_key, matched_pairs) -> None:
    matched_p = {pi for pi, _ in matched_pairs}
    matched_g = {gi for _, gi in matched_pairs}
    for pi, gi in matched_pairs:
        section.setdefault(typed_key(golds[gi]), Tally()).tp += 1
    for pi, p in enumerate(preds):
        if pi not in matched_p:
            section.setdefault(typed_key(p), Tally()).fp += 1
    for gi, g in enumerate(golds):
        if gi not in matched_g:
            section.setdefault(typed_key(g), Tally()).fn += 1


def score_corpus(
    preds: dict[str, DocView], golds: dict[str, DocView], mode: str = APPROXIMATE
) -> ScoreReport:
    """Score a corpus of predicted views against gold views.

    Raises :class:`DocIdMismatch` unless both sides cover exactly the same
    document ids.
    """
    if set(preds) != set(golds):
        missing = set(golds) - set(preds)
        extra = set(preds) - set(golds)
        raise DocIdMismatch(f"document ids differ (missing={sorted(missing)}, extra={sorted(extra)})")
    report = ScoreReport(mode=mode)

    for doc_id in sorted(golds):
        pv, gv = preds[doc_id], golds[doc_id]
        text = gv.text

        gold_tr = sorted(gv.triggers, key=lambda t: (t.start, t.end))
        pred_tr = sorted(pv.triggers, key=lambda t: (t.start, t.end))
        pairs = _greedy_match(pred_tr, gold_tr, lambda p, g: span_match(p, g, text))
        _tally_section(report.triggers, pred_tr, gold_tr, lambda t: t.etype.code, pairs)

        gold_ln = sorted(gv.links, key=lambda l: (l[2], l[3], l[0].start))
        pred_ln = sorted(pv.links, key=lambda l: (l[2], l[3], l[0].start))

        def link_ok(p, g):
            return (
                p[1] == g[1]
                and span_match(p[0], g[0], text)
                and _arg_span_match((p[2], p[3]), (g[2], g[3]), text)
            )

        pairs = _greedy_match(pred_ln, gold_ln, link_ok)
        _tally_section(report.arguments, pred_ln, gold_ln, lambda l: l[0].etype.code, pairs)

        gold_ev = sorted(gv.events, key=lambda e: (e.trigger.start, e.trigger.end))
        pred_ev = sorted(pv.events, key=lambda e: (e.trigger.start, e.trigger.end))
        pairs = _greedy_match(pred_ev, gold_ev, lambda p, g: event_match(p, g, mode, text))
        _tally_section(report.events, pred_ev, gold_ev, lambda e: e.etype.code, pairs)

    for section in (report.triggers, report.arguments, report.events):
        micro = Tally()
        for t, c in section.items():
            micro.add(c)
        section[MICRO] = micro
    return report


def score_documents(
    pred_docs: list[Document], gold_docs: list[Document], mode: str = APPROXIMATE
) -> ScoreReport:
    """Score documents whose events are gold-style annotations (e.g. a
    parsed prediction .a2 against the reference .a2)."""
    preds = {d.doc_id: DocView.from_document(d) for d in pred_docs}
    golds = {d.doc_id: DocView.from_document(d) for d in gold_docs}
    return score_corpus(preds, golds, mode)


# --------------------------------------------------------------------------
# multi-run aggregation


def aggregate_runs(reports: list[ScoreReport]) -> dict:
    """Mean and population standard deviation of P/R/F1 over runs, per task
    and type."""
    if not reports:
        raise ValueError("no reports to aggregate")
    out: dict = {"mode": reports[0].mode, "runs": len(reports), "tasks": {}}
    for task in ("trigger", "argument", "event"):
        types = sorted({t for r in reports for t in r.section(task)})
        rows = {}
        for t in types:
            metrics = {}
            for m in ("p", "r", "f1"):
                vals = [getattr(r.section(task).get(t, Tally()), m) for r in reports]
                mean = sum(vals) / len(vals)
                var = sum((v - mean) ** 2 for v in vals) / len(vals)
                metrics[m] = {"mean": mean, "std": math.sqrt(var)}
            rows[t] = metrics
        out["tasks"][task] = rows
    return out


def aggregate_table(agg: dict) -> str:
    lines = [f"mode: {agg['mode']}  runs: {agg['runs']}"]
    for task, rows in agg["tasks"].items():
        lines.append(f"[{task}]")
        lines.append(f"{'type':22s} {'P':>15s} {'R':>15s} {'F1':>15s}")
        order = sorted(t for t in rows if t != MICRO) + ([MICRO] if MICRO in rows else [])
        for t in order:
            cells = [
                f"{rows[t][m]['mean'] * 100:6.2f}(±{rows[t][m]['std'] * 100:4.2f})"
                for m in ("p", "r", "f1")
            ]
            lines.append(f"{t:22s} {cells[0]:>15s} {cells[1]:>15s} {cells[2]:>15s}")
    return "\n".join(lines)
