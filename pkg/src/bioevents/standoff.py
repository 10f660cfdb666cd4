"""Standoff annotation parsing, serialization and sentence splitting.

A corpus document is a trio of files sharing a basename: ``.txt`` holds the
raw text, ``.a1`` the given entity mentions (tab-separated T lines), and
``.a2`` the triggers (T lines) plus events (E lines).  Offsets are character
offsets into the ``.txt`` content, end exclusive.

Line grammar::

    T1<TAB>Protein 0 5<TAB>BMP-6
    T9<TAB>Phosphorylation 22 37<TAB>phosphorylation
    E1<TAB>Phosphorylation:T9 Theme:T2
    E2<TAB>Positive_regulation:T8 Theme:E1 Cause:T1

Binding events number extra themes ``Theme2``, ``Theme3``, ...  Equiv lines
(``*``), modification lines (``M``/``A``) and non-core argument roles such as
``Site`` are tolerated and skipped with a counter on the document.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import replace
from pathlib import Path

from .assembly import BuiltEvent
from .errors import DanglingRef, MalformedLine, SpanMismatch
from .types import Document, EntityMention, EventType, GoldEvent, TriggerMention

# --------------------------------------------------------------------------
# parsing


def _check_span(kind, sid, start, end, surface, text, filename):
    if not (0 <= start < end <= len(text)):
        raise SpanMismatch(
            f"{filename or kind}: {sid} span {start}..{end} outside text of length {len(text)}"
        )
    actual = text[start:end]
    if actual != surface:
        raise SpanMismatch(
            f"{filename or kind}: {sid} surface {surface!r} != text slice {actual!r}"
        )


def _parse_t_line(line, text, filename, lineno):
    fields = line.split("\t")
    if len(fields) != 3:
        raise MalformedLine(
            f"expected 3 tab-separated fields in T line, got {len(fields)}",
            filename, lineno,
        )
    tid, ann, surface = fields
    parts = ann.split()
    if len(parts) != 3:
        raise MalformedLine(
            f"expected 'TYPE START END' in T line annotation, got {ann!r}",
            filename, lineno,
        )
    etype, start_s, end_s = parts
    try:
        start, end = int(start_s), int(end_s)
    except ValueError:
        raise MalformedLine(f"non-integer offsets in {ann!r}", filename, lineno) from None
    _check_span("T", tid, start, end, surface, text, filename)
    return tid, etype, start, end, surface


_ARG_RE = re.compile(r"^([A-Za-z]+?)(\d*):(\S+)$")


def _parse_e_line(line, filename, lineno):
    fields = line.split("\t")
    if len(fields) != 2:
        raise MalformedLine(
            f"expected 2 tab-separated fields in E line, got {len(fields)}",
            filename, lineno,
        )
    eid, ann = fields
    parts = ann.split()
    if not parts or ":" not in parts[0]:
        raise MalformedLine(f"E line missing TYPE:TRIGGER head, got {ann!r}", filename, lineno)
    type_s, trigger_id = parts[0].split(":", 1)
    etype = EventType.parse(type_s)
    themes: list[tuple[int, str]] = []
    cause = None
    skipped = Counter()
    for part in parts[1:]:
        m = _ARG_RE.match(part)
        if m is None:
            raise MalformedLine(f"bad argument field {part!r}", filename, lineno)
        role, num, ref = m.groups()
        if role == "Theme":
            themes.append((int(num) if num else 1, ref))
        elif role == "Cause" and not num:
            if cause is not None:
                raise MalformedLine(f"duplicate Cause in {eid}", filename, lineno)
            cause = ref
        else:
            # Site, CSite, ToLoc, AtLoc, ... : outside the quadruple model
            skipped[f"arg:{role}"] += 1
    themes.sort(key=lambda t: t[0])
    return eid, etype, trigger_id, tuple(ref for _, ref in themes), cause, skipped


def parse_document(
    txt: str,
    a1: str,
    a2: str | None = None,
    doc_id: str = "doc",
    filename: str | None = None,
) -> Document:
    """Parse the standoff triple into a linked :class:`Document`.

    ``a2`` may be ``None`` or empty for unlabeled input.  Every mention span
    is verified against ``txt``; events are checked for resolvable argument
    references.  Equiv lines, modifications and non-core argument roles are
    skipped and counted in ``Document.skipped``.
    """
    doc = Document(doc_id=doc_id, text=txt)
    seen_ids: set[str] = set()

    for lineno, line in enumerate(a1.splitlines(), 1):
        if not line.strip():
            continue
        if not line.startswith("T"):
            raise MalformedLine(f"unexpected a1 line {line!r}", filename, lineno)
        tid, etype, start, end, surface = _parse_t_line(line, txt, filename, lineno)
        if tid in seen_ids:
            raise MalformedLine(f"duplicate id {tid}", filename, lineno)
        seen_ids.add(tid)
        doc.entities.append(EntityMention(tid, etype, start, end, surface))

    triggers: dict[str, TriggerMention] = {}
    raw_events = []
    for lineno, line in enumerate((a2 or "").splitlines(), 1):
        if not line.strip():
            continue
        tag = line[0]
        if tag == "T":
            tid, etype, start, end, surface = _parse_t_line(line, txt, filename, lineno)
            if tid in seen_ids:
                raise MalformedLine(f"duplicate id {tid}", filename, lineno)
            seen_ids.add(tid)
            if EventType.is_event_type(etype):
                triggers[tid] = TriggerMention(tid, EventType.parse(etype), start, end, surface)
            else:
                # e.g. "Entity" T lines used by Site arguments
                doc.skipped[f"tspan:{etype}"] += 1
        elif tag == "E":
            raw_events.append((lineno, line))
        elif tag in ("M", "A"):
            doc.skipped["modification"] += 1
        elif tag == "*":
            doc.skipped["equiv"] += 1
        else:
            raise MalformedLine(f"unexpected a2 line {line!r}", filename, lineno)

    event_ids = set()
    parsed = []
    for lineno, line in raw_events:
        eid, etype, trigger_id, themes, cause, skipped = _parse_e_line(line, filename, lineno)
        if eid in seen_ids or eid in event_ids:
            raise MalformedLine(f"duplicate id {eid}", filename, lineno)
        event_ids.add(eid)
        doc.skipped.update(skipped)
        parsed.append((lineno, eid, etype, trigger_id, themes, cause))

    entity_ids = {e.id for e in doc.entities}
    for lineno, eid, etype, trigger_id, themes, cause in parsed:
        if trigger_id not in triggers:
            raise DanglingRef(f"event {eid} references unknown trigger {trigger_id}")
        trigger = triggers[trigger_id]
        if trigger.etype is not etype:
            raise MalformedLine(
                f"event {eid} type {etype.value} disagrees with trigger {trigger_id}",
                filename, lineno,
            )
        for ref in themes + ((cause,) if cause else ()):
            if ref not in entity_ids and ref not in event_ids and ref not in triggers:
                raise DanglingRef(f"event {eid} references unknown id {ref}")
        doc.events.append(GoldEvent(eid, etype, trigger, themes, cause))
    return doc


def read_document(txt_path, a1_path=None, a2_path=None) -> Document:
    """Read a document from its ``.txt`` path, picking up sibling ``.a1``/``.a2``."""
    txt_path = Path(txt_path)
    if a1_path is None:
        a1_path = txt_path.with_suffix(".a1")
    if a2_path is None:
        a2_path = txt_path.with_suffix(".a2")
    txt = Path(txt_path).read_text(encoding="utf-8")
    a1 = Path(a1_path).read_text(encoding="utf-8") if Path(a1_path).exists() else ""
    a2 = Path(a2_path).read_text(encoding="utf-8") if Path(a2_path).exists() else None
    return parse_document(txt, a1, a2, doc_id=txt_path.stem, filename=str(txt_path))


def read_corpus(directory) -> list[Document]:
    """Read all ``.txt`` documents under a directory, sorted by name."""
    docs = []
    for txt_path in sorted(Path(directory).glob("*.txt")):
        docs.append(read_document(txt_path))
    return docs


# --------------------------------------------------------------------------
# serialization


def serialize_events(doc: Document, events: list[BuiltEvent]) -> str:
    """Render assembled events as ``.a2`` text.

    Trigger ids continue the T numbering after the document's entities, the
    shared-task convention.  Nested events are emitted before events that
    reference them.  Raises :class:`DanglingRef` when an entity argument is
    not one of the document's mentions.
    """
    known_ids = {e.id for e in doc.entities}
    by_span = {}
    for e in doc.entities:
        by_span.setdefault((e.start, e.end), e.id)

    def entity_ref(ent: EntityMention) -> str:
        if ent.id in known_ids:
            return ent.id
        ref = by_span.get((ent.start, ent.end))
        if ref is None:
            raise DanglingRef(f"argument entity {ent!r} not among document entities")
        return ref

    max_t = 0
    for e in doc.entities:
        m = re.match(r"^T(\d+)$", e.id)
        if m:
            max_t = max(max_t, int(m.group(1)))

    trigger_lines: list[str] = []
    trigger_ids: dict[tuple, str] = {}
    next_t = max_t + 1

    def trigger_ref(tr: TriggerMention) -> str:
        nonlocal next_t
        key = (tr.start, tr.end, tr.etype)
        if key not in trigger_ids:
            trigger_ids[key] = f"T{next_t}"
            next_t += 1
            trigger_lines.append(
                f"{trigger_ids[key]}\t{tr.etype.value} {tr.start} {tr.end}\t{tr.surface}"
            )
        return trigger_ids[key]

    event_ids: dict[int, str] = {}
    event_lines: list[str] = []

    def emit(ev: BuiltEvent) -> str:
        if id(ev) in event_ids:
            return event_ids[id(ev)]
        tref = trigger_ref(ev.trigger)
        args = []
        for n, theme in enumerate(ev.themes, 1):
            suffix = "" if n == 1 else str(n)
            if isinstance(theme, BuiltEvent):
                args.append(f"Theme{suffix}:{emit(theme)}")
            else:
                args.append(f"Theme{suffix}:{entity_ref(theme)}")
        if ev.cause is not None:
            if isinstance(ev.cause, BuiltEvent):
                args.append(f"Cause:{emit(ev.cause)}")
            else:
                args.append(f"Cause:{entity_ref(ev.cause)}")
        eid = f"E{len(event_ids) + 1}"
        event_ids[id(ev)] = eid
        event_lines.append(f"{eid}\t{ev.etype.value}:{tref} " + " ".join(args))
        return eid

    for ev in sorted(events, key=lambda e: (e.trigger.start, e.trigger.end, e.etype.value)):
        emit(ev)
    out = trigger_lines + event_lines
    return "\n".join(out) + ("\n" if out else "")


def resolve_events(doc: Document) -> list[BuiltEvent]:
    """Resolve a document's gold events into object-linked :class:`BuiltEvent`s.

    Event arguments referencing a bare trigger id or a cyclic event chain
    raise :class:`DanglingRef`.
    """
    entities = doc.entity_by_id()
    gold = doc.event_by_id()
    built: dict[str, BuiltEvent] = {}
    in_progress: set[str] = set()

    def resolve_ref(ref: str):
        if ref in entities:
            return entities[ref]
        if ref in gold:
            return resolve(ref)
        raise DanglingRef(f"unresolvable argument reference {ref}")

    def resolve(eid: str) -> BuiltEvent:
        if eid in built:
            return built[eid]
        if eid in in_progress:
            raise DanglingRef(f"cyclic event reference through {eid}")
        in_progress.add(eid)
        g = gold[eid]
        ev = BuiltEvent(
            etype=g.etype,
            trigger=g.trigger,
            themes=tuple(resolve_ref(r) for r in g.themes),
            cause=resolve_ref(g.cause) if g.cause else None,
        )
        in_progress.discard(eid)
        built[eid] = ev
        return ev

    return [resolve(e.id) for e in doc.events]


# --------------------------------------------------------------------------
# sentence splitting

_BOUNDARY_RE = re.compile(r"[.?!](?=\s+[A-Z0-9])")


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences: split after ``.?!`` followed by
    whitespace and an uppercase letter or digit."""
    bounds = [0]
    for m in _BOUNDARY_RE.finditer(text):
        bounds.append(m.end())
    bounds.append(len(text))
    spans = []
    for a, b in zip(bounds, bounds[1:]):
        # trim surrounding whitespace but keep offsets into the original text
        while a < b and text[a].isspace():
            a += 1
        while b > a and text[b - 1].isspace():
            b -= 1
        if a < b:
            spans.append((a, b))
    return spans


def split_sentences(doc: Document) -> tuple[list[Document], int]:
    """Split a document into sentence-scoped documents.

    Entities and events are attached to the sentence containing them; an
    event is kept only when its trigger and all (recursively reached)
    arguments fall inside one sentence.  Returns the splits and the number
    of events dropped for crossing a sentence boundary.
    """
    spans = sentence_spans(doc.text)
    splits: list[Document] = []
    entity_sentence: dict[str, int] = {}

    for k, (a, b) in enumerate(spans):
        sub = Document(doc_id=f"{doc.doc_id}.s{k}", text=doc.text[a:b])
        for e in doc.entities:
            if a <= e.start and e.end <= b:
                entity_sentence[e.id] = k
                sub.entities.append(replace(e, start=e.start - a, end=e.end - a))
        splits.append(sub)

    gold = doc.event_by_id()

    def sentence_of(eid: str, seen: frozenset[str]) -> int | None:
        """Sentence index containing the whole event, or None."""
        if eid in seen:
            return None
        ev = gold[eid]
        where = None
        for k, (a, b) in enumerate(spans):
            if a <= ev.trigger.start and ev.trigger.end <= b:
                where = k
        if where is None:
            return None
        for ref in ev.themes + ((ev.cause,) if ev.cause else ()):
            if ref in entity_sentence:
                ref_where = entity_sentence[ref]
            elif ref in gold:
                ref_where = sentence_of(ref, seen | {eid})
            else:
                ref_where = None
            if ref_where != where:
                return None
        return where

    dropped = 0
    for ev in doc.events:
        k = sentence_of(ev.id, frozenset())
        if k is None:
            dropped += 1
            continue
        a, _ = spans[k]
        tr = ev.trigger
        splits[k].events.append(
            replace(ev, trigger=replace(tr, start=tr.start - a, end=tr.end - a))
        )
    return splits, dropped
