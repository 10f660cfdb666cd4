"""Label coding between annotated sentences and token label sequences.

Three aligned label layers over one masked, subword-tokenized sentence:

* trigger layer: BIO over event types plus entity labels
  (``B-Phos``, ``I-Phos``, ``B-Protein``, ...),
* theme layer and cause layer: BIO over directional owner indices
  (``B-Left1`` ... ``I-Right2``), placed on *argument* tokens; ``Left1``
  reads "my owning trigger is the nearest trigger mention to my left",
  ``Left2`` the second nearest, and symmetrically for ``Right``.

Owner indices are ranked over the event-typed trigger mentions visible in
the trigger layer, in token space.  Arguments whose owner sits beyond the
second mention on its side cannot be expressed and are dropped with a
counter, as are label collisions (resolved keep-nearest, first placed on
ties).  Decoding inverts the scheme and returns trigger mentions plus
:class:`~bioevents.assembly.ArgLink` connections for event assembly.

The head ``[CLS]`` token carries span ``(0, 0)`` and the ``O`` label in
every layer.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from .assembly import CAUSE, THEME, ArgLink
from .errors import LabelCollision, OverlappingEntities, UnknownLabel
from .types import (
    Document,
    EntityMention,
    EventType,
    GE11_EVENT_TYPES,
    GE13_EVENT_TYPES,
    TriggerMention,
)
from .vocab import CLS, UNK, SubwordVocab, mask_token, pretokenize

ARG_TAGS = ("Left1", "Left2", "Right1", "Right2")
ARG_LABELS = ("O",) + tuple(f"{b}-{t}" for t in ARG_TAGS for b in ("B", "I"))

_ARG_TAG_RE = re.compile(r"^(Left|Right)([12])$")


def canon_entity_label(etype: str) -> str:
    """Entity type as a trigger-layer label: first letter upper, rest lower."""
    return etype[:1].upper() + etype[1:].lower()


@dataclass(frozen=True)
class LabelSchema:
    """Fixed label spaces for the three layers."""

    event_types: tuple[EventType, ...]
    entity_labels: tuple[str, ...] = ("Protein",)
    trigger_labels: tuple[str, ...] = field(init=False)
    arg_labels: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        trig = ["O"]
        for t in self.event_types:
            trig += [f"B-{t.code}", f"I-{t.code}"]
        for e in self.entity_labels:
            trig += [f"B-{e}", f"I-{e}"]
        object.__setattr__(self, "trigger_labels", tuple(trig))
        object.__setattr__(self, "arg_labels", ARG_LABELS)
        object.__setattr__(self, "_trigger_index", {l: i for i, l in enumerate(trig)})
        object.__setattr__(self, "_arg_index", {l: i for i, l in enumerate(ARG_LABELS)})

    @classmethod
    def ge11(cls, entity_labels: tuple[str, ...] = ("Protein",)) -> "LabelSchema":
        return cls(GE11_EVENT_TYPES, entity_labels)

    @classmethod
    def ge13(cls, entity_labels: tuple[str, ...] = ("Protein",)) -> "LabelSchema":
        return cls(GE13_EVENT_TYPES, entity_labels)

    @property
    def num_trigger_labels(self) -> int:
        return len(self.trigger_labels)

    @property
    def num_arg_labels(self) -> int:
        return len(self.arg_labels)

    def trigger_id(self, label: str) -> int:
        try:
            return self._trigger_index[label]
        except KeyError:
            raise UnknownLabel(f"trigger label {label!r}") from None

    def arg_id(self, label: str) -> int:
        try:
            return self._arg_index[label]
        except KeyError:
            raise UnknownLabel(f"argument label {label!r}") from None

    def to_json(self) -> dict:
        return {
            "event_types": [t.code for t in self.event_types],
            "entity_labels": list(self.entity_labels),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "LabelSchema":
        return cls(
            tuple(EventType.parse(c) for c in payload["event_types"]),
            tuple(payload["entity_labels"]),
        )


@dataclass
class TokenizedSentence:
    """A masked, subword-tokenized sentence with offsets back into its text.

    ``masks`` maps token index -> the entity mention masked there; masked
    mentions occupy exactly one token.  ``word_of`` gives the word number of
    every token (pieces of one word share it); the ``[CLS]`` head is word -1
    with span ``(0, 0)``.
    """

    doc_id: str
    text: str
    pieces: tuple[str, ...]
    ids: tuple[int, ...]
    spans: tuple[tuple[int, int], ...]
    word_of: tuple[int, ...]
    masks: dict[int, EntityMention] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.pieces)


def tokenize_and_mask(doc: Document, vocab: SubwordVocab) -> TokenizedSentence:
    """Tokenize a (sentence-scoped) document, one ``@TYPE@`` token per
    entity mention.  Raises :class:`OverlappingEntities` when two mentions
    overlap and therefore cannot both be masked."""
    ents = sorted(doc.entities, key=lambda e: (e.start, e.end))
    for prev, nxt in zip(ents, ents[1:]):
        if nxt.start < prev.end:
            raise OverlappingEntities(
                f"{doc.doc_id}: {prev.id} {prev.start}..{prev.end} overlaps "
                f"{nxt.id} {nxt.start}..{nxt.end}"
            )

    segments: list[tuple[int, int, EntityMention | None]] = []
    cursor = 0
    for e in ents:
        segments.append((cursor, e.start, None))
        segments.append((e.start, e.end, e))
        cursor = e.end
    segments.append((cursor, len(doc.text), None))

    pieces: list[str] = [CLS]
    spans: list[tuple[int, int]] = [(0, 0)]
    word_of: list[int] = [-1]
    masks: dict[int, EntityMention] = {}
    word = 0
    for a, b, mention in segments:
        if mention is not None:
            masks[len(pieces)] = mention
            pieces.append(mask_token(mention.etype))
            spans.append((a, b))
            word_of.append(word)
            word += 1
            continue
        for wa, wb in pretokenize(doc.text[a:b]):
            word_pieces = vocab.wordpiece(doc.text[a + wa : a + wb])
            if word_pieces == [UNK]:
                pieces.append(UNK)
                spans.append((a + wa, a + wb))
                word_of.append(word)
            else:
                pos = a + wa
                for p in word_pieces:
                    width = len(p) - 2 if p.startswith("##") else len(p)
                    pieces.append(p)
                    spans.append((pos, pos + width))
                    word_of.append(word)
                    pos += width
            word += 1

    return TokenizedSentence(
        doc_id=doc.doc_id,
        text=doc.text,
        pieces=tuple(pieces),
        ids=tuple(vocab.id(p) for p in pieces),
        spans=tuple(spans),
        word_of=tuple(word_of),
        masks=masks,
    )


@dataclass
class LabelFrame:
    """One gold or predicted labeling of a tokenized sentence."""

    trigger: tuple[str, ...]
    theme: tuple[str, ...]
    cause: tuple[str, ...]

    def ids(self, schema: LabelSchema) -> tuple[list[int], list[int], list[int]]:
        return (
            [schema.trigger_id(l) for l in self.trigger],
            [schema.arg_id(l) for l in self.theme],
            [schema.arg_id(l) for l in self.cause],
        )


def label_runs(labels) -> tuple[list[tuple[int, int, str]], int]:
    """Maximal BIO runs as ``(first, last, tag)`` with inclusive indices.

    An ``I-`` label opening a run (after ``O`` or a different tag) is
    repaired into a fresh run; the repair count is returned alongside.
    """
    runs: list[list] = []
    repaired = 0
    cur = None
    for i, lab in enumerate(labels):
        if lab == "O":
            cur = None
            continue
        if "-" not in lab:
            raise UnknownLabel(f"label {lab!r} is neither O nor B-/I- tagged")
        b, tag = lab.split("-", 1)
        if b == "B" or cur is None or cur[2] != tag:
            if b == "I":
                repaired += 1
            runs.append([i, i, tag])
            cur = runs[-1]
        else:
            cur[1] = i
    return [(f, l, t) for f, l, t in runs], repaired


def event_trigger_runs(trigger_labels) -> list[tuple[int, int, str]]:
    """Trigger-layer runs restricted to event types (entity runs excluded)."""
    runs, _ = label_runs(trigger_labels)
    return [(f, l, t) for f, l, t in runs if EventType.is_event_type(t)]


def _covered_tokens(sent: TokenizedSentence, start: int, end: int) -> list[int]:
    return [
        i
        for i, (a, b) in enumerate(sent.spans)
        if a < end and start < b  # [CLS] at (0, 0) never qualifies
    ]


def encode_labels(
    sent: TokenizedSentence, doc: Document, schema: LabelSchema, strict: bool = False
) -> tuple[LabelFrame, Counter]:
    """Paint the three gold label layers for one sentence.

    Every annotation that cannot be expressed is dropped and tallied:
    owner rank beyond 2 (``rank_overflow:*``), label collisions
    (``collision:*``, resolved toward the nearer owner), argument spans
    overlapping their own trigger, and spans outside the token range.
    With ``strict=True`` collisions raise :class:`LabelCollision` instead
    of being resolved.
    """
    stats: Counter = Counter()
    n = len(sent)
    trigger = ["O"] * n

    for i, mention in sent.masks.items():
        label = f"B-{canon_entity_label(mention.etype)}"
        if label in schema.trigger_labels:
            trigger[i] = label
        else:
            stats["entity_outside_schema"] += 1

    # distinct trigger mentions, first type wins a shared span
    mention_types: dict[tuple[int, int], EventType] = {}
    for ev in doc.events:
        key = (ev.trigger.start, ev.trigger.end)
        if key in mention_types:
            if mention_types[key] is not ev.etype:
                stats["collision:trigger"] += 1
        else:
            mention_types[key] = ev.etype

    # (first_tok, last_tok) of each placed mention, in token order
    placed: list[tuple[int, int]] = []
    placed_span: dict[tuple[int, int], tuple[int, int]] = {}
    for (start, end), etype in sorted(mention_types.items()):
        if etype not in schema.event_types:
            stats["type_outside_schema"] += 1
            continue
        toks = _covered_tokens(sent, start, end)
        if not toks:
            stats["trigger_outside_tokens"] += 1
            continue
        if any(trigger[i] != "O" for i in toks):
            if strict:
                raise LabelCollision(
                    f"{doc.doc_id}: trigger {etype.code}@{start}-{end} overlaps "
                    f"an occupied trigger-layer token"
                )
            stats["collision:trigger"] += 1
            continue
        trigger[toks[0]] = f"B-{etype.code}"
        for i in toks[1:]:
            trigger[i] = f"I-{etype.code}"
        placed.append((toks[0], toks[-1]))
        placed_span[(start, end)] = (toks[0], toks[-1])

    layers = {THEME: ["O"] * n, CAUSE: ["O"] * n}
    # token -> index of owning placed link, per layer; links may be evicted
    owners = {THEME: {}, CAUSE: {}}
    link_info: dict[str, list[tuple[list[int], int, str]]] = {THEME: [], CAUSE: []}
    seen_links: set = set()
    gold = doc.event_by_id()
    entities = doc.entity_by_id()

    def arg_char_span(ref: str) -> tuple[int, int] | None:
        if ref in entities:
            e = entities[ref]
            return (e.start, e.end)
        if ref in gold:
            t = gold[ref].trigger
            return (t.start, t.end)
        return None

    def place(role: str, ev, ref: str) -> None:
        key = (ev.trigger.start, ev.trigger.end)
        if key not in placed_span:
            stats[f"owner_missing:{role}"] += 1
            return
        of, ol = placed_span[key]
        span = arg_char_span(ref)
        if span is None:
            stats[f"arg_unresolvable:{role}"] += 1
            return
        toks = _covered_tokens(sent, *span)
        if not toks:
            stats[f"arg_outside_tokens:{role}"] += 1
            return
        af, al = toks[0], toks[-1]
        if ol < af:
            side, distance = "Left", af - ol
            cands = sorted((m for m in placed if m[1] < af), key=lambda m: -m[1])
        elif of > al:
            side, distance = "Right", of - al
            cands = sorted((m for m in placed if m[0] > al), key=lambda m: m[0])
        else:
            stats[f"arg_overlaps_owner:{role}"] += 1
            return
        rank = cands.index((of, ol)) + 1
        if rank > 2:
            stats[f"rank_overflow:{role}"] += 1
            return
        tag = f"{side}{rank}"
        dedup = (role, of, ol, af, al, tag)
        if dedup in seen_links:
            return
        seen_links.add(dedup)

        layer, owner = layers[role], owners[role]
        occupants = {owner[i] for i in toks if i in owner}
        if occupants:
            if strict:
                raise LabelCollision(
                    f"{doc.doc_id}: {role} span at tokens {toks[0]}..{toks[-1]} "
                    f"already owned by another link"
                )
            # nearer owner wins: smaller index first, token distance breaks
            # ties, the earlier-placed link stays on a full tie
            nearest = min(link_info[role][k][1] for k in occupants)
            if (rank, distance) >= nearest:
                stats[f"collision:{role}"] += 1
                return
            stats[f"collision:{role}"] += len(occupants)
            for k in occupants:
                for i in link_info[role][k][0]:
                    layer[i] = "O"
                    owner.pop(i, None)
        idx = len(link_info[role])
        link_info[role].append((toks, (rank, distance), tag))
        layer[toks[0]] = f"B-{tag}"
        for i in toks[1:]:
            layer[i] = f"I-{tag}"
        for i in toks:
            owner[i] = idx

    for ev in doc.events:
        for ref in ev.themes:
            place(THEME, ev, ref)
        if ev.cause is not None:
            place(CAUSE, ev, ev.cause)

    frame = LabelFrame(tuple(trigger), tuple(layers[THEME]), tuple(layers[CAUSE]))
    return frame, stats


def decode_labels(
    sent: TokenizedSentence, frame: LabelFrame
) -> tuple[list[TriggerMention], list[ArgLink], Counter]:
    """Invert a labeling into trigger mentions and argument links.

    Malformed BIO openings are repaired; a directional label whose owner
    index points past the available trigger mentions is dropped and counted
    (``unresolved:theme`` / ``unresolved:cause``).
    """
    stats: Counter = Counter()
    runs, rep = label_runs(frame.trigger)
    if rep:
        stats["repaired:trigger"] += rep
    event_runs = [(f, l, t) for f, l, t in runs if EventType.is_event_type(t)]

    triggers: list[TriggerMention] = []
    span_index: dict[tuple[int, int], TriggerMention] = {}
    for k, (f, l, tag) in enumerate(event_runs):
        start, end = sent.spans[f][0], sent.spans[l][1]
        tr = TriggerMention(
            id=f"TR{k + 1}",
            etype=EventType.parse(tag),
            start=start,
            end=end,
            surface=sent.text[start:end],
        )
        triggers.append(tr)
        span_index.setdefault((start, end), tr)

    links: list[ArgLink] = []
    for role, labels in ((THEME, frame.theme), (CAUSE, frame.cause)):
        aruns, rep = label_runs(labels)
        if rep:
            stats[f"repaired:{role}"] += rep
        for f, l, tag in aruns:
            m = _ARG_TAG_RE.match(tag)
            if m is None:
                raise UnknownLabel(f"argument label tag {tag!r}")
            side, rank = m.group(1), int(m.group(2))
            if side == "Left":
                cands = [k for k, (tf, tl, _) in enumerate(event_runs) if tl < f]
                cands.sort(key=lambda k: -event_runs[k][1])
            else:
                cands = [k for k, (tf, tl, _) in enumerate(event_runs) if tf > l]
                cands.sort(key=lambda k: event_runs[k][0])
            if len(cands) < rank:
                stats[f"unresolved:{role}"] += 1
                continue
            owner = triggers[cands[rank - 1]]
            start, end = sent.spans[f][0], sent.spans[l][1]
            arg_trigger = span_index.get((start, end))
            if arg_trigger is not None:
                links.append(
                    ArgLink(owner, role, start, end, "trigger", arg_trigger=arg_trigger)
                )
            elif f == l and f in sent.masks:
                links.append(
                    ArgLink(owner, role, start, end, "entity", entity=sent.masks[f])
                )
            else:
                # span matches neither a trigger nor a masked entity
                links.append(ArgLink(owner, role, start, end, "entity", entity=None))
    return triggers, links, stats


# --------------------------------------------------------------------------
# serialization for prepared corpora


def sentence_record(sent: TokenizedSentence, frame: LabelFrame | None = None) -> dict:
    """JSON-serializable record of one tokenized (and optionally labeled)
    sentence."""
    rec = {
        "doc_id": sent.doc_id,
        "text": sent.text,
        "pieces": list(sent.pieces),
        "ids": list(sent.ids),
        "spans": [list(s) for s in sent.spans],
        "word_of": list(sent.word_of),
        "masks": [
            [i, e.id, e.etype, e.start, e.end, e.surface]
            for i, e in sorted(sent.masks.items())
        ],
    }
    if frame is not None:
        rec["labels"] = {
            "trigger": list(frame.trigger),
            "theme": list(frame.theme),
            "cause": list(frame.cause),
        }
    return rec


def sentence_from_record(rec: dict) -> tuple[TokenizedSentence, LabelFrame | None]:
    sent = TokenizedSentence(
        doc_id=rec["doc_id"],
        text=rec["text"],
        pieces=tuple(rec["pieces"]),
        ids=tuple(rec["ids"]),
        spans=tuple((a, b) for a, b in rec["spans"]),
        word_of=tuple(rec["word_of"]),
        masks={
            i: EntityMention(eid, etype, start, end, surface)
            for i, eid, etype, start, end, surface in rec["masks"]
        },
    )
    frame = None
    if "labels" in rec:
        lab = rec["labels"]
        frame = LabelFrame(tuple(lab["trigger"]), tuple(lab["theme"]), tuple(lab["cause"]))
    return sent, frame
