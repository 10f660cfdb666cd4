"""Deterministic synthetic standoff corpora for tests, demos and
self-contained end-to-end runs.

Every generator returns raw standoff triples so the exercised path is the
same one real corpora take (text through the parser).  Four corpora:

* :func:`roundtrip_corpus`: randomized sentences with up to 4 triggers,
  nested regulation, multi-token triggers and deliberately long-range
  arguments (beyond the 2-mention distance limit), collision-free by
  construction,
* :func:`drop_rate_corpus`: an exact number of in-distance and
  out-of-distance argument links, for drop-rate accounting,
* :func:`overfit_corpus`: 8 fixed sentences covering every construction
  family, small enough to memorize,
* :func:`separability_corpus`: sentences where the argument direction is
  determined solely by a trigger type outside the local context window of
  the argument token, so argument accuracy requires merged trigger
  information.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .standoff import parse_document
from .types import (
    BINDING_TYPES,
    Document,
    EventType,
    GE11_EVENT_TYPES,
    REGULATION_TYPES,
)

PROTEINS = ("TP53", "IL2", "STAT3", "FOXP3", "CTLA4", "BMP6", "SMAD1", "JAK2", "MYC", "NFKB1")
FILLERS = (
    "the", "cells", "we", "observed", "in", "this", "assay", "results",
    "strongly", "weakly", "then", "also", "levels", "of", "with", "after",
)
TRIGGER_WORDS: dict[EventType, tuple[str, ...]] = {
    EventType.GeEx: ("expression", "expressed"),
    EventType.Tran: ("transcription",),
    EventType.PrCa: ("degradation",),
    EventType.Phos: ("phosphorylation",),
    EventType.Loca: ("localization", "secretion"),
    EventType.Bind: ("binding", "interaction"),
    EventType.Regu: ("regulates", "controls"),
    EventType.PoRe: ("induces", "activates", "upregulates"),
    EventType.NeRe: ("inhibits", "suppresses"),
}
# two-word trigger surfaces to exercise I- labels and multi-token mentions
TRIGGER_PHRASES: dict[EventType, tuple[tuple[str, str], ...]] = {
    EventType.PoRe: (("positive", "regulation"),),
    EventType.NeRe: (("negative", "regulation"),),
}


@dataclass
class RawDoc:
    """One standoff triple plus its id; parse on demand."""

    doc_id: str
    txt: str
    a1: str
    a2: str

    def parse(self) -> Document:
        return parse_document(self.txt, self.a1, self.a2, doc_id=self.doc_id)


def write_standoff(docs: list[RawDoc], directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for d in docs:
        (directory / f"{d.doc_id}.txt").write_text(d.txt, encoding="utf-8")
        (directory / f"{d.doc_id}.a1").write_text(d.a1, encoding="utf-8")
        (directory / f"{d.doc_id}.a2").write_text(d.a2, encoding="utf-8")


# --------------------------------------------------------------------------
# sketch -> standoff rendering

Ref = tuple[str, int]  # ("T", entity index) or ("E", event index)


@dataclass
class _Sketch:
    words: list[str] = field(default_factory=list)
    entities: list[int] = field(default_factory=list)  # word indices
    triggers: list[tuple[tuple[int, ...], EventType]] = field(default_factory=list)
    events: list[tuple[int, list[Ref], Ref | None]] = field(default_factory=list)


def _render(doc_id: str, sk: _Sketch) -> RawDoc:
    text = " ".join(sk.words)
    spans = []
    pos = 0
    for w in sk.words:
        spans.append((pos, pos + len(w)))
        pos += len(w) + 1

    a1_lines = []
    for n, wi in enumerate(sk.entities, 1):
        a, b = spans[wi]
        a1_lines.append(f"T{n}\tProtein {a} {b}\t{text[a:b]}")

    a2_lines = []
    trigger_ids = []
    next_t = len(sk.entities) + 1
    for wis, etype in sk.triggers:
        a, b = spans[wis[0]][0], spans[wis[-1]][1]
        trigger_ids.append(f"T{next_t}")
        a2_lines.append(f"T{next_t}\t{etype.value} {a} {b}\t{text[a:b]}")
        next_t += 1

    def ref_id(ref: Ref) -> str:
        kind, idx = ref
        return f"T{idx + 1}" if kind == "T" else f"E{idx + 1}"

    for n, (ti, themes, cause) in enumerate(sk.events, 1):
        etype = sk.triggers[ti][1]
        parts = [f"{etype.value}:{trigger_ids[ti]}"]
        for j, ref in enumerate(themes, 1):
            suffix = "" if j == 1 else str(j)
            parts.append(f"Theme{suffix}:{ref_id(ref)}")
        if cause is not None:
            parts.append(f"Cause:{ref_id(cause)}")
        a2_lines.append(f"E{n}\t" + " ".join(parts))

    def block(lines):
        return "\n".join(lines) + ("\n" if lines else "")

    return RawDoc(doc_id, text, block(a1_lines), block(a2_lines))


# --------------------------------------------------------------------------
# randomized round-trip corpus


def roundtrip_corpus(n: int = 1000, seed: int = 0) -> list[RawDoc]:
    """Randomized single-sentence documents for codec round-trip testing.

    Per-layer argument spans are kept collision-free, so every generated
    link is either expressible in the label schema or dropped by the
    distance rule alone.
    """
    rng = random.Random(seed)
    docs = []
    for s in range(n):
        sk = _Sketch()
        n_trig = rng.randint(0, 4)
        n_ent = rng.randint(1, 4)
        n_fill = rng.randint(2, 8)

        slots = ["e"] * n_ent + ["t"] * n_trig + ["f"] * n_fill
        rng.shuffle(slots)
        trigger_plan = []
        for slot in slots:
            if slot == "f":
                sk.words.append(rng.choice(FILLERS))
            elif slot == "e":
                sk.entities.append(len(sk.words))
                sk.words.append(rng.choice(PROTEINS))
            else:
                etype = rng.choice(GE11_EVENT_TYPES)
                phrases = TRIGGER_PHRASES.get(etype)
                if phrases and rng.random() < 0.3:
                    words = rng.choice(phrases)
                else:
                    words = (rng.choice(TRIGGER_WORDS[etype]),)
                wis = tuple(range(len(sk.words), len(sk.words) + len(words)))
                sk.words.extend(words)
                sk.triggers.append((wis, etype))
                trigger_plan.append(len(sk.triggers) - 1)
        sk.words.append(".")

        # argument spans already claimed, per layer, to stay collision-free
        used = {"theme": set(), "cause": set()}
        # triggers anchoring exactly one event (safe targets for nesting)
        single_event_of: dict[int, int] = {}

        def claim(layer: str, ref: Ref) -> bool:
            key = ref if ref[0] == "T" else ("TR", sk.events[ref[1]][0])
            if key in used[layer]:
                return False
            used[layer].add(key)
            return True

        for ti in trigger_plan:
            if rng.random() < 0.1:
                continue  # trigger word present in text but never annotated
            etype = sk.triggers[ti][1]
            ents = list(range(len(sk.entities)))
            rng.shuffle(ents)
            if etype in REGULATION_TYPES:
                themes: list[Ref] = []
                nested = [
                    tj for tj, ei in single_event_of.items() if tj != ti
                ]
                if nested and rng.random() < 0.4:
                    tj = rng.choice(nested)
                    ref: Ref = ("E", single_event_of[tj])
                    if claim("theme", ref):
                        themes.append(ref)
                if not themes:
                    for e in ents:
                        if claim("theme", ("T", e)):
                            themes.append(("T", e))
                            break
                if not themes:
                    continue
                cause: Ref | None = None
                roll = rng.random()
                if roll < 0.4:
                    for e in ents:
                        if claim("cause", ("T", e)):
                            cause = ("T", e)
                            break
                elif roll < 0.5 and nested:
                    tj = rng.choice(nested)
                    ref = ("E", single_event_of[tj])
                    if claim("cause", ref):
                        cause = ref
                sk.events.append((ti, themes, cause))
                single_event_of[ti] = len(sk.events) - 1
            elif etype in BINDING_TYPES:
                themes = []
                for e in ents[: rng.randint(1, 3)]:
                    if claim("theme", ("T", e)):
                        themes.append(("T", e))
                if not themes:
                    continue
                sk.events.append((ti, themes, None))
                single_event_of[ti] = len(sk.events) - 1
            else:
                first = None
                picked = []
                for e in ents:
                    if claim("theme", ("T", e)):
                        picked.append(e)
                    if len(picked) == (2 if rng.random() < 0.2 else 1):
                        break
                for e in picked:
                    sk.events.append((ti, [("T", e)], None))
                    first = first if first is not None else len(sk.events) - 1
                if len(picked) == 1 and first is not None:
                    single_event_of[ti] = first
        docs.append(_render(f"rt{s:04d}", sk))
    return docs


# --------------------------------------------------------------------------
# exact drop-rate corpus


def drop_rate_corpus(n_ok: int, n_over: int, prefix: str = "drop") -> list[RawDoc]:
    """A corpus with exactly ``n_ok`` in-distance argument links and
    ``n_over`` links at directional index 3 (dropped by the distance rule).

    Each overflow sentence carries three in-distance theme links plus one
    cause link whose owner is the third trigger mention away, so
    ``n_ok >= 3 * n_over`` is required.
    """
    if n_over < 0 or n_ok < 3 * n_over:
        raise ValueError("need n_ok >= 3 * n_over")
    docs = []
    k = 0
    for _ in range(n_over):
        # TP53 induces activates upregulates IL2 MYC: each trigger anchors
        # one in-distance theme; the cause of the third trigger points back
        # at TP53 across all three mentions (index 3) and is dropped.
        sk = _Sketch(words=["TP53", "induces", "activates", "upregulates", "IL2", "MYC", "."])
        sk.entities = [0, 4, 5]
        sk.triggers = [((1,), EventType.PoRe), ((2,), EventType.PoRe), ((3,), EventType.PoRe)]
        sk.events = [
            (0, [("T", 0)], None),
            (1, [("T", 1)], None),
            (2, [("T", 2)], ("T", 0)),
        ]
        docs.append(_render(f"{prefix}{k:03d}", sk))
        k += 1
    for _ in range(n_ok - 3 * n_over):
        sk = _Sketch(words=["TP53", "expression", "observed", "."])
        sk.entities = [0]
        sk.triggers = [((1,), EventType.GeEx)]
        sk.events = [(0, [("T", 0)], None)]
        docs.append(_render(f"{prefix}{k:03d}", sk))
        k += 1
    return docs


# --------------------------------------------------------------------------
# fixed overfit corpus


def overfit_corpus(prefix: str = "fit") -> list[RawDoc]:
    """Eight fixed sentences covering simple, Binding, regulation with
    entity cause, and nested regulation constructions."""
    sketches = []

    sk = _Sketch(words=["TP53", "is", "expressed", "here", "."])
    sk.entities = [0]
    sk.triggers = [((2,), EventType.GeEx)]
    sk.events = [(0, [("T", 0)], None)]
    sketches.append(sk)

    sk = _Sketch(words=["IL2", "phosphorylation", "occurs", "."])
    sk.entities = [0]
    sk.triggers = [((1,), EventType.Phos)]
    sk.events = [(0, [("T", 0)], None)]
    sketches.append(sk)

    sk = _Sketch(words=["TP53", "binding", "of", "IL2", "occurs", "."])
    sk.entities = [0, 3]
    sk.triggers = [((1,), EventType.Bind)]
    sk.events = [(0, [("T", 0), ("T", 1)], None)]
    sketches.append(sk)

    sk = _Sketch(words=["STAT3", "induces", "expression", "of", "MYC", "."])
    sk.entities = [0, 4]
    sk.triggers = [((1,), EventType.PoRe), ((2,), EventType.GeEx)]
    sk.events = [(1, [("T", 1)], None), (0, [("E", 0)], ("T", 0))]
    sketches.append(sk)

    sk = _Sketch(words=["JAK2", "suppresses", "FOXP3", "now", "."])
    sk.entities = [0, 2]
    sk.triggers = [((1,), EventType.NeRe)]
    sk.events = [(0, [("T", 1)], ("T", 0))]
    sketches.append(sk)

    sk = _Sketch(words=["CTLA4", "localization", "was", "observed", "."])
    sk.entities = [0]
    sk.triggers = [((1,), EventType.Loca)]
    sk.events = [(0, [("T", 0)], None)]
    sketches.append(sk)

    sk = _Sketch(words=["BMP6", "transcription", "is", "detected", "."])
    sk.entities = [0]
    sk.triggers = [((1,), EventType.Tran)]
    sk.events = [(0, [("T", 0)], None)]
    sketches.append(sk)

    sk = _Sketch(words=["NFKB1", "controls", "phosphorylation", "of", "SMAD1", "."])
    sk.entities = [0, 4]
    sk.triggers = [((1,), EventType.Regu), ((2,), EventType.Phos)]
    sk.events = [(1, [("T", 1)], None), (0, [("E", 0)], ("T", 0))]
    sketches.append(sk)

    return [_render(f"{prefix}{i}", sk) for i, sk in enumerate(sketches)]


# --------------------------------------------------------------------------
# trigger-type separability corpus


def separability_corpus(
    n_per_class: int = 20, seed: int = 0, prefix: str = "sep"
) -> list[RawDoc]:
    """Sentences of the form ``ctx PROT near TRIG near PROT ctx`` where the
    trigger type alone decides which protein is the theme and which the
    cause.  ``upshifts`` (PoRe) takes the right protein as theme and the
    left as cause; ``downshifts`` (NeRe) the mirror image.  The spacer
    keeps the trigger outside the arguments' local encoder window, so only
    the merging layer can carry the type to the argument tokens.
    """
    rng = random.Random(seed)
    docs = []
    for i in range(2 * n_per_class):
        positive = i % 2 == 0
        left, right = rng.choice(PROTEINS), rng.choice(PROTEINS)
        ctx1, ctx2 = rng.choice(FILLERS), rng.choice(FILLERS)
        word = "upshifts" if positive else "downshifts"
        sk = _Sketch(words=[ctx1, left, "near", word, "near", right, ctx2, "."])
        sk.entities = [1, 5]
        sk.triggers = [((3,), EventType.PoRe if positive else EventType.NeRe)]
        if positive:
            sk.events = [(0, [("T", 1)], ("T", 0))]
        else:
            sk.events = [(0, [("T", 0)], ("T", 1))]
        docs.append(_render(f"{prefix}{i:03d}", sk))
    return docs


def nested_example(doc_id: str = "nested") -> RawDoc:
    """The two-event nested sentence used throughout the documentation."""
    txt = "BMP-6 rapidly induced phosphorylation of Smad1/5/8"
    a1 = "T1\tProtein 0 5\tBMP-6\nT2\tProtein 41 50\tSmad1/5/8\n"
    a2 = (
        "T3\tPositive_regulation 14 21\tinduced\n"
        "T4\tPhosphorylation 22 37\tphosphorylation\n"
        "E1\tPhosphorylation:T4 Theme:T2\n"
        "E2\tPositive_regulation:T3 Theme:E1 Cause:T1\n"
    )
    return RawDoc(doc_id, txt, a1, a2)
