"""Core domain types shared across parsing, labeling, assembly and scoring."""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import Counter
from enum import Enum

from .errors import UnknownType


class EventType(Enum):
    """Closed set of event types; values are the standoff type names."""

    GeEx = "Gene_expression"
    Tran = "Transcription"
    PrCa = "Protein_catabolism"
    Phos = "Phosphorylation"
    Loca = "Localization"
    Bind = "Binding"
    Regu = "Regulation"
    PoRe = "Positive_regulation"
    NeRe = "Negative_regulation"
    PrMo = "Protein_modification"
    Ubiq = "Ubiquitination"
    Acet = "Acetylation"
    Deac = "Deacetylation"

    @property
    def code(self) -> str:
        return self.name

    @classmethod
    def parse(cls, s: str) -> "EventType":
        """Accept either the standoff name or the short code."""
        if s in cls.__members__:
            return cls[s]
        try:
            return cls(s)
        except ValueError:
            raise UnknownType(f"unknown event type {s!r}") from None

    @classmethod
    def is_event_type(cls, s: str) -> bool:
        return s in cls.__members__ or s in _STANDOFF_NAMES


_STANDOFF_NAMES = {t.value for t in EventType}

REGULATION_TYPES = frozenset({EventType.Regu, EventType.PoRe, EventType.NeRe})
BINDING_TYPES = frozenset({EventType.Bind})
SIMPLE_TYPES = frozenset(EventType) - REGULATION_TYPES - BINDING_TYPES

GE11_EVENT_TYPES = (
    EventType.GeEx, EventType.Tran, EventType.PrCa, EventType.Phos,
    EventType.Loca, EventType.Bind, EventType.Regu, EventType.PoRe,
    EventType.NeRe,
)
GE13_EVENT_TYPES = GE11_EVENT_TYPES + (
    EventType.PrMo, EventType.Ubiq, EventType.Acet, EventType.Deac,
)


@dataclass(frozen=True)
class EntityMention:
    """A given (a1) entity mention; ``surface == text[start:end]``."""

    id: str
    etype: str
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class TriggerMention:
    """A trigger word span carrying an event type."""

    id: str
    etype: EventType
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class GoldEvent:
    """An event as annotated: trigger plus id-references to its arguments.

    ``themes`` / ``cause`` hold ids of entities (T...) or events (E...)
    within the same document.
    """

    id: str
    etype: EventType
    trigger: TriggerMention
    themes: tuple[str, ...]
    cause: str | None = None


@dataclass
class Document:
    """One corpus document: raw text, given entities, gold events."""

    doc_id: str
    text: str
    entities: list[EntityMention] = field(default_factory=list)
    events: list[GoldEvent] = field(default_factory=list)
    # annotations tolerated but outside the quadruple model (Equiv, Site, ...)
    skipped: Counter = field(default_factory=Counter)

    def entity_by_id(self) -> dict[str, EntityMention]:
        return {e.id: e for e in self.entities}

    def event_by_id(self) -> dict[str, GoldEvent]:
        return {e.id: e for e in self.events}
