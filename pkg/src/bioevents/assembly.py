"""Rule-based construction of events from decoded triggers and argument links.

The construction rules follow the type system:

* simple types (GeEx, Tran, PrCa, Phos, Loca, PrMo, Ubiq, Acet, Deac) take
  one entity theme each and no cause; a trigger with several theme links
  yields one event per theme,
* Binding groups all entity theme links of one trigger into a single event,
* regulation types (Regu, PoRe, NeRe) take exactly one theme (entity or
  event) plus an optional cause; a theme link pointing at another trigger
  fans out into one event per event anchored there.

Nothing here raises: every link that cannot become part of a well-formed
event is dropped and tallied in the returned counter.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Union

from .types import (
    BINDING_TYPES,
    EntityMention,
    EventType,
    REGULATION_TYPES,
    TriggerMention,
)

THEME = "theme"
CAUSE = "cause"


@dataclass(frozen=True)
class ArgLink:
    """One decoded (trigger, role, argument) connection.

    ``kind`` is ``"trigger"`` when the argument span coincides with a decoded
    trigger (enabling nesting), else ``"entity"``.  Entity-kind links carry
    the resolved mention when the span is a single entity mask, otherwise
    ``entity`` is None and the link is unresolvable.
    """

    trigger: TriggerMention
    role: str  # THEME or CAUSE
    start: int
    end: int
    kind: str  # "entity" or "trigger"
    entity: EntityMention | None = None
    arg_trigger: TriggerMention | None = None


EventArg = Union[EntityMention, "BuiltEvent"]


@dataclass(frozen=True, eq=False)
class BuiltEvent:
    """An assembled event; arguments are entity mentions or other events."""

    etype: EventType
    trigger: TriggerMention
    themes: tuple[EventArg, ...]
    cause: EventArg | None = None


@dataclass
class EventSet:
    """Assembled events plus drop accounting."""

    events: list[BuiltEvent] = field(default_factory=list)
    drops: Counter = field(default_factory=Counter)

    @property
    def dropped_links(self) -> int:
        return sum(self.drops.values())


def _trigger_key(t: TriggerMention):
    return (t.start, t.end, t.etype.value)


def assemble(triggers: list[TriggerMention], links: list[ArgLink]) -> EventSet:
    """Build well-formed events out of decoded triggers and links.

    Triggers are processed in dependency order so that a regulation theme
    pointing at another trigger resolves to that trigger's already-built
    events; a cyclic dependency drops the closing link.
    """
    out = EventSet()
    by_trigger: dict[tuple, list[ArgLink]] = {_trigger_key(t): [] for t in triggers}
    trigger_of: dict[tuple, TriggerMention] = {_trigger_key(t): t for t in triggers}
    for link in links:
        key = _trigger_key(link.trigger)
        if key not in by_trigger:
            out.drops["link_unknown_trigger"] += 1
            continue
        by_trigger[key].append(link)

    # dependency edges: regulation trigger -> trigger of its event-kind args
    deps: dict[tuple, set[tuple]] = {k: set() for k in by_trigger}
    for key, ls in by_trigger.items():
        for link in ls:
            if link.kind == "trigger" and link.arg_trigger is not None:
                dep = _trigger_key(link.arg_trigger)
                if dep in by_trigger and dep != key:
                    deps[key].add(dep)

    order: list[tuple] = []
    state: dict[tuple, int] = {}  # 0 in-stack, 1 done
    broken: set[tuple[tuple, tuple]] = set()

    def visit(key):
        if state.get(key) == 1:
            return
        state[key] = 0
        for dep in sorted(deps[key]):
            if state.get(dep) == 0:  # back-edge closes a cycle
                broken.add((key, dep))
                out.drops["cycle_link"] += 1
                continue
            visit(dep)
        state[key] = 1
        order.append(key)

    for key in sorted(by_trigger):
        visit(key)

    events_of: dict[tuple, list[BuiltEvent]] = {}
    for key in order:
        trigger = trigger_of[key]
        etype = trigger.etype
        ls = sorted(by_trigger[key], key=lambda l: (l.start, l.end, l.role))
        themes = [l for l in ls if l.role == THEME]
        causes = [l for l in ls if l.role == CAUSE]
        built: list[BuiltEvent] = []

        def entity_of(link):
            if link.kind == "trigger":
                return None
            return link.entity

        if etype in REGULATION_TYPES:
            cause_arg = None
            if causes:
                head, extra = causes[0], causes[1:]
                if extra:
                    out.drops["extra_cause"] += len(extra)
                if head.kind == "trigger":
                    dep = _trigger_key(head.arg_trigger) if head.arg_trigger else None
                    nested = events_of.get(dep, []) if dep and (key, dep) not in broken else []
                    if nested:
                        cause_arg = nested[0]
                    else:
                        out.drops["unresolved_cause"] += 1
                elif head.entity is not None:
                    cause_arg = head.entity
                else:
                    out.drops["unresolved_cause"] += 1
            for link in themes:
                if link.kind == "trigger":
                    dep = _trigger_key(link.arg_trigger) if link.arg_trigger else None
                    if dep is None or (key, dep) in broken:
                        out.drops["theme_dropped"] += 1
                        continue
                    nested = events_of.get(dep, [])
                    if not nested:
                        out.drops["theme_dropped"] += 1
                        continue
                    for sub in nested:  # fan out over the anchored events
                        built.append(BuiltEvent(etype, trigger, (sub,), cause_arg))
                else:
                    ent = entity_of(link)
                    if ent is None:
                        out.drops["theme_dropped"] += 1
                        continue
                    built.append(BuiltEvent(etype, trigger, (ent,), cause_arg))
        elif etype in BINDING_TYPES:
            if causes:
                out.drops["cause_on_nonregulation"] += len(causes)
            ents = []
            for link in themes:
                ent = entity_of(link)
                if ent is None:
                    out.drops["theme_dropped"] += 1
                else:
                    ents.append(ent)
            if ents:
                built.append(BuiltEvent(etype, trigger, tuple(ents), None))
        else:  # simple types: entity themes only, one event per theme
            if causes:
                out.drops["cause_on_nonregulation"] += len(causes)
            for link in themes:
                ent = entity_of(link)
                if ent is None:
                    out.drops["theme_dropped"] += 1
                    continue
                built.append(BuiltEvent(etype, trigger, (ent,), None))

        if not built and not themes:
            out.drops["themeless_trigger"] += 1
        events_of[key] = built
        out.events.extend(built)
    return out


def validate(events: list[BuiltEvent]) -> list[str]:
    """Check event-set invariants; returns human-readable violations."""
    violations: list[str] = []

    def describe(ev):
        return f"{ev.etype.code}@{ev.trigger.start}-{ev.trigger.end}"

    for ev in events:
        name = describe(ev)
        if not ev.themes:
            violations.append(f"{name}: event without theme")
        if ev.etype in REGULATION_TYPES:
            if len(ev.themes) != 1:
                violations.append(f"{name}: regulation with {len(ev.themes)} themes")
        else:
            if ev.cause is not None:
                violations.append(f"{name}: cause on non-regulation type")
            if any(isinstance(t, BuiltEvent) for t in ev.themes):
                violations.append(f"{name}: event theme on non-regulation type")
            if ev.etype not in BINDING_TYPES and len(ev.themes) > 1:
                violations.append(f"{name}: simple type with {len(ev.themes)} themes")

    # nesting graph must be acyclic (object identity graph)
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[int, int] = {}

    def dfs(ev) -> bool:
        c = color.get(id(ev), WHITE)
        if c == GRAY:
            return False
        if c == BLACK:
            return True
        color[id(ev)] = GRAY
        ok = True
        for arg in ev.themes + ((ev.cause,) if ev.cause is not None else ()):
            if isinstance(arg, BuiltEvent):
                ok = ok and dfs(arg)
        color[id(ev)] = BLACK
        return ok

    for ev in events:
        if not dfs(ev):
            violations.append(f"{describe(ev)}: cyclic nesting")
            break
    return violations
