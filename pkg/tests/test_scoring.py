"""Scorer: span windows, greedy matching, micro tallies, aggregation."""

from __future__ import annotations

import math

import pytest

from bioevents.assembly import BuiltEvent
from bioevents.errors import DocIdMismatch
from bioevents.scoring import (
    APPROXIMATE,
    MICRO,
    STRICT,
    DocView,
    ScoreReport,
    Tally,
    aggregate_runs,
    aggregate_table,
    event_match,
    score_corpus,
    span_match,
)
from bioevents.types import EntityMention, EventType, TriggerMention

TEXT = "alpha beta gamma delta epsilon zeta"
# word spans: alpha 0-5, beta 6-10, gamma 11-16, delta 17-22, epsilon 23-30


def _trigger(etype, start, end):
    return TriggerMention("t", etype, start, end, TEXT[start:end])


def _entity(eid, start, end):
    return EntityMention(eid, "Protein", start, end, TEXT[start:end])


def _event(etype, trigger, themes=(), cause=None):
    return BuiltEvent(etype, trigger, tuple(themes), cause)


def test_span_match_window():
    gold = _trigger(EventType.Phos, 6, 16)  # beta gamma
    assert span_match(_trigger(EventType.Phos, 6, 16), gold, TEXT)
    # one extra word on the right boundary is still a match
    assert span_match(_trigger(EventType.Phos, 6, 22), gold, TEXT)
    # one fewer word on the left is too
    assert span_match(_trigger(EventType.Phos, 11, 16), gold, TEXT)
    # two words off on one side is not
    assert not span_match(_trigger(EventType.Phos, 6, 30), gold, TEXT)
    assert not span_match(_trigger(EventType.GeEx, 6, 16), gold, TEXT)


def test_span_match_needs_word_overlap():
    gold = _trigger(EventType.Phos, 6, 10)
    ws = _trigger(EventType.Phos, 5, 6)  # whitespace only
    assert not span_match(ws, gold, TEXT)


def test_tally_zero_conventions():
    assert Tally().p == 0.0
    assert Tally().r == 0.0
    assert Tally().f1 == 0.0
    t = Tally(tp=2, fp=1, fn=2)
    assert t.p == pytest.approx(2 / 3)
    assert t.r == pytest.approx(1 / 2)
    assert t.f1 == pytest.approx(4 / 7)


def _simple_view(doc_id="d1"):
    tr = _trigger(EventType.GeEx, 11, 16)
    ev = _event(EventType.GeEx, tr, [_entity("T1", 0, 5)])
    return DocView.from_events(doc_id, TEXT, [ev])


def test_identity_scores_perfect():
    report = score_corpus({"d1": _simple_view()}, {"d1": _simple_view()})
    for task in ("trigger", "argument", "event"):
        assert report.section(task)[MICRO].f1 == 1.0


def test_disjoint_predictions_score_zero():
    pred_tr = _trigger(EventType.Phos, 23, 30)
    pred = DocView.from_events("d1", TEXT, [_event(EventType.Phos, pred_tr, [_entity("T9", 31, 35)])])
    report = score_corpus({"d1": pred}, {"d1": _simple_view()})
    micro = report.events[MICRO]
    assert (micro.tp, micro.fp, micro.fn) == (0, 1, 1)
    assert micro.f1 == 0.0


def test_empty_both_sides_scores_zero_not_nan():
    empty = DocView.from_events("d1", TEXT, [])
    report = score_corpus({"d1": empty}, {"d1": empty})
    micro = report.events[MICRO]
    assert (micro.tp, micro.fp, micro.fn) == (0, 0, 0)
    assert micro.f1 == 0.0 and not math.isnan(micro.f1)


def test_greedy_match_is_one_to_one():
    tr = _trigger(EventType.GeEx, 11, 16)
    one = DocView.from_events("d1", TEXT, [], triggers=[tr])
    two = DocView.from_events("d1", TEXT, [], triggers=[tr, _trigger(EventType.GeEx, 11, 16)])
    # two identical golds, one prediction: the second gold goes unmatched
    report = score_corpus({"d1": one}, {"d1": two})
    assert (report.triggers[MICRO].tp, report.triggers[MICRO].fn) == (1, 1)
    # two identical predictions, one gold: one becomes a false positive
    report = score_corpus({"d1": two}, {"d1": one})
    assert (report.triggers[MICRO].tp, report.triggers[MICRO].fp) == (1, 1)


def test_doc_id_mismatch_raises():
    with pytest.raises(DocIdMismatch):
        score_corpus({"d1": _simple_view("d1")}, {"d2": _simple_view("d2")})


def test_argument_links_match_within_one_word():
    tr = _trigger(EventType.GeEx, 11, 16)
    gold = DocView.from_events("d1", TEXT, [_event(EventType.GeEx, tr, [_entity("T1", 0, 5)])])
    shifted = DocView.from_events("d1", TEXT, [_event(EventType.GeEx, tr, [_entity("T1", 0, 10)])])
    report = score_corpus({"d1": shifted}, {"d1": gold})
    assert report.arguments[MICRO].f1 == 1.0
    # same span under the wrong role does not match
    caused = DocView.from_events(
        "d1", TEXT, [_event(EventType.PoRe, tr, [_entity("T2", 17, 22)], cause=_entity("T1", 0, 5))]
    )
    report = score_corpus({"d1": caused}, {"d1": gold})
    assert report.arguments[MICRO].tp == 0


def test_event_match_theme_order_is_free():
    tr = _trigger(EventType.Bind, 6, 10)
    a, b = _entity("T1", 0, 5), _entity("T2", 11, 16)
    pred = _event(EventType.Bind, tr, [b, a])
    gold = _event(EventType.Bind, tr, [a, b])
    assert event_match(pred, gold, STRICT, TEXT)


def test_event_match_cardinality_gates():
    tr = _trigger(EventType.Bind, 6, 10)
    a, b = _entity("T1", 0, 5), _entity("T2", 11, 16)
    assert not event_match(_event(EventType.Bind, tr, [a]), _event(EventType.Bind, tr, [a, b]), STRICT, TEXT)
    reg = _trigger(EventType.PoRe, 6, 10)
    with_cause = _event(EventType.PoRe, reg, [a], cause=b)
    without = _event(EventType.PoRe, reg, [a])
    assert not event_match(with_cause, without, STRICT, TEXT)
    assert not event_match(without, with_cause, STRICT, TEXT)


def test_nested_argument_modes_differ():
    inner_tr = _trigger(EventType.Phos, 11, 16)
    outer_tr = _trigger(EventType.PoRe, 6, 10)
    gold_inner = _event(EventType.Phos, inner_tr, [_entity("T1", 0, 5)])
    pred_inner = _event(EventType.Phos, inner_tr, [_entity("T2", 17, 22)])
    gold = _event(EventType.PoRe, outer_tr, [gold_inner])
    pred = _event(EventType.PoRe, outer_tr, [pred_inner])
    assert event_match(pred, gold, APPROXIMATE, TEXT)
    assert not event_match(pred, gold, STRICT, TEXT)
    # an entity can never stand in for a nested event
    flat = _event(EventType.PoRe, outer_tr, [_entity("T1", 11, 16)])
    assert not event_match(flat, gold, APPROXIMATE, TEXT)


def test_event_match_rejects_unknown_mode():
    tr = _trigger(EventType.GeEx, 11, 16)
    ev = _event(EventType.GeEx, tr, [_entity("T1", 0, 5)])
    with pytest.raises(ValueError):
        event_match(ev, ev, "sloppy", TEXT)


def test_from_events_collects_nested_triggers_and_links():
    inner_tr = _trigger(EventType.Phos, 11, 16)
    outer_tr = _trigger(EventType.PoRe, 6, 10)
    inner = _event(EventType.Phos, inner_tr, [_entity("T1", 0, 5)])
    outer = _event(EventType.PoRe, outer_tr, [inner], cause=_entity("T2", 17, 22))
    view = DocView.from_events("d1", TEXT, [outer])
    assert {t.etype for t in view.triggers} == {EventType.PoRe, EventType.Phos}
    roles = sorted((owner.etype.code, role, a, b) for owner, role, a, b in view.links)
    assert roles == [
        ("Phos", "theme", 0, 5),
        ("PoRe", "cause", 17, 22),
        ("PoRe", "theme", 11, 16),
    ]


def _report_with_micro(tp, fp, fn, mode=APPROXIMATE):
    report = ScoreReport(mode=mode)
    for section in (report.triggers, report.arguments, report.events):
        section[MICRO] = Tally(tp=tp, fp=fp, fn=fn)
    return report


def test_aggregate_runs_mean_and_population_std():
    runs = [_report_with_micro(1, 0, 0), _report_with_micro(0, 1, 1)]
    agg = aggregate_runs(runs)
    assert agg["runs"] == 2
    f1 = agg["tasks"]["event"][MICRO]["f1"]
    assert f1["mean"] == pytest.approx(0.5)
    assert f1["std"] == pytest.approx(0.5)
    single = aggregate_runs([_report_with_micro(1, 0, 0)])
    assert single["tasks"]["event"][MICRO]["f1"] == {"mean": 1.0, "std": 0.0}
    with pytest.raises(ValueError):
        aggregate_runs([])


def test_report_rendering_smoke():
    report = score_corpus({"d1": _simple_view()}, {"d1": _simple_view()})
    text = report.table()
    assert "micro" in text and "[event]" in text
    payload = report.to_json()
    assert payload["mode"] == APPROXIMATE
    assert payload["events"][MICRO]["f1"] == 1.0
    agg_text = aggregate_table(aggregate_runs([report, report]))
    assert "(±0.00)" in agg_text and "runs: 2" in agg_text
