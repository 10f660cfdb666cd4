"""Run configuration, data preparation, training loop, prediction."""

from __future__ import annotations

import pytest
import torch

from bioevents.errors import TrainingDiverged, UsageError
from bioevents.model import save_checkpoint, seed_everything
from bioevents.scoring import MICRO, ScoreReport, Tally, aggregate_runs
from bioevents.standoff import parse_document
from bioevents.synth import drop_rate_corpus, overfit_corpus
from bioevents.training import (
    RunConfig,
    _shift_events,
    ablation_table,
    build_model,
    build_vocab,
    drop_report,
    evaluate_model,
    load_examples,
    load_model,
    load_run_config,
    parse_config_text,
    predict_document,
    prepare_documents,
    save_examples,
    train_one_seed,
    train_run,
)
from bioevents.assembly import BuiltEvent
from bioevents.types import EntityMention, EventType, TriggerMention
from bioevents.vocab import mask_token


# --------------------------------------------------------------------------
# configuration


def test_parse_config_text_comments_and_blanks():
    text = "# header\nd: 16\n\nstrategy: average  # inline\n"
    assert parse_config_text(text) == {"d": "16", "strategy": "average"}


def test_parse_config_text_reports_position():
    with pytest.raises(UsageError, match=r"run\.cfg:2"):
        parse_config_text("d: 16\nnot a pair\n", filename="run.cfg")
    with pytest.raises(UsageError, match="duplicate"):
        parse_config_text("d: 16\nd: 32\n")


def test_load_run_config_file_plus_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "d: 16\nd_h: auto\nlearning_rate: auto\nseeds: 1, 2 3\ndropout: 0.2\n",
        encoding="utf-8",
    )
    run = load_run_config(cfg, overrides={"epochs": "5", "dev": None, "k": 2})
    assert run.d == 16
    assert run.d_h is None
    assert run.learning_rate is None
    assert run.seeds == (1, 2, 3)
    assert run.dropout == 0.2
    assert run.epochs == 5  # raw string override coerced
    assert run.k == 2  # typed override passed through
    assert run.dev is None  # None overrides are ignored


def test_load_run_config_rejects_unknown_and_malformed(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("depth: 16\n", encoding="utf-8")
    with pytest.raises(UsageError, match="unknown config key"):
        load_run_config(cfg)
    cfg.write_text("d: many\n", encoding="utf-8")
    with pytest.raises(UsageError, match="expects a int"):
        load_run_config(cfg)
    with pytest.raises(UsageError, match="seeds must be integers"):
        load_run_config(None, overrides={"seeds": "1,x"})
    with pytest.raises(UsageError, match="unknown config key"):
        load_run_config(None, overrides={"speed": "11"})


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig(strategy="fancy")
    with pytest.raises(UsageError):
        RunConfig(label_set="ge09")
    with pytest.raises(UsageError):
        RunConfig(seeds=())
    with pytest.raises(UsageError):
        RunConfig(select_by="loss")
    with pytest.raises(UsageError):
        RunConfig(epochs=-1)
    with pytest.raises(UsageError):
        RunConfig(batch_size=0)


def test_learning_rate_resolution():
    assert RunConfig(encoder="toy").resolved_learning_rate == 1e-3
    assert RunConfig(encoder="prajjwal1/bert-tiny").resolved_learning_rate == 1e-5
    assert RunConfig(encoder="toy", learning_rate=0.5).resolved_learning_rate == 0.5


# --------------------------------------------------------------------------
# preparation


@pytest.fixture(scope="module")
def fit_setup(ge11_schema):
    docs = [raw.parse() for raw in overfit_corpus()]
    vocab = build_vocab(docs)
    prep = prepare_documents(docs, vocab, ge11_schema)
    return docs, vocab, prep


def test_build_vocab_has_entity_masks(fit_setup):
    _, vocab, _ = fit_setup
    assert mask_token("Protein") in vocab.pieces


def test_drop_report_accounting(ge11_schema):
    docs = [raw.parse() for raw in drop_rate_corpus(19, 1)]
    vocab = build_vocab(docs)
    report = drop_report(prepare_documents(docs, vocab, ge11_schema))
    assert report["sentences"] == 17
    assert report["argument_links"] == 20
    assert report["placed_links"] == 19
    assert report["dropped_by_distance"] == 1
    assert report["drop_rate"] == pytest.approx(0.05)
    assert report["cross_sentence_events"] == 0


def test_examples_jsonl_roundtrip(tmp_path, fit_setup):
    _, _, prep = fit_setup
    path = tmp_path / "examples.jsonl"
    save_examples(path, prep.examples)
    back = load_examples(path)
    assert len(back) == len(prep.examples)
    for a, b in zip(prep.examples, back):
        assert a.sentence == b.sentence
        assert a.frame == b.frame


# --------------------------------------------------------------------------
# training loop


def _tiny_run(**kw):
    base = dict(d=8, k=1, batch_size=4, epochs=1, seeds=(1,), dropout=0.0, layer_dropout=0.0)
    base.update(kw)
    return RunConfig(**base)


def test_same_seed_reproduces_losses_and_weights(ge11_schema, fit_setup):
    _, vocab, prep = fit_setup
    run = _tiny_run(epochs=2)
    a = train_one_seed(run, ge11_schema, vocab, prep.examples, seed=3)
    b = train_one_seed(run, ge11_schema, vocab, prep.examples, seed=3)
    assert [s.loss for s in a.log] == [s.loss for s in b.log]
    for key, va in a.model.state_dict().items():
        assert torch.equal(va, b.model.state_dict()[key])


def test_different_seeds_differ_at_initialization(ge11_schema, fit_setup):
    _, vocab, prep = fit_setup
    run = _tiny_run(epochs=0)
    a = train_one_seed(run, ge11_schema, vocab, prep.examples, seed=1)
    b = train_one_seed(run, ge11_schema, vocab, prep.examples, seed=2)
    assert any(
        not torch.equal(va, b.model.state_dict()[key])
        for key, va in a.model.state_dict().items()
    )


def test_zero_epochs_returns_the_initialization(ge11_schema, fit_setup):
    _, vocab, prep = fit_setup
    run = _tiny_run(epochs=0)
    seed_everything(9)
    reference = build_model(run, ge11_schema, vocab)
    result = train_one_seed(run, ge11_schema, vocab, prep.examples, seed=9)
    assert result.log == []
    assert result.best_epoch == 0
    for key, v in reference.state_dict().items():
        assert torch.equal(v, result.model.state_dict()[key])


def test_empty_training_set_is_a_usage_error(ge11_schema, fit_setup):
    _, vocab, _ = fit_setup
    with pytest.raises(UsageError):
        train_one_seed(_tiny_run(), ge11_schema, vocab, [], seed=1)


def test_huge_learning_rate_diverges(ge11_schema, fit_setup):
    _, vocab, prep = fit_setup
    run = _tiny_run(epochs=10, learning_rate=1e9)
    with pytest.raises(TrainingDiverged):
        train_one_seed(run, ge11_schema, vocab, prep.examples, seed=1)


def test_dev_selection_tracks_metrics(ge11_schema, fit_setup):
    docs, vocab, prep = fit_setup
    run = _tiny_run(epochs=3, batch_size=2)
    result = train_one_seed(run, ge11_schema, vocab, prep.examples, dev_docs=docs, seed=1)
    assert len(result.log) == 3
    for stat in result.log:
        assert set(stat.dev) == {"trigger_f1", "argument_f1", "event_f1"}
        assert "dev_event_f1" in stat.line()
    assert 0 <= result.best_epoch <= 3
    assert result.best_metric >= result.log[0].dev["event_f1"] or result.best_epoch == 0
    assert not result.model.training


def test_train_run_covers_all_seeds(ge11_schema, fit_setup):
    _, vocab, prep = fit_setup
    lines = []
    results = train_run(
        _tiny_run(epochs=0, seeds=(1, 2)), ge11_schema, vocab, prep.examples, log_fn=lines.append
    )
    assert [r.seed for r in results] == [1, 2]
    assert lines == ["seed 1", "seed 2"]


# --------------------------------------------------------------------------
# prediction


def test_shift_events_rebases_and_preserves_sharing():
    inner_tr = TriggerMention("t1", EventType.Phos, 5, 10, "aaaaa")
    outer_tr = TriggerMention("t2", EventType.PoRe, 0, 3, "bbb")
    third_tr = TriggerMention("t3", EventType.NeRe, 20, 24, "cccc")
    ent = EntityMention("T1", "Protein", 12, 16, "dddd")
    inner = BuiltEvent(EventType.Phos, inner_tr, (ent,))
    outers = [
        BuiltEvent(EventType.PoRe, outer_tr, (inner,)),
        BuiltEvent(EventType.NeRe, third_tr, (inner,), cause=ent),
    ]
    shifted = _shift_events(outers, 100)
    assert shifted[0].trigger.start == 100
    assert shifted[0].themes[0].trigger.end == 110
    assert shifted[1].cause.start == 112
    # the shared sub-event stays one object after shifting
    assert shifted[0].themes[0] is shifted[1].themes[0]
    # originals are untouched
    assert outers[0].trigger.start == 0


def test_predict_document_rebases_to_document_coordinates(ge11_schema, fit_setup):
    _, vocab, _ = fit_setup
    raws = overfit_corpus()
    text = raws[0].txt + " " + raws[1].txt
    doc = parse_document(text, raws[0].a1, "", doc_id="joined")
    seed_everything(2)
    model = build_model(_tiny_run(), ge11_schema, vocab)
    pred = predict_document(model, doc, vocab)
    assert pred.doc_id == "joined"
    assert pred.triggers, "untrained tagger should still emit some trigger runs"
    for t in pred.triggers:
        assert doc.text[t.start : t.end] == t.surface
    first_len = len(raws[0].txt)
    assert any(t.start >= first_len for t in pred.triggers)

    def spans_ok(ev):
        assert doc.text[ev.trigger.start : ev.trigger.end] == ev.trigger.surface
        for arg in ev.themes + ((ev.cause,) if ev.cause is not None else ()):
            if isinstance(arg, BuiltEvent):
                spans_ok(arg)
            else:
                assert doc.text[arg.start : arg.end] == arg.surface

    for ev in pred.events:
        spans_ok(ev)


def test_model_file_roundtrip_through_load_model(tmp_path, ge11_schema, fit_setup):
    _, vocab, _ = fit_setup
    seed_everything(4)
    model = build_model(_tiny_run(), ge11_schema, vocab)
    path = tmp_path / "m.pt"
    save_checkpoint(path, model, vocab)
    back = load_model(path, vocab)
    assert not back.training
    for key, v in model.state_dict().items():
        assert torch.equal(v, back.state_dict()[key])


def test_evaluate_model_reports_micro_sections(ge11_schema, fit_setup):
    docs, vocab, _ = fit_setup
    seed_everything(5)
    model = build_model(_tiny_run(), ge11_schema, vocab)
    report = evaluate_model(model, docs[:2], vocab)
    for task in ("trigger", "argument", "event"):
        assert MICRO in report.section(task)


def test_ablation_table_formatting():
    report = ScoreReport(mode="approximate_recursive")
    for section in (report.triggers, report.arguments, report.events):
        section[MICRO] = Tally(tp=1)
    rows = {"none": aggregate_runs([report, report])}
    table = ablation_table(rows)
    assert "Setting" in table and "Eve(%)" in table
    assert "none" in table
    assert "100.00(±0.00)" in table
