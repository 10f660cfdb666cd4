"""End-to-end command-line pipeline and its exit-code contract."""

from __future__ import annotations

import json

import pytest

from bioevents.cli import main
from bioevents.standoff import read_document
from bioevents.synth import overfit_corpus, write_standoff

TRAIN_FLAGS = [
    "--d", "8",
    "--epochs", "25",
    "--batch-size", "2",
    "--dropout", "0.0",
    "--layer-dropout", "0.0",
    "--seeds", "1,2",
]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One prepare -> train -> predict chain shared by the read-only tests."""
    root = tmp_path_factory.mktemp("cli")
    paths = {
        "root": root,
        "train": root / "train",
        "dev": root / "dev",
        "prep": root / "prep",
        "run": root / "run",
        "pred1": root / "pred1",
        "pred2": root / "pred2",
    }
    write_standoff(overfit_corpus(), paths["train"])
    write_standoff(overfit_corpus(), paths["dev"])
    assert main([
        "prepare",
        "--train", str(paths["train"]),
        "--dev", str(paths["dev"]),
        "--out-dir", str(paths["prep"]),
    ]) == 0
    assert main([
        "train",
        "--data", str(paths["prep"]),
        "--out-dir", str(paths["run"]),
        *TRAIN_FLAGS,
    ]) == 0
    for seed, out in ((1, "pred1"), (2, "pred2")):
        assert main([
            "predict",
            "--checkpoint", str(paths["run"] / f"checkpoint_seed{seed}.pt"),
            "--input", str(paths["train"]),
            "--out-dir", str(paths[out]),
        ]) == 0
    return paths


def test_prepare_writes_dataset_and_report(workspace):
    prep = workspace["prep"]
    for name in ("train.jsonl", "dev.jsonl", "vocab.json", "schema.json", "meta.json", "report.json"):
        assert (prep / name).exists()
    report = json.loads((prep / "report.json").read_text())
    assert report["train"]["sentences"] == 8
    assert report["train"]["dropped_by_distance"] == 0
    assert report["train"]["placed_links"] == report["train"]["argument_links"]
    meta = json.loads((prep / "meta.json").read_text())
    assert meta["label_set"] == "ge11"
    assert meta["dev_dir"].endswith("dev")


def test_train_writes_checkpoints_and_summary(workspace):
    run = workspace["run"]
    summary = json.loads((run / "train_summary.json").read_text())
    assert set(summary) == {"1", "2"}
    for seed in (1, 2):
        assert (run / f"checkpoint_seed{seed}.pt").exists()
        assert summary[str(seed)]["checkpoint"] == f"checkpoint_seed{seed}.pt"
    assert (run / "vocab.json").exists()
    log = (run / "train_log.txt").read_text()
    assert "seed 1" in log and "epoch" in log and "dev_event_f1" in log


def test_predictions_are_parseable_standoff(workspace):
    a2s = sorted(workspace["pred1"].glob("*.a2"))
    assert len(a2s) == 8
    for a2 in a2s:
        doc = read_document(workspace["train"] / f"{a2.stem}.txt", a2_path=a2)
        assert not doc.skipped


def test_predict_is_deterministic(workspace):
    again = workspace["root"] / "pred1_again"
    assert main([
        "predict",
        "--checkpoint", str(workspace["run"] / "checkpoint_seed1.pt"),
        "--input", str(workspace["train"]),
        "--out-dir", str(again),
    ]) == 0
    for a2 in sorted(workspace["pred1"].glob("*.a2")):
        assert (again / a2.name).read_bytes() == a2.read_bytes()


def test_score_single_run(workspace, capsys):
    out = workspace["root"] / "score1"
    assert main([
        "score",
        "--pred", str(workspace["pred1"]),
        "--gold", str(workspace["train"]),
        "--out-dir", str(out),
    ]) == 0
    shown = capsys.readouterr().out
    assert "[event]" in shown and "micro" in shown
    payload = json.loads((out / "score.json").read_text())
    assert payload["mode"] == "approximate_recursive"
    assert 0.0 <= payload["events"]["micro"]["f1"] <= 1.0


def test_score_multiple_runs_aggregates(workspace, capsys):
    out = workspace["root"] / "score2"
    assert main([
        "score",
        "--pred", str(workspace["pred1"]),
        "--pred", str(workspace["pred2"]),
        "--gold", str(workspace["train"]),
        "--mode", "strict",
        "--out-dir", str(out),
    ]) == 0
    assert "runs: 2" in capsys.readouterr().out
    agg = json.loads((out / "score_aggregate.json").read_text())
    assert agg["runs"] == 2 and agg["mode"] == "strict"
    runs = json.loads((out / "score_runs.json").read_text())
    assert len(runs) == 2


def test_ablate_runs_and_is_deterministic(workspace, capsys):
    argv = [
        "ablate",
        "--data", str(workspace["prep"]),
        "--strategies", "none,average",
        "--epochs", "1",
        "--seeds", "1",
        "--d", "8",
    ]
    out_a, out_b = workspace["root"] / "abl_a", workspace["root"] / "abl_b"
    assert main(argv + ["--out-dir", str(out_a)]) == 0
    assert "Setting" in capsys.readouterr().out
    assert main(argv + ["--out-dir", str(out_b)]) == 0
    table = (out_a / "ablation.txt").read_text()
    assert table == (out_b / "ablation.txt").read_text()
    assert table.splitlines()[1].startswith("none")
    rows = json.loads((out_a / "ablation.json").read_text())
    assert set(rows) == {"none", "average"}


def test_predict_handles_documents_without_entities(workspace, tmp_path):
    plain = tmp_path / "plain"
    plain.mkdir()
    (plain / "doc1.txt").write_text("we observed the results in this assay .")
    out = tmp_path / "pred"
    assert main([
        "predict",
        "--checkpoint", str(workspace["run"] / "checkpoint_seed1.pt"),
        "--input", str(plain),
        "--out-dir", str(out),
    ]) == 0
    a2 = out / "doc1.a2"
    assert a2.exists()
    read_document(plain / "doc1.txt", a2_path=a2)  # must parse back


def test_usage_errors_exit_1(workspace, capsys):
    assert main([]) == 1
    assert main(["train"]) == 1  # missing required --data
    assert main([
        "ablate", "--data", str(workspace["prep"]), "--strategies", "bogus",
    ]) == 1
    assert "UsageError" in capsys.readouterr().err
    assert main(["prepare", "--train", str(workspace["train"]), "--epochs", "soon"]) == 1


def test_data_errors_exit_2(workspace, tmp_path, capsys):
    assert main(["prepare", "--train", str(tmp_path / "nowhere")]) == 2
    err = capsys.readouterr().err
    assert err.startswith("bioevents: error:")
    # prepared dataset directory missing required files
    assert main(["train", "--data", str(tmp_path)]) == 2
    # missing vocabulary next to the checkpoint
    lone = tmp_path / "lone"
    lone.mkdir()
    ckpt = workspace["run"] / "checkpoint_seed1.pt"
    (lone / "model.pt").write_bytes(ckpt.read_bytes())
    assert main([
        "predict", "--checkpoint", str(lone / "model.pt"),
        "--input", str(workspace["train"]), "--out-dir", str(tmp_path / "o"),
    ]) == 2
    # prediction directory lacking one .a2
    empty = tmp_path / "empty_pred"
    empty.mkdir()
    assert main(["score", "--pred", str(empty), "--gold", str(workspace["train"])]) == 2
    assert "missing prediction file" in capsys.readouterr().err


def test_divergence_exits_3(workspace, capsys):
    assert main([
        "train",
        "--data", str(workspace["prep"]),
        "--out-dir", str(workspace["root"] / "diverged"),
        "--epochs", "3",
        "--seeds", "1",
        "--learning-rate", "1e9",
    ]) == 3
    assert "TrainingDiverged" in capsys.readouterr().err
