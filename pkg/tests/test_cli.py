import json

import numpy as np
import pytest

from gotcha.cli import dispatch
from gotcha.gallery import gen_synthetic, export_jsonl, load_packed
from gotcha.training import load_checkpoint
from gotcha.witness import compute_relevance


@pytest.fixture()
def workspace(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    gallery = tmp_path / "g.bin"
    assert dispatch(
        [
            "gen-synthetic", "--n", "80", "--attrs", "12", "--feat-dim", "8",
            "--noise", "0.05", "--seed", "7", "--out", str(gallery),
        ]
    ) == 0
    capsys.readouterr()
    return tmp_path, gallery


def _train(tmp_path, gallery, out, extra=()):
    return dispatch(
        [
            "train", "--gallery", str(gallery), "--epochs", "1",
            "--episodes-per-epoch", "12", "--batch", "6",
            "--eval-episodes", "5", "--seed", "3", "--out", str(out), *extra,
        ]
    )


def test_no_arguments_prints_usage(capsys):
    assert dispatch([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_is_usage_error(capsys):
    assert dispatch(["train", "--bogus"]) == 1


def test_smoke_path_gen_train_eval(workspace, capsys):
    tmp_path, gallery = workspace
    ckpt = tmp_path / "model.ckpt"
    assert _train(tmp_path, gallery, ckpt) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    first = json.loads(lines[0])
    assert first["epoch"] == 0
    assert "loss" in first and "percentile_by_round" in first

    report = tmp_path / "report.json"
    code = dispatch(
        [
            "eval", "--gallery", str(gallery), "--ckpt", str(ckpt),
            "--episodes", "10", "--seed", "1", "--report", str(report),
        ]
    )
    assert code == 0
    payload = json.loads(report.read_text())
    assert len(payload["percentile_by_round"]) == 5


def test_negative_margin_is_validation_error(workspace, capsys):
    tmp_path, gallery = workspace
    code = dispatch(
        ["train", "--gallery", str(gallery), "--margin", "-1",
         "--out", str(tmp_path / "x.ckpt")]
    )
    assert code == 2
    assert "margin" in capsys.readouterr().err


def test_missing_gallery_is_data_error(tmp_path):
    assert dispatch(
        ["eval", "--gallery", str(tmp_path / "none.bin"), "--ckpt", "x"]
    ) == 2


def test_ingest_round_trip(workspace, capsys):
    tmp_path, _ = workspace
    g = gen_synthetic(10, 4, 3, noise=0.1, seed=2)
    jsonl = tmp_path / "g.jsonl"
    export_jsonl(g, jsonl)
    packed = tmp_path / "ingested.bin"
    assert dispatch(["ingest", "--in", str(jsonl), "--out", str(packed)]) == 0
    assert load_packed(packed).equals(g)


def test_baseline_command(workspace, capsys):
    _, gallery = workspace
    assert dispatch(
        ["baseline", "--gallery", str(gallery), "--flip-prob", "0.0",
         "--targets", "20", "--seed", "1"]
    ) == 0
    payload = json.loads(capsys.readouterr().out.strip())
    assert payload["upper_mean"] >= payload["expectation_mean"] >= payload["lower_mean"]


def test_simulate_deterministic_and_recountable(workspace, capsys):
    tmp_path, gallery = workspace
    ckpt = tmp_path / "model.ckpt"
    assert _train(tmp_path, gallery, ckpt) == 0
    capsys.readouterr()

    args = ["simulate", "--ckpt", str(ckpt), "--gallery", str(gallery), "--seed", "11"]
    assert dispatch(args) == 0
    first = capsys.readouterr().out
    assert dispatch(args) == 0
    second = capsys.readouterr().out
    assert first == second

    g = load_packed(gallery)
    target_id = first.splitlines()[0].split()[-1]
    target = g.record(g.index_of(target_id))
    for line in first.splitlines():
        if line.startswith("round"):
            parts = line.split()
            cand = g.record(g.index_of(parts[3]))
            counted = int(parts[5].split("/")[0])
            expected = int(
                np.sum(compute_relevance(cand.attributes, target.attributes) > 0)
            )
            assert counted == expected


def test_simulate_with_target_id(workspace, capsys):
    tmp_path, gallery = workspace
    ckpt = tmp_path / "model.ckpt"
    assert _train(tmp_path, gallery, ckpt) == 0
    g = load_packed(gallery)
    capsys.readouterr()
    assert dispatch(
        ["simulate", "--ckpt", str(ckpt), "--gallery", str(gallery),
         "--target-id", g.ids[4], "--seed", "2"]
    ) == 0
    assert g.ids[4] in capsys.readouterr().out


def test_simulate_unknown_target_errors(workspace, capsys):
    tmp_path, gallery = workspace
    ckpt = tmp_path / "model.ckpt"
    assert _train(tmp_path, gallery, ckpt) == 0
    assert dispatch(
        ["simulate", "--ckpt", str(ckpt), "--gallery", str(gallery),
         "--target-id", "missing"]
    ) == 2


def test_env_variable_defaults(workspace, monkeypatch, capsys):
    tmp_path, gallery = workspace
    monkeypatch.setenv("GOTCHA_MARGIN", "3.5")
    ckpt = tmp_path / "env.ckpt"
    assert dispatch(
        ["train", "--gallery", str(gallery), "--epochs", "0",
         "--eval-episodes", "0", "--out", str(ckpt)]
    ) == 0
    assert load_checkpoint(ckpt).config.margin == 3.5


def test_flag_beats_env_variable(workspace, monkeypatch):
    tmp_path, gallery = workspace
    monkeypatch.setenv("GOTCHA_MARGIN", "3.5")
    ckpt = tmp_path / "flag.ckpt"
    assert dispatch(
        ["train", "--gallery", str(gallery), "--epochs", "0", "--margin", "1.25",
         "--eval-episodes", "0", "--out", str(ckpt)]
    ) == 0
    assert load_checkpoint(ckpt).config.margin == 1.25


def test_help_documents_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        dispatch(["train", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "0.5,0.3,0.2,0.1,0.0" in text
    assert "2.0" in text
    assert "0.001" in text
    assert "default 5" in text


def test_compare_command(workspace, capsys):
    tmp_path, gallery = workspace
    report = tmp_path / "cmp.json"
    code = dispatch(
        [
            "compare", "--gallery", str(gallery), "--seeds", "1,2",
            "--rounds", "3", "--schedule", "0.5,0.2,0.0",
            "--epochs", "1", "--episodes-per-epoch", "8", "--batch", "4",
            "--eval-episodes", "6", "--report", str(report),
        ]
    )
    assert code == 0
    table = json.loads(report.read_text())
    assert set(table) == {"progressive", "full", "full-no-attr"}


def test_bad_schedule_is_validation_error(workspace):
    tmp_path, gallery = workspace
    code = dispatch(
        ["train", "--gallery", str(gallery), "--schedule", "0.1,0.5",
         "--out", str(tmp_path / "x.ckpt")]
    )
    assert code in (1, 2)  # rejected either at parse or validation time
