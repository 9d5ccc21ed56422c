import json
import subprocess
import sys

import pytest

from webquality.cli import build_parser, main
from webquality.ingest import LABELS_FILE

SUBCOMMANDS = ["synth", "ingest-check", "train", "predict", "rank", "evaluate", "run-task"]


def copy_without(src, dst, skip):
    dst.mkdir()
    for p in src.iterdir():
        if p.name not in skip:
            (dst / p.name).write_bytes(p.read_bytes())
    return dst


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help_exits_zero(command, capsys):
    assert main([command, "--help"]) == 0
    assert "usage:" in capsys.readouterr().out


def test_help_documents_defaults(capsys):
    main(["run-task", "--help"])
    text = capsys.readouterr().out
    for default in ("0.25", "(default 2)", "(default 5)", "(default 100)", "0.04", "(default 1)"):
        assert default in text


def test_unknown_flag_is_usage_error(capsys):
    assert main(["run-task", "--no-such-flag"]) == 1
    assert main([]) == 1
    assert main(["evaluate", "--task", "7"]) == 1


def test_missing_required_directory_is_usage_error(capsys):
    assert main(["run-task"]) == 1
    assert "--train-dir" in capsys.readouterr().err


def test_missing_labels_is_data_error(small_corpus, tmp_path, capsys):
    train, _ = small_corpus
    bare = copy_without(train, tmp_path / "bare", {LABELS_FILE})
    code = main(["train", "--train-dir", str(bare), "--model-dir", str(tmp_path / "m")])
    assert code == 2
    assert str(bare / LABELS_FILE) in capsys.readouterr().err


def test_missing_directory_is_data_error(tmp_path):
    assert main(["ingest-check", str(tmp_path / "absent")]) == 2


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"train_dir": "x", "bogus": 1}))
    assert main(["run-task", "--config", str(cfg)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_invalid_classifier_setting(small_corpus, tmp_path):
    train, test = small_corpus
    code = main(["run-task", "--train-dir", str(train), "--test-dir", str(test),
                 "--out-dir", str(tmp_path), "--confidence-factor", "1.5"])
    assert code == 1


def test_synth_and_ingest_check(tmp_path, capsys):
    assert main(["synth", "--out-dir", str(tmp_path), "--n-train", "20", "--n-test", "10", "--vocab-size", "400"]) == 0
    capsys.readouterr()
    assert main(["ingest-check", str(tmp_path / "train")]) == 0
    out = capsys.readouterr().out
    assert "hosts\t20" in out and "labelled_hosts\t20" in out


def test_run_task_writes_outputs_and_is_reproducible(small_corpus, tmp_path):
    train, test = small_corpus
    for name in ("a", "b"):
        assert main(["run-task", "--task", "2", "--train-dir", str(train), "--test-dir", str(test),
                     "--out-dir", str(tmp_path / name)]) == 0
    for f in ("predictions.tsv", "genres.tsv", "category_rankings.tsv", "ranking.tsv", "report.tsv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f
    assert (tmp_path / "a" / "report.tsv").read_text().startswith("#format=ndcg-report/1")


def test_config_file_drives_run(small_corpus, tmp_path):
    train, test = small_corpus
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"train_dir": str(train), "test_dir": str(test), "out_dir": "out", "task": 3}))
    assert main(["run-task", "--config", str(cfg)]) == 0
    assert "multilingual" in (tmp_path / "out" / "report.tsv").read_text()


def test_stepwise_chain_matches_run_task(small_corpus, tmp_path):
    train, test = small_corpus
    model, out, ref = tmp_path / "model", tmp_path / "out", tmp_path / "ref"
    assert main(["train", "--train-dir", str(train), "--model-dir", str(model)]) == 0
    assert (model / "ensemble.json").exists()
    assert main(["predict", "--test-dir", str(test), "--model-dir", str(model), "--out-dir", str(out)]) == 0
    assert main(["rank", "--out-dir", str(out)]) == 0
    assert main(["evaluate", "--task", "2", "--test-dir", str(test), "--out-dir", str(out)]) == 0
    assert main(["run-task", "--task", "2", "--train-dir", str(train), "--test-dir", str(test),
                 "--out-dir", str(ref)]) == 0
    for f in ("predictions.tsv", "genres.tsv", "ranking.tsv", "report.tsv"):
        assert (out / f).read_bytes() == (ref / f).read_bytes(), f


def test_task1_evaluate_from_predictions(small_corpus, tmp_path, capsys):
    train, test = small_corpus
    model, out = tmp_path / "model", tmp_path / "out"
    assert main(["train", "--task", "1", "--train-dir", str(train), "--model-dir", str(model)]) == 0
    assert main(["predict", "--test-dir", str(test), "--model-dir", str(model), "--out-dir", str(out)]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--task", "1", "--test-dir", str(test), "--out-dir", str(out)]) == 0
    assert "average\t" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "webquality", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run-task" in proc.stdout


def test_parser_lists_all_subcommands():
    text = build_parser().format_help()
    for command in SUBCOMMANDS:
        assert command in text
