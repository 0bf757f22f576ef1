"""Pipeline driver: stage ordering, file layout, config handling."""
import json
import subprocess
import sys

import pytest

from privacy_stories.cli import main as cli_main

from conftest import FIXTURES, run_pipeline


def test_run_dir_required(capsys):
    assert cli_main(["evaluate"]) == 1
    assert "--run-dir is required" in capsys.readouterr().err


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        cli_main(["frobnicate"])


def test_ingest_requires_docs(tmp_path, capsys):
    assert cli_main(["ingest", "--run-dir", str(tmp_path / "run")]) == 1
    assert "--docs is required" in capsys.readouterr().err


def test_annotate_needs_ingest_first(tmp_path, capsys):
    run = tmp_path / "run"
    run.mkdir()
    assert cli_main(["annotate", "--run-dir", str(run)]) == 1
    assert "run `ingest` first" in capsys.readouterr().err


def test_evaluate_needs_annotate_first(tmp_path, capsys):
    run = tmp_path / "run"
    rc = cli_main(
        ["ingest", "--run-dir", str(run), "--docs", str(FIXTURES / "corpus"),
         "--gold", str(FIXTURES / "gold.json")]
    )
    assert rc == 0
    assert cli_main(["evaluate", "--run-dir", str(run)]) == 1
    assert "run `annotate` first" in capsys.readouterr().err


def test_annotate_replay_needs_store(tmp_path, capsys):
    run = tmp_path / "run"
    cli_main(["ingest", "--run-dir", str(run), "--docs", str(FIXTURES / "corpus")])
    assert cli_main(["annotate", "--run-dir", str(run), "--replay"]) == 1
    assert "replay mode needs --store" in capsys.readouterr().err


def test_annotate_record_needs_store(tmp_path, capsys):
    run = tmp_path / "run"
    cli_main(
        ["ingest", "--run-dir", str(run), "--docs", str(FIXTURES / "corpus"),
         "--gold", str(FIXTURES / "gold.json")]
    )
    assert cli_main(["annotate", "--run-dir", str(run), "--record"]) == 1
    assert "--record needs --store" in capsys.readouterr().err


def test_ingest_bad_gold_lists_violations(tmp_path, capsys):
    gold = json.loads((FIXTURES / "gold.json").read_text())
    first = next(iter(gold))
    gold[first]["actions"].append("Made Up Action")
    gold[first]["data_types"].append("No Such Type")
    bad_path = tmp_path / "gold_bad.json"
    bad_path.write_text(json.dumps(gold))

    rc = cli_main(
        ["ingest", "--run-dir", str(tmp_path / "run"),
         "--docs", str(FIXTURES / "corpus"), "--gold", str(bad_path)]
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert "gold annotations invalid (2 problems)" in err
    assert "Made Up Action" in err
    assert "No Such Type" in err


def test_pipeline_writes_expected_layout(pipeline_run):
    for name in ("manifest.json", "taxonomy.json", "run.json", "report.json", "report.csv"):
        assert (pipeline_run / name).is_file(), name
    assert len(list((pipeline_run / "prompts").glob("*.json"))) == 25
    assert len(list((pipeline_run / "responses").glob("*.txt"))) == 50
    assert len(list((pipeline_run / "annotations").glob("*.json"))) == 50

    meta = json.loads((pipeline_run / "run.json").read_text())
    assert meta["run_id"] == "run"
    assert meta["document_count"] == 25
    assert meta["gold_document_count"] == 25
    assert meta["model_name"] == "fixture-model"
    assert meta["response_indices"] == [0, 1]
    assert set(meta["fingerprints"]) == {
        p.stem for p in (pipeline_run / "prompts").glob("*.json")
    }


def test_pipeline_reruns_byte_identical(tmp_path):
    a = run_pipeline(tmp_path / "a")
    b = run_pipeline(tmp_path / "b")
    rel_paths = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert rel_paths == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for rel in rel_paths:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_evaluate_missing_response_index(run_copy, capsys):
    assert cli_main(
        ["evaluate", "--run-dir", str(run_copy), "--response-index", "5"]
    ) == 1
    assert "run `annotate` with enough" in capsys.readouterr().err


def test_taxonomy_check_output(capsys):
    assert cli_main(["taxonomy-check"]) == 0
    out = capsys.readouterr().out
    assert "pact-ext-1.0" in out
    assert "actions: 3 labels" in out
    assert "data_types: 50 labels" in out
    assert "purposes: 26 labels" in out


def test_config_file_supplies_settings(tmp_path, capsys):
    run = tmp_path / "run"
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "run_dir": str(run),
                "docs": str(FIXTURES / "corpus"),
                "gold": str(FIXTURES / "gold.json"),
            }
        )
    )
    assert cli_main(["ingest", "--config", str(config)]) == 0
    assert (run / "manifest.json").is_file()
    assert "25 documents" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps({"run_dir": str(tmp_path / "from-config"), "docs": "/nonexistent"})
    )
    rc = cli_main(
        ["ingest", "--config", str(config),
         "--run-dir", str(tmp_path / "from-flag"),
         "--docs", str(FIXTURES / "corpus")]
    )
    assert rc == 0
    assert (tmp_path / "from-flag" / "manifest.json").is_file()
    assert not (tmp_path / "from-config").exists()


def test_missing_config_file(capsys):
    assert cli_main(["taxonomy-check", "--config", "/nonexistent.json"]) == 1
    assert "does not exist" in capsys.readouterr().err


def test_export_sft_cli(run_copy, capsys):
    rc = cli_main(
        ["export-sft", "--run-dir", str(run_copy), "--heldout-count", "10"]
    )
    assert rc == 0
    assert "15 train records, 10 heldout documents" in capsys.readouterr().err
    assert len((run_copy / "sft.jsonl").read_text().splitlines()) == 15
    heldout = json.loads((run_copy / "sft.heldout.json").read_text())
    assert len(heldout["heldout_document_ids"]) == 10
    assert (run_copy / "sft.tuning-config.json").is_file()


def test_export_dpo_needs_review_sessions(run_copy, capsys):
    assert cli_main(["export-dpo", "--run-dir", str(run_copy)]) == 1
    assert "no preference choices recorded" in capsys.readouterr().err


def test_export_dpo_cli(reviewed_run, capsys):
    run_dir, _ = reviewed_run
    assert cli_main(["export-dpo", "--run-dir", str(run_dir)]) == 0
    assert "50 records" in capsys.readouterr().err
    rows = [
        json.loads(line)
        for line in (run_dir / "preferences.jsonl").read_text().splitlines()
    ]
    assert len(rows) == 50
    keys = [(r["document_id"], r["reviewer_id"]) for r in rows]
    assert keys == sorted(keys)
    assert all(r["chosen"] != r["rejected"] for r in rows)


def test_console_script_runs():
    result = subprocess.run(
        ["privacy-stories", "taxonomy-check"],
        capture_output=True, text=True, timeout=60,
    )
    assert result.returncode == 0
    assert "labels" in result.stdout
