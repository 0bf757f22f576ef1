"""One-shot smoke test against a live model endpoint.

Not part of the test suite: it needs OPENAI_BASE_URL (and usually
OPENAI_API_KEY) pointing at an OpenAI-compatible chat completions server,
spends real tokens, and its output varies with the model. Run it manually
after provider or prompt changes:

    python tools/live_smoke.py --docs tests/fixtures/corpus \\
        --gold tests/fixtures/gold.json --model <name> --limit 3

It ingests a few documents, records live responses into a throwaway store,
parses and scores them, and prints the per-document label counts plus the
overall report line. Exit code 0 means the round trip worked end to end;
it makes no claim about annotation quality.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from privacy_stories.cli import main as cli_main
from privacy_stories.corpus import document_id_for


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", default="tests/fixtures/corpus")
    parser.add_argument("--gold", default="tests/fixtures/gold.json")
    parser.add_argument("--model", default="default")
    parser.add_argument("--limit", type=int, default=3, help="documents to send")
    parser.add_argument("--temperature", type=float, default=None)
    args = parser.parse_args()

    if not os.environ.get("OPENAI_BASE_URL"):
        print("live_smoke: set OPENAI_BASE_URL to a chat completions endpoint")
        return 2

    with tempfile.TemporaryDirectory(prefix="live-smoke-") as scratch:
        scratch_path = Path(scratch)
        docs_dir = scratch_path / "docs"
        docs_dir.mkdir()
        copied = 0
        for app_dir in sorted(Path(args.docs).iterdir()):
            if copied >= args.limit or not app_dir.is_dir():
                continue
            dest = docs_dir / app_dir.name
            dest.mkdir()
            for file in sorted(app_dir.iterdir()):
                dest.joinpath(file.name).write_text(
                    file.read_text(encoding="utf-8"), encoding="utf-8"
                )
            copied += 1

        gold = json.loads(Path(args.gold).read_text(encoding="utf-8"))
        kept_ids = {
            document_id_for(file.relative_to(docs_dir))
            for app_dir in sorted(docs_dir.iterdir())
            for file in app_dir.iterdir()
        }
        subset = {k: v for k, v in gold.items() if k in kept_ids}
        gold_path = scratch_path / "gold.json"
        gold_path.write_text(json.dumps(subset, indent=2))

        run = scratch_path / "run"
        rc = cli_main(
            ["ingest", "--run-dir", str(run), "--docs", str(docs_dir),
             "--gold", str(gold_path)]
        )
        if rc != 0:
            return rc

        annotate = [
            "annotate", "--run-dir", str(run),
            "--store", str(scratch_path / "store"), "--record",
            "--responses", "1", "--model", args.model, "--jobs", "2",
        ]
        if args.temperature is not None:
            annotate += ["--temperature", str(args.temperature)]
        rc = cli_main(annotate)
        if rc != 0:
            return rc

        rc = cli_main(["evaluate", "--run-dir", str(run)])
        if rc != 0:
            return rc

        report = json.loads((run / "report.json").read_text(encoding="utf-8"))
        for doc_id, entry in sorted(report["per_document"].items()):
            micro = entry["micro"]
            print(
                f"live_smoke: {doc_id}: {micro['predictions']} labels predicted, "
                f"f1 {micro['f1']:.3f}"
            )
        overall = report["overall"]["micro"]
        print(
            f"live_smoke: overall micro f1 {overall['f1']:.3f} over "
            f"{len(report['per_document'])} documents; full report in the "
            f"temporary run directory was discarded"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
